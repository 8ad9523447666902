#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "eleson/metrics.hpp"
#include "eleson/model.hpp"

namespace eleson {

// preprocessed tensors for one labeled window
struct PreparedItem {
    Eigen::MatrixXf pooled_motion;   // (T/pool) x 6, standardized
    Eigen::MatrixXf pooled_mag;      // (T/pool) x 1, normalized magnetic input
    Eigen::MatrixXf motion_flat;     // (T*6) x 1 reconstruction target
    int label = 2;
    int vp = -1;
    size_t record = 0;
};

struct TrainOutcome {
    ModelBundle bundle;
    std::vector<double> epoch_train_loss;  // summed total loss per epoch
    std::vector<double> epoch_valid_f1;    // mean F1 at tau = 0
    int best_epoch = -1;
};

// End-to-end training: per step one joint Adam update on the extractors,
// generator, aux classifier and evidence collector, then one adversary
// update against detached magnetic features. Deterministic given the seed.
TrainOutcome train(const TrainConfig& config, const Dataset& train_set, const Dataset& valid_set);

MetricsReport evaluate(const ModelBundle& bundle, const Dataset& dataset, double tau);

// decisions for each window at tau, in record order (batch reference for
// the streaming path)
std::vector<Decision> classify_dataset(const ModelBundle& bundle, const Dataset& dataset, double tau);

// ---- streaming ----

class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::optional<InsSample> next() = 0;
};

class VectorSampleSource : public SampleSource {
public:
    explicit VectorSampleSource(std::vector<InsSample> samples) : samples_(std::move(samples)) {}
    std::optional<InsSample> next() override {
        if (at_ >= samples_.size()) return std::nullopt;
        return samples_[at_++];
    }

private:
    std::vector<InsSample> samples_;
    size_t at_ = 0;
};

struct StreamDecision {
    int window_index = 0;
    Decision decision;
    double wall_ms = 0;
};

// Emits one decision per completed window (stride from the bundle config).
// A sampling gap larger than 1.5 periods invalidates the affected windows,
// which come out as UD with the gap marker set.
std::vector<StreamDecision> infer_stream(const ModelBundle& bundle, SampleSource& source, double tau);

// ---- baseline and calibration ----

TrainOutcome train_baseline_outcome(const TrainConfig& config, const Dataset& train_set,
                                    const Dataset& valid_set, BaselineModel& out_model);
BaselineModel train_baseline(const TrainConfig& config, const Dataset& train_set, const Dataset& valid_set);

// softmax argmax decisions; confidence score is the negated entropy of the
// temperature-scaled distribution
MetricsReport evaluate_baseline(const BaselineModel& model, const Dataset& dataset);

// golden-section search for the NLL-minimizing temperature on [0.05, 20]
double temperature_from_logits(const std::vector<Eigen::Vector3f>& logits, const std::vector<int>& labels);
double temperature_scale(const BaselineModel& model, const Dataset& valid_set);

// ---- bench ----

struct BenchReport {
    std::size_t serialized_bytes = 0;
    long long parameter_count = 0;
    double latency_p50_ms = 0;
    double latency_p95_ms = 0;
};

BenchReport bench(const ModelBundle& bundle, int n_windows = 120);

// session-level k-fold cross-validation
std::vector<MetricsReport> cross_validate(const TrainConfig& config, const Dataset& dataset, int folds);

// helpers shared with tests and the acceptance suite
PreprocStats compute_preproc_stats(const TrainConfig& config, const Dataset& train_set);
std::vector<PreparedItem> prepare_items(const TrainConfig& config, const PreprocStats& stats,
                                        const Dataset& dataset);
Dataset split_sessions(const Dataset& source, double fraction, std::uint64_t seed, Dataset* remainder);

} // namespace eleson
