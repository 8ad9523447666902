#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "eleson/causal.hpp"
#include "eleson/evidential.hpp"
#include "eleson/magnetic.hpp"
#include "eleson/serialize.hpp"
#include "eleson/synth.hpp"

namespace eleson {

// z-score statistics captured from the training split; inference applies the
// identical transform.
struct PreprocStats {
    ChannelStats channels;
    float mag_input_mean = 0.f;  // pooled magnetic-input normalization
    float mag_input_std = 1.f;
};

enum class MagneticInputMode : int {
    Differential = 0,  // first difference of field intensity
    RawIntensity = 1,  // ablation comparator: pooled raw intensity
};

struct TrainConfig {
    double w1 = 0.6;   // reconstruction weight inside the causal loss
    double w2 = 0.3;   // variance-consistency weight inside the causal loss
    double w3 = 0.4;   // magnetic adversarial weight in the total loss
    double w4 = 1.0;   // causal loss weight in the total loss
    double learning_rate = 1e-3;
    int epochs = 12;
    int batch_size = 32;
    std::uint64_t seed = 1;
    double window_seconds = 2.0;
    double stride_seconds = 2.0;
    double sample_rate = 100.0;
    double tau = 0.5;
    bool disable_causal_loss = false;      // drops the w4 term
    bool disable_magnetic_branch = false;  // zero magnetic feature, no adversary
    bool disable_causal_branch = false;    // zero conveyor feature, no causal losses
    bool disable_variance_term = false;    // drops the Dirichlet variance term
    double feature_noise_std = 0.1;        // unobserved-factor noise in the reconstruction term
    int early_stop_patience = 3;
    MagneticInputMode magnetic_input = MagneticInputMode::Differential;
    ModelDims dims;
    bool verbose = false;

    int window_len() const { return static_cast<int>(window_seconds * sample_rate + 0.5); }
    void validate() const;
};

TrainConfig parse_train_config(std::istream& is);
TrainConfig parse_train_config_file(const std::string& path);

// plain-value feature triple produced by inference
struct FeatureBundle {
    Eigen::VectorXf conveyor;
    Eigen::VectorXf behavior;
    Eigen::VectorXf magnetic;
};

// All six parameter sets plus preprocessing stats and the training config.
struct ModelBundle {
    TrainConfig config;
    PreprocStats stats;
    int window_len = 0;

    CausalExtractor causal;
    SignalGenerator generator;
    AuxClassifier aux;
    MagneticFilter magnetic;
    BehaviorAdversary adversary;
    EvidenceCollector evidence;

    void init(const TrainConfig& cfg);

    // parameter sets updated by the joint optimizer step (adversary excluded)
    std::vector<nn::Parameter<Real>*> joint_parameters(bool trained_only = true);
    std::vector<nn::Parameter<Real>*> adversary_parameters();
    std::vector<nn::Parameter<Real>*> all_parameters();

    // ---- frozen-parameter inference ----
    Eigen::MatrixXf pooled_motion_input(const InsWindow& raw) const;
    Eigen::MatrixXf pooled_magnetic_input(const InsWindow& raw) const;
    FeatureBundle extract_features(const InsWindow& raw) const;
    EvidenceVector collect_evidence(const InsWindow& raw) const;
    Decision classify(const InsWindow& raw, double tau) const;
};

std::vector<TensorRecord> bundle_to_records(const ModelBundle& bundle);
ModelBundle bundle_from_records(const std::vector<TensorRecord>& records);
void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& path);

// End-to-end softmax comparison model: same backbone capacity on the raw
// 9-channel window, cross-entropy training, entropy confidence.
struct BaselineModel {
    TrainConfig config;
    PreprocStats stats;
    int window_len = 0;
    TemporalBackbone backbone;
    nn::Dense<Real> head;
    double temperature = 1.0;

    void init(const TrainConfig& cfg);
    std::vector<nn::Parameter<Real>*> parameters();

    Eigen::MatrixXf pooled_input(const InsWindow& raw) const;
    Eigen::Vector3f logits(const InsWindow& raw) const;
};

std::vector<TensorRecord> baseline_to_records(const BaselineModel& model);
BaselineModel baseline_from_records(const std::vector<TensorRecord>& records);

Eigen::Vector3d softmax3(const Eigen::Vector3f& logits, double temperature = 1.0);
double entropy3(const Eigen::Vector3d& p);

} // namespace eleson
