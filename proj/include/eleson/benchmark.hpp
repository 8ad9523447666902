#pragma once

#include "eleson/synth.hpp"

namespace eleson {

// Desk-scale benchmark: training data carries a behavior-class correlation
// and a fixed set of background fields; the test split breaks the
// correlation, introduces behavior kinds unseen in training, and moves to
// unseen background fields. Conveyor dynamics are drawn identically on both
// sides, so only the nuisances shift.
struct BenchmarkSpec {
    std::uint64_t seed = 42;
    int train_windows = 3000;   // before the validation carve-out
    int test_windows = 1000;
    double valid_fraction = 0.12;
    std::array<double, 3> class_mix{0.2, 0.2, 0.6};
};

struct BenchmarkData {
    Dataset train;
    Dataset valid;
    Dataset test;
};

BenchmarkData make_benchmark(const BenchmarkSpec& spec);

// one split with per-class behavior mixtures and a fixed field set
Dataset gen_mixture_dataset(int target_windows, const std::array<double, 3>& mix,
                            const std::array<BehaviorMix, 3>& behavior_by_class,
                            const std::vector<Eigen::Vector3d>& fields, std::uint64_t seed,
                            const GenOptions& options, const std::string& id_prefix);

} // namespace eleson
