#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "eleson/ins.hpp"

namespace eleson {

struct ClassScore {
    long long tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f1 = 0;
};

// precision/recall with the 0/0 -> 0 convention; F1 = 2PR/(P+R), 0 if both 0
ClassScore score_from_counts(long long tp, long long fp, long long fn);

struct MetricsReport {
    ClassScore elevator;
    ClassScore escalator;
    double mean_f1 = 0;      // average of the two conveyor-class F1 scores
    double auroc = 0.5;      // discriminability of confidence for wrong decisions
    double ud_ratio = 0;
    long long decided = 0;
    long long total = 0;
    std::array<std::array<long long, 3>, 3> confusion{};  // [true][predicted], decided only
    double latency_p50_ms = 0;
    double latency_p95_ms = 0;
};

void print_report(std::ostream& os, const MetricsReport& r);

// One evaluated window: what was predicted (when decided) and the confidence
// score attached to the argmax class regardless of the threshold.
struct WindowOutcome {
    ConveyorState truth = ConveyorState::Neither;
    ConveyorState argmax = ConveyorState::Neither;
    bool decided = true;
    double score = 0;  // higher = more confident
};

// F1 per conveyor class over decided windows (one-vs-rest); UD windows count
// only toward the UD ratio. AUROC treats wrong argmax decisions as positives
// ranked by ascending confidence, tie-averaged (Mann-Whitney form of the
// trapezoidal integral). Degenerate sets (no positives or no negatives)
// report 0.5.
MetricsReport compute_metrics(const std::vector<WindowOutcome>& outcomes);

// AUROC with the convention "higher score means more likely positive".
double auroc_rank(const std::vector<double>& scores, const std::vector<int>& positive);

double percentile(std::vector<double> values, double q);  // q in [0,1], linear interpolation

} // namespace eleson
