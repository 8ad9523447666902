#include "eleson/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace eleson {

ClassScore score_from_counts(long long tp, long long fp, long long fn) {
    ClassScore s;
    s.tp = tp;
    s.fp = fp;
    s.fn = fn;
    s.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

double auroc_rank(const std::vector<double>& scores, const std::vector<int>& positive) {
    if (scores.size() != positive.size()) throw DataError("auroc: size mismatch");
    const size_t n = scores.size();
    long long pos = 0;
    for (int p : positive) pos += p ? 1 : 0;
    const long long neg = static_cast<long long>(n) - pos;
    if (pos == 0 || neg == 0) return 0.5;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // tie-averaged ranks
    double rank_sum_pos = 0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k)
            if (positive[order[k]]) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

MetricsReport compute_metrics(const std::vector<WindowOutcome>& outcomes) {
    MetricsReport r;
    r.total = static_cast<long long>(outcomes.size());

    std::vector<double> scores;
    std::vector<int> wrong;
    scores.reserve(outcomes.size());
    wrong.reserve(outcomes.size());

    for (const auto& o : outcomes) {
        // detection target: was the argmax decision wrong? low confidence
        // should flag it, so rank by negated confidence
        scores.push_back(-o.score);
        wrong.push_back(o.argmax != o.truth ? 1 : 0);
        if (!o.decided) continue;
        ++r.decided;
        r.confusion[static_cast<size_t>(state_code(o.truth))][static_cast<size_t>(state_code(o.argmax))]++;
    }
    r.ud_ratio = r.total > 0 ? 1.0 - static_cast<double>(r.decided) / static_cast<double>(r.total) : 0.0;
    r.auroc = auroc_rank(scores, wrong);

    auto one_vs_rest = [&](ConveyorState cls) {
        const auto c = static_cast<size_t>(state_code(cls));
        long long tp = r.confusion[c][c];
        long long fp = 0, fn = 0;
        for (size_t other = 0; other < 3; ++other) {
            if (other == c) continue;
            fp += r.confusion[other][c];
            fn += r.confusion[c][other];
        }
        return score_from_counts(tp, fp, fn);
    };
    r.elevator = one_vs_rest(ConveyorState::Elevator);
    r.escalator = one_vs_rest(ConveyorState::Escalator);
    r.mean_f1 = 0.5 * (r.elevator.f1 + r.escalator.f1);
    return r;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

void print_report(std::ostream& os, const MetricsReport& r) {
    auto line = [&](const char* name, const ClassScore& s) {
        os << name << ": precision=" << s.precision << " recall=" << s.recall << " f1=" << s.f1
           << " (tp=" << s.tp << " fp=" << s.fp << " fn=" << s.fn << ")\n";
    };
    line("elevator ", r.elevator);
    line("escalator", r.escalator);
    os << "mean_f1=" << r.mean_f1 << " auroc=" << r.auroc << " ud_ratio=" << r.ud_ratio
       << " decided=" << r.decided << "/" << r.total << "\n";
    os << "confusion (rows true, cols predicted, decided only):\n";
    for (int a = 0; a < 3; ++a) {
        os << "  " << state_name(state_from_code(a)) << ":";
        for (int b = 0; b < 3; ++b) os << " " << r.confusion[static_cast<size_t>(a)][static_cast<size_t>(b)];
        os << "\n";
    }
    if (r.latency_p50_ms > 0)
        os << "latency p50=" << r.latency_p50_ms << "ms p95=" << r.latency_p95_ms << "ms\n";
}

} // namespace eleson
