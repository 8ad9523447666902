#include "eleson/evidential.hpp"

#include <ostream>

namespace eleson {

ConfidenceVector confidence(const EvidenceVector& e) {
    for (int s = 0; s < 3; ++s)
        if (e.e[s] < 0) throw DataError("evidence values must be non-negative");
    const double denom = EvidenceVector::uncertainty_constant + e.e.sum();
    ConfidenceVector out;
    out.c = e.e / denom;
    out.u = EvidenceVector::uncertainty_constant / denom;
    return out;
}

Decision decide(const ConfidenceVector& c, double tau) {
    if (tau < 0 || tau >= 1) throw ConfigError("confidence threshold must lie in [0, 1)");
    int best = 0;
    for (int s = 1; s < 3; ++s)
        if (c.c[s] > c.c[best]) best = s;  // strict: ties keep the lowest code
    Decision d;
    d.conf = c;
    d.state = state_from_code(best);
    d.confidence = c.c[best];
    d.decided = c.c[best] > tau;
    return d;
}

double dirichlet_variance(const EvidenceVector& e) {
    const Eigen::Vector3d a = e.e.array() + 1.0;
    const double total = a.sum();
    double v = 0;
    for (int s = 0; s < 3; ++s) v += a[s] * (total - a[s]);
    return v / (total * total * (total + 1.0));
}

void write_decision_line(std::ostream& os, int window_index, const Decision& d) {
    os << window_index << ", ";
    if (d.decided)
        os << state_code(d.state);
    else
        os << "UD";
    os << ", " << d.conf.c[0] << ", " << d.conf.c[1] << ", " << d.conf.c[2] << ", " << d.conf.u;
}

} // namespace eleson
