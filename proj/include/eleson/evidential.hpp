#pragma once

#include <iosfwd>
#include <vector>

#include "eleson/backbone.hpp"
#include "eleson/ins.hpp"
#include "eleson/model_dims.hpp"

namespace eleson {

// Per-state support values; the uncertainty constant is pinned to dim(E).
struct EvidenceVector {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    static constexpr double uncertainty_constant = 3.0;
};

// Confidence simplex: u + sum_s c_s == 1.
struct ConfidenceVector {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    double u = 1.0;
};

struct Decision {
    bool decided = false;
    ConveyorState state = ConveyorState::Neither;
    double confidence = 0.0;
    ConfidenceVector conf;
    bool gap = false;  // streaming marker: window invalidated by a source gap
};

// c_s = e_s / (e_u + sum e), u = e_u / (e_u + sum e)
ConfidenceVector confidence(const EvidenceVector& e);

// Highest-confidence state, ties broken by lowest class code; undecided
// unless max(C) strictly exceeds tau.
Decision decide(const ConfidenceVector& c, double tau);

// Variance of the Dirichlet distribution with a_s = e_s + 1.
double dirichlet_variance(const EvidenceVector& e);

// One text line per decision: window_index, state_code|UD, c0, c1, c2, u
void write_decision_line(std::ostream& os, int window_index, const Decision& d);

// ---- evidence collector (three FC layers, ReLU output keeps evidence >= 0) ----

struct EvidenceCollector {
    nn::Dense<Real> fc1, fc2, fc3;

    void init(const ModelDims& d, Rng& rng) {
        fc1.init("ev.fc1", 2 * d.feature_dim, d.ev_hidden1, rng);
        fc2.init("ev.fc2", d.ev_hidden1, d.ev_hidden2, rng);
        // positive output bias so evidence units start alive through the ReLU
        fc3.init("ev.fc3", d.ev_hidden2, 3, rng, 0.5);
    }

    RVar forward(RContext& g, const RVar& state_feature) const {
        auto& self = const_cast<EvidenceCollector&>(*this);
        return ad::relu(
            self.fc3.forward(g, ad::relu(self.fc2.forward(g, ad::relu(self.fc1.forward(g, state_feature))))));
    }

    void collect(std::vector<nn::Parameter<Real>*>& out) {
        fc1.collect(out);
        fc2.collect(out);
        fc3.collect(out);
    }
};

// CE of the evidence-normalized distribution against the label. Every entry
// gains a 1e-8 floor so the normalization stays defined at zero evidence
// (and equals the uniform distribution there). The per-item value is capped:
// a window whose true-class unit sits in the dead ReLU region has no
// gradient path back to that unit, and without the cap its ever-growing CE
// keeps squashing the remaining evidence until the whole head dies.
constexpr Real kEvidenceCeCap = 10.0f;

inline RVar evidence_ce_term(RContext& g, const RVar& evidence, ConveyorState label) {
    constexpr Real eps = static_cast<Real>(1e-8);
    RVar num = ad::add_const(evidence, eps);
    RVar den = ad::add_const(ad::sum(evidence), 3 * eps);
    RVar p = ad::div_by_scalar(num, den);
    RVar picked = ad::slice(p, state_code(label), 1, 0, 1);
    return ad::clamp_max(ad::scale(ad::log(picked), static_cast<Real>(-1)), kEvidenceCeCap);
}

// evidential loss for one item: CE term plus the Dirichlet variance term
inline RVar evidential_term(RContext& g, const RVar& evidence, ConveyorState label, bool variance_term) {
    RVar ce = evidence_ce_term(g, evidence, label);
    if (!variance_term) return ce;
    return ad::add(ce, ad::dirichlet_variance_op(evidence));
}

} // namespace eleson
