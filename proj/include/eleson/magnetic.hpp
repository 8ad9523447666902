#pragma once

#include <vector>

#include "eleson/backbone.hpp"
#include "eleson/ins.hpp"
#include "eleson/model_dims.hpp"

namespace eleson {

// Behaviors above this gyro peak are treated as perturbations (vp = 1).
constexpr double kVpAngularRateThreshold = 1.5;  // rad/s

// First difference of magnetic field intensity; element 0 is zero padding so
// the output keeps length T. Constant intensity offsets cancel exactly.
inline Eigen::VectorXf differential_feature(const Eigen::MatrixXf& magnetic) {
    if (magnetic.cols() != 3) throw ShapeError("differential_feature: expected T x 3 magnetic slice");
    if (magnetic.rows() < 2) throw ShapeError("differential_feature: need at least 2 samples");
    Eigen::VectorXf out(magnetic.rows());
    out[0] = 0.f;
    float prev = magnetic.row(0).norm();
    for (Eigen::Index i = 1; i < magnetic.rows(); ++i) {
        const float cur = magnetic.row(i).norm();
        out[i] = cur - prev;
        prev = cur;
    }
    return out;
}

// 1 iff the window's gyro peak exceeds the threshold (strictly).
inline int auto_label_vp(const InsWindow& w) {
    return gyro_peak_magnitude(w) > kVpAngularRateThreshold ? 1 : 0;
}

// Filters the differential sequence into a behavior-robust magnetic feature.
struct MagneticFilter {
    TemporalBackbone backbone;
    ModelDims dims;

    void init(const ModelDims& d, Rng& rng) {
        dims = d;
        backbone.init("mag", 1, d.lstm_hidden, d.lstm_kernel, d.patch_len, d.fc_width, d.feature_dim, rng);
    }

    RVar forward(RContext& g, const RVar& pooled_diff) const { return backbone.forward(g, pooled_diff); }

    void collect(std::vector<nn::Parameter<Real>*>& out) { backbone.collect(out); }
};

// Binary perturbation classifier playing the min-max game with the filter.
struct BehaviorAdversary {
    nn::Dense<Real> fc1, fc2;

    void init(const ModelDims& d, Rng& rng) {
        fc1.init("adv.fc1", d.feature_dim, d.adv_hidden, rng);
        fc2.init("adv.fc2", d.adv_hidden, 2, rng);
    }

    RVar forward(RContext& g, const RVar& magnetic_feature) const {
        auto& self = const_cast<BehaviorAdversary&>(*this);
        return self.fc2.forward(g, ad::relu(self.fc1.forward(g, magnetic_feature)));
    }

    void collect(std::vector<nn::Parameter<Real>*>& out) {
        fc1.collect(out);
        fc2.collect(out);
    }
};

// CE(adversary(z_b), vp). The filter minimizes the negation of this term
// with the adversary frozen; the adversary minimizes it with z_b detached.
inline RVar adversary_ce_term(RContext& g, const BehaviorAdversary& adv, const RVar& magnetic_feature,
                              int vp_flag) {
    if (vp_flag != 0 && vp_flag != 1) throw ShapeError("adversary_ce_term: vp flag must be 0 or 1");
    return ad::softmax_cross_entropy(adv.forward(g, magnetic_feature), vp_flag);
}

struct AdversarialBatchItem {
    Eigen::MatrixXf pooled_diff;  // filter input
    ConveyorState label = ConveyorState::Neither;
    int vp = -1;
};

// Batch values of the min-max pair over conveyor windows with a known vp
// flag (Neither windows and unlabeled items are skipped, not an error):
//   adversary_loss = sum CE(adversary(filter(diff)), vp)
//   filter_loss    = -adversary_loss
inline std::pair<double, double> adversarial_losses(const MagneticFilter& filter,
                                                    const BehaviorAdversary& adv,
                                                    const std::vector<AdversarialBatchItem>& batch) {
    double adversary_loss = 0;
    for (const auto& item : batch) {
        if (item.label == ConveyorState::Neither) continue;
        if (item.vp != 0 && item.vp != 1) continue;
        RTape tape;
        RContext g(tape, false);
        RVar zb = filter.forward(g, tape.push(item.pooled_diff));
        adversary_loss += static_cast<double>(adversary_ce_term(g, adv, zb, item.vp).value()(0, 0));
    }
    return {-adversary_loss, adversary_loss};
}

} // namespace eleson
