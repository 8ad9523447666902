#pragma once

#include <vector>

#include "eleson/backbone.hpp"
#include "eleson/ins.hpp"
#include "eleson/model_dims.hpp"

namespace eleson {

// Decomposes a motion window into a conveyor feature and a behavior feature.
// The backbone output is 2*feature_dim wide and splits in fixed order:
// first half conveyor, second half behavior.
struct CausalExtractor {
    TemporalBackbone backbone;
    ModelDims dims;

    void init(const ModelDims& d, Rng& rng) {
        dims = d;
        backbone.init("causal", 6, d.lstm_hidden, d.lstm_kernel, d.patch_len, d.fc_width,
                      2 * d.feature_dim, rng);
    }

    struct Features {
        RVar conveyor;  // feature_dim x 1
        RVar behavior;  // feature_dim x 1
    };

    Features forward(RContext& g, const RVar& pooled_motion) const {
        RVar out = backbone.forward(g, pooled_motion);
        return Features{ad::slice(out, 0, dims.feature_dim, 0, 1),
                        ad::slice(out, dims.feature_dim, dims.feature_dim, 0, 1)};
    }

    void collect(std::vector<nn::Parameter<Real>*>& out) { backbone.collect(out); }
};

// Reconstructs the flattened motion window from a feature vector; three
// fully connected layers, linear output.
struct SignalGenerator {
    nn::Dense<Real> fc1, fc2, fc3;

    void init(const ModelDims& d, int signal_len, Rng& rng) {
        fc1.init("gen.fc1", d.feature_dim, d.gen_hidden1, rng);
        fc2.init("gen.fc2", d.gen_hidden1, d.gen_hidden2, rng);
        fc3.init("gen.fc3", d.gen_hidden2, signal_len, rng);
    }

    RVar forward(RContext& g, const RVar& feature) const {
        auto& self = const_cast<SignalGenerator&>(*this);
        return self.fc3.forward(g, ad::relu(self.fc2.forward(g, ad::relu(self.fc1.forward(g, feature)))));
    }

    void collect(std::vector<nn::Parameter<Real>*>& out) {
        fc1.collect(out);
        fc2.collect(out);
        fc3.collect(out);
    }
};

// Two-layer feature-space state classifier trained jointly with the extractor.
struct AuxClassifier {
    nn::Dense<Real> fc1, fc2;

    void init(const ModelDims& d, Rng& rng) {
        fc1.init("aux.fc1", d.feature_dim, d.aux_hidden, rng);
        fc2.init("aux.fc2", d.aux_hidden, 3, rng);
    }

    RVar forward(RContext& g, const RVar& feature) const {
        auto& self = const_cast<AuxClassifier&>(*this);
        return self.fc2.forward(g, ad::relu(self.fc1.forward(g, feature)));
    }

    void collect(std::vector<nn::Parameter<Real>*>& out) {
        fc1.collect(out);
        fc2.collect(out);
    }
};

// ---- loss terms (graph builders; batch functions sum over items) ----

// || g(conveyor + behavior + noise) - motion ||^2 / len, noise active only in
// training mode
inline RVar reconstruction_term(RContext& g, const SignalGenerator& gen, const RVar& conveyor,
                                const RVar& behavior, const RVar& motion_flat, Real noise_std, Rng& rng) {
    RVar feat = ad::add(conveyor, behavior);
    if (g.train_mode() && noise_std > 0) feat = ad::gaussian_noise_add(feat, noise_std, rng);
    return ad::mse(gen.forward(g, feat), motion_flat);
}

// CE(aux(conveyor + behavior), label) + CE(aux(behavior), Neither)
inline RVar similarity_term(RContext& g, const AuxClassifier& aux, const RVar& conveyor,
                            const RVar& behavior, ConveyorState label) {
    RVar both = aux.forward(g, ad::add(conveyor, behavior));
    RVar alone = aux.forward(g, behavior);
    return ad::add(ad::softmax_cross_entropy(both, state_code(label)),
                   ad::softmax_cross_entropy(alone, state_code(ConveyorState::Neither)));
}

// Per-state population variance of the conveyor feature across the batch,
// summed over feature dimensions and states. Labels with fewer than two
// items contribute nothing (variance of a single point is zero anyway).
inline RVar consistency_term(RContext& g, const std::array<std::vector<RVar>, 3>& conveyor_by_label) {
    RVar total = ad::scalar<Real>(g.tape(), 0);
    for (const auto& group : conveyor_by_label) {
        if (group.size() < 2) continue;
        RVar stacked = ad::concat_cols(group);  // feature_dim x n_items
        total = ad::add(total, ad::sum(ad::population_variance(stacked, 1)));
    }
    return total;
}

// similarity + w1 * reconstruction + w2 * consistency
inline RVar causal_loss(const RVar& similarity, const RVar& reconstruction, const RVar& consistency,
                        Real w1, Real w2) {
    if (w1 < 0 || w2 < 0) throw ConfigError("causal loss weights must be non-negative");
    return ad::add(similarity,
                   ad::add(ad::scale(reconstruction, w1), ad::scale(consistency, w2)));
}

} // namespace eleson
