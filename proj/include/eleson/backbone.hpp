#pragma once

#include <Eigen/Dense>

#include "eleson/nn.hpp"

namespace eleson {

using Real = float;
using RTape = ad::Tape<Real>;
using RVar = ad::Var<Real>;
using RMat = ad::Mat<Real>;
using RContext = nn::GraphContext<Real>;

// Shared temporal-feature stack: the pooled input is cut into patches of
// patch_len samples, run through two stacked ConvLSTM cells, and the final
// hidden map feeds two fully connected layers (ReLU between, linear output).
struct TemporalBackbone {
    nn::ConvLstmCell<Real> cell1;
    nn::ConvLstmCell<Real> cell2;
    nn::Dense<Real> fc1;
    nn::Dense<Real> fc2;
    int patch_len = 10;
    int in_channels = 0;

    void init(const std::string& name, int in_ch, int hidden, int kernel, int patch, int fc_width,
              int out_dim, Rng& rng) {
        patch_len = patch;
        in_channels = in_ch;
        cell1.init(name + ".cell1", in_ch, hidden, kernel, rng);
        cell2.init(name + ".cell2", hidden, hidden, kernel, rng);
        fc1.init(name + ".fc1", patch * hidden, fc_width, rng);
        fc2.init(name + ".fc2", fc_width, out_dim, rng);
    }

    RVar forward(RContext& g, const RVar& pooled_input) const {
        auto& self = const_cast<TemporalBackbone&>(*this);
        if (pooled_input.cols() != in_channels)
            throw ShapeError("backbone: expected " + std::to_string(in_channels) + " channels, got " +
                             std::to_string(pooled_input.cols()));
        if (pooled_input.rows() % patch_len != 0)
            throw ShapeError("backbone: input length " + std::to_string(pooled_input.rows()) +
                             " not divisible by patch length " + std::to_string(patch_len));
        const int steps = static_cast<int>(pooled_input.rows()) / patch_len;
        auto v1 = nn::use_cell(g, self.cell1);
        auto v2 = nn::use_cell(g, self.cell2);
        auto s1 = nn::convlstm_zero_state(g.tape(), patch_len, cell1.hidden);
        auto s2 = nn::convlstm_zero_state(g.tape(), patch_len, cell2.hidden);
        for (int i = 0; i < steps; ++i) {
            RVar x = ad::slice(pooled_input, static_cast<Eigen::Index>(i) * patch_len, patch_len, 0,
                               pooled_input.cols());
            s1 = nn::convlstm_step(v1, s1, x);
            s2 = nn::convlstm_step(v2, s2, s1.h);
        }
        RVar flat = ad::reshape(s2.h, static_cast<Eigen::Index>(patch_len) * cell2.hidden, 1);
        return self.fc2.forward(g, ad::relu(self.fc1.forward(g, flat)));
    }

    void collect(std::vector<nn::Parameter<Real>*>& out) {
        cell1.collect(out);
        cell2.collect(out);
        fc1.collect(out);
        fc2.collect(out);
    }
};

// mean-pool rows by an integer factor (time-axis downsampling before the
// recurrent stack; conveyor signatures live well below the pooled Nyquist)
inline Eigen::MatrixXf pool_rows(const Eigen::MatrixXf& x, int pool) {
    if (pool <= 1) return x;
    if (x.rows() % pool != 0)
        throw ShapeError("pool_rows: " + std::to_string(x.rows()) + " rows not divisible by " +
                         std::to_string(pool));
    Eigen::MatrixXf out(x.rows() / pool, x.cols());
    for (Eigen::Index r = 0; r < out.rows(); ++r)
        out.row(r) = x.middleRows(r * pool, pool).colwise().mean();
    return out;
}

} // namespace eleson
