#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "eleson/autodiff.hpp"
#include "eleson/common.hpp"

namespace eleson::nn {

using ad::Mat;
using ad::Tape;
using ad::Var;

template <typename S>
struct Parameter {
    std::string name;
    Mat<S> value;
    Mat<S> grad;  // empty until a backward pass harvested into it
    bool trainable = true;

    Eigen::Index size() const { return value.size(); }
};

// Pushes a parameter onto a tape as a leaf and remembers where, so gradients
// can be copied back after the backward sweep.
template <typename S>
struct Binding {
    Parameter<S>* param = nullptr;
    int node_id = -1;
};

template <typename S>
class GraphContext {
public:
    explicit GraphContext(Tape<S>& tape, bool train_mode) : tape_(&tape), train_(train_mode) {}

    Var<S> use(Parameter<S>& p) {
        const bool live = train_ && p.trainable && !frozen_;
        Var<S> v = tape_->push(p.value, live);
        if (live) bindings_.push_back(Binding<S>{&p, v.id});
        return v;
    }

    // while set, used parameters enter the graph as constants (min-max freezing)
    void set_frozen(bool frozen) { frozen_ = frozen; }

    // Copies tape gradients into Parameter::grad (zero when untouched).
    void harvest() {
        for (auto& b : bindings_) {
            if (tape_->grad_touched(b.node_id))
                b.param->grad = tape_->grad(b.node_id);
            else
                b.param->grad = Mat<S>::Zero(b.param->value.rows(), b.param->value.cols());
        }
    }

    Tape<S>& tape() { return *tape_; }
    bool train_mode() const { return train_; }

private:
    Tape<S>* tape_;
    bool train_;
    bool frozen_ = false;
    std::vector<Binding<S>> bindings_;
};

// ---- initialization ----

template <typename S>
Mat<S> uniform_init(Eigen::Index rows, Eigen::Index cols, double limit, Rng& rng) {
    Mat<S> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<S>(rng.uniform(-limit, limit));
    return m;
}

template <typename S>
Mat<S> he_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
    return uniform_init<S>(rows, cols, std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
}

template <typename S>
Mat<S> glorot_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
    return uniform_init<S>(rows, cols, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

// ---- dense ----

template <typename S>
struct Dense {
    Parameter<S> weight;  // out x in
    Parameter<S> bias;    // out x 1

    void init(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng, double bias_fill = 0.0) {
        weight.name = name + ".w";
        weight.value = he_init<S>(out, in, in, rng);
        bias.name = name + ".b";
        bias.value = Mat<S>::Constant(out, 1, static_cast<S>(bias_fill));
    }

    Var<S> forward(GraphContext<S>& g, const Var<S>& x) const {
        auto& self = const_cast<Dense&>(*this);
        return add(matmul(g.use(self.weight), x), g.use(self.bias));
    }

    void collect(std::vector<Parameter<S>*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }
};

// ---- ConvLSTM ----

// LSTM cell whose input/state transforms are 1-D convolutions along a local
// time window: input and hidden state are L x C maps, gates are computed by
// width-3 convolutions over the L axis.
template <typename S>
struct ConvLstmCell {
    Parameter<S> wx;    // (kernel * in_channels) x 4H
    Parameter<S> wh;    // (kernel * hidden) x 4H
    Parameter<S> bias;  // 4H x 1
    int kernel = 3;
    int in_channels = 0;
    int hidden = 0;

    void init(const std::string& name, int in_ch, int hidden_ch, int kernel_w, Rng& rng) {
        kernel = kernel_w;
        in_channels = in_ch;
        hidden = hidden_ch;
        const Eigen::Index fin_x = static_cast<Eigen::Index>(kernel) * in_ch;
        const Eigen::Index fin_h = static_cast<Eigen::Index>(kernel) * hidden_ch;
        wx.name = name + ".wx";
        wx.value = glorot_init<S>(fin_x, 4 * hidden_ch, fin_x, 4 * hidden_ch, rng);
        wh.name = name + ".wh";
        wh.value = glorot_init<S>(fin_h, 4 * hidden_ch, fin_h, 4 * hidden_ch, rng);
        bias.name = name + ".b";
        bias.value = Mat<S>::Zero(4 * hidden_ch, 1);
        // forget gate opens at init
        bias.value.block(hidden_ch, 0, hidden_ch, 1).setConstant(S(1));
    }

    void collect(std::vector<Parameter<S>*>& out) {
        out.push_back(&wx);
        out.push_back(&wh);
        out.push_back(&bias);
    }
};

template <typename S>
struct ConvLstmState {
    Var<S> h;
    Var<S> c;
};

template <typename S>
struct ConvLstmCellVars {
    Var<S> wx, wh, bias;
    int kernel = 3;
    int hidden = 0;
};

template <typename S>
ConvLstmCellVars<S> use_cell(GraphContext<S>& g, ConvLstmCell<S>& cell) {
    return ConvLstmCellVars<S>{g.use(cell.wx), g.use(cell.wh), g.use(cell.bias), cell.kernel, cell.hidden};
}

template <typename S>
ConvLstmState<S> convlstm_zero_state(Tape<S>& t, Eigen::Index patch_len, int hidden) {
    Mat<S> zeros = Mat<S>::Zero(patch_len, hidden);
    return ConvLstmState<S>{ad::constant(t, zeros), ad::constant(t, zeros)};
}

// One recurrence step: x is L x Cin, state maps are L x H.
template <typename S>
ConvLstmState<S> convlstm_step(const ConvLstmCellVars<S>& cell, const ConvLstmState<S>& state,
                               const Var<S>& x) {
    const int h = cell.hidden;
    const int pad = cell.kernel / 2;
    Var<S> gates = add(ad::conv1d(x, cell.wx, cell.bias, cell.kernel, 1, pad),
                       ad::conv1d(state.h, cell.wh, cell.kernel, 1, pad));
    const Eigen::Index L = gates.rows();
    Var<S> gi = sigmoid(slice(gates, 0, L, 0 * h, h));
    Var<S> gf = sigmoid(slice(gates, 0, L, 1 * h, h));
    Var<S> gc = tanh(slice(gates, 0, L, 2 * h, h));
    Var<S> go = sigmoid(slice(gates, 0, L, 3 * h, h));
    Var<S> c_next = add(cmul(gf, state.c), cmul(gi, gc));
    Var<S> h_next = cmul(go, tanh(c_next));
    return ConvLstmState<S>{h_next, c_next};
}

// ---- Adam ----

template <typename S>
struct Adam {
    S lr = static_cast<S>(1e-3);
    S beta1 = static_cast<S>(0.9);
    S beta2 = static_cast<S>(0.999);
    S epsilon = static_cast<S>(1e-8);
    long step_count = 0;

    std::vector<Mat<S>> first_moment;
    std::vector<Mat<S>> second_moment;

    void init(const std::vector<Parameter<S>*>& params) {
        first_moment.clear();
        second_moment.clear();
        for (const auto* p : params) {
            first_moment.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
            second_moment.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
        }
    }

    void update(const std::vector<Parameter<S>*>& params) {
        if (params.size() != first_moment.size())
            throw ConfigError("adam: parameter list does not match optimizer state");
        ++step_count;
        const S c1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1), step_count));
        const S c2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2), step_count));
        for (size_t i = 0; i < params.size(); ++i) {
            Parameter<S>& p = *params[i];
            if (!p.trainable) continue;
            if (p.grad.size() != p.value.size())
                throw ConfigError("adam: missing gradient for parameter " + p.name);
            auto& m = first_moment[i];
            auto& v = second_moment[i];
            m = beta1 * m + (S(1) - beta1) * p.grad;
            v.array() = beta2 * v.array() + (S(1) - beta2) * p.grad.array().square();
            p.value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon);
        }
    }
};

} // namespace eleson::nn
