#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eleson/common.hpp"

// Reverse-mode autodiff on a tape of dense matrices. Every node value is a
// 2-D Eigen matrix (vectors are n x 1, scalars 1 x 1). Nodes are appended in
// topological order, so the backward sweep is a plain reverse walk over the
// tape. A tape is single-threaded; run parallel work on separate tapes.

namespace eleson::ad {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
class Tape;

template <typename S>
struct Var {
    Tape<S>* tape = nullptr;
    int id = -1;

    const Mat<S>& value() const { return tape->value(id); }
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

template <typename S>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<S> push(Mat<S> value, bool needs_grad = false) {
        check_finite(value);
        nodes_.push_back(Node{std::move(value), Mat<S>(), {}, needs_grad});
        return Var<S>{this, static_cast<int>(nodes_.size()) - 1};
    }

    void set_backward(int id, std::function<void()> fn) {
        nodes_[static_cast<size_t>(id)].backward = std::move(fn);
    }

    Mat<S>& value(int id) { return nodes_[static_cast<size_t>(id)].value; }
    const Mat<S>& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
    bool needs_grad(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

    // Gradient accumulator, allocated (zeroed) on first touch.
    Mat<S>& grad(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.size() == 0) n.grad = Mat<S>::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }
    bool grad_touched(int id) const { return nodes_[static_cast<size_t>(id)].grad.size() != 0; }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Nodes whose
    // gradient was never touched are skipped (nothing downstream reached them).
    void backward_from(const Var<S>& loss) {
        if (loss.tape != this) throw ShapeError("backward: variable belongs to a different tape");
        const Node& ln = nodes_[static_cast<size_t>(loss.id)];
        if (ln.value.rows() != 1 || ln.value.cols() != 1)
            throw ShapeError("backward requires a scalar loss, got " + shape_str(ln.value));
        grad(loss.id).setConstant(S(1));
        for (int i = loss.id; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.backward && n.needs_grad && n.grad.size() != 0) n.backward();
        }
    }

    size_t size() const { return nodes_.size(); }

    static std::string shape_str(const Mat<S>& m) {
        return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
    }

    static void check_finite(const Mat<S>& m) {
#ifndef NDEBUG
        if (!m.allFinite()) throw ShapeError("non-finite value produced on tape");
#else
        (void)m;
#endif
    }

private:
    struct Node {
        Mat<S> value;
        Mat<S> grad;
        std::function<void()> backward;
        bool needs_grad = false;
    };
    std::vector<Node> nodes_;
};

namespace detail {

template <typename S>
void require_same_tape(const Var<S>& a, const Var<S>& b, const char* op) {
    if (a.tape != b.tape) throw ShapeError(std::string(op) + ": operands on different tapes");
}

template <typename S>
void require_same_shape(const Var<S>& a, const Var<S>& b, const char* op) {
    require_same_tape(a, b, op);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(op) + ": shape mismatch " + Tape<S>::shape_str(a.value()) + " vs " +
                         Tape<S>::shape_str(b.value()));
}

} // namespace detail

// ---- leaves ----

template <typename S>
Var<S> constant(Tape<S>& t, Mat<S> v) {
    return t.push(std::move(v), false);
}

template <typename S>
Var<S> scalar(Tape<S>& t, S v) {
    Mat<S> m(1, 1);
    m(0, 0) = v;
    return t.push(std::move(m), false);
}

// ---- elementwise and linear ----

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
    detail::require_same_shape(a, b, "add");
    Tape<S>& t = *a.tape;
    const bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
    Var<S> out = t.push(t.value(a.id) + t.value(b.id), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, bid = b.id, oid = out.id;
        t.set_backward(oid, [tp, aid, bid, oid] {
            const Mat<S>& g = tp->grad(oid);
            if (tp->needs_grad(aid)) tp->grad(aid) += g;
            if (tp->needs_grad(bid)) tp->grad(bid) += g;
        });
    }
    return out;
}

template <typename S>
Var<S> operator+(const Var<S>& a, const Var<S>& b) { return add(a, b); }

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
    detail::require_same_shape(a, b, "sub");
    Tape<S>& t = *a.tape;
    const bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
    Var<S> out = t.push(t.value(a.id) - t.value(b.id), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, bid = b.id, oid = out.id;
        t.set_backward(oid, [tp, aid, bid, oid] {
            const Mat<S>& g = tp->grad(oid);
            if (tp->needs_grad(aid)) tp->grad(aid) += g;
            if (tp->needs_grad(bid)) tp->grad(bid) -= g;
        });
    }
    return out;
}

// elementwise product
template <typename S>
Var<S> cmul(const Var<S>& a, const Var<S>& b) {
    detail::require_same_shape(a, b, "cmul");
    Tape<S>& t = *a.tape;
    const bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
    Var<S> out = t.push((t.value(a.id).array() * t.value(b.id).array()).matrix(), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, bid = b.id, oid = out.id;
        t.set_backward(oid, [tp, aid, bid, oid] {
            const Mat<S>& g = tp->grad(oid);
            if (tp->needs_grad(aid)) tp->grad(aid).array() += g.array() * tp->value(bid).array();
            if (tp->needs_grad(bid)) tp->grad(bid).array() += g.array() * tp->value(aid).array();
        });
    }
    return out;
}

template <typename S>
Var<S> scale(const Var<S>& a, S c) {
    Tape<S>& t = *a.tape;
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(t.value(a.id) * c, ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid, c] { tp->grad(aid) += tp->grad(oid) * c; });
    }
    return out;
}

template <typename S>
Var<S> add_const(const Var<S>& a, S c) {
    Tape<S>& t = *a.tape;
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push((t.value(a.id).array() + c).matrix(), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid] { tp->grad(aid) += tp->grad(oid); });
    }
    return out;
}

template <typename S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
    detail::require_same_tape(a, b, "matmul");
    Tape<S>& t = *a.tape;
    if (a.cols() != b.rows())
        throw ShapeError("matmul: incompatible shapes " + Tape<S>::shape_str(a.value()) + " * " +
                         Tape<S>::shape_str(b.value()));
    const bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
    Var<S> out = t.push(t.value(a.id) * t.value(b.id), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, bid = b.id, oid = out.id;
        t.set_backward(oid, [tp, aid, bid, oid] {
            const Mat<S>& g = tp->grad(oid);
            if (tp->needs_grad(aid)) tp->grad(aid).noalias() += g * tp->value(bid).transpose();
            if (tp->needs_grad(bid)) tp->grad(bid).noalias() += tp->value(aid).transpose() * g;
        });
    }
    return out;
}

// ---- structure ----

template <typename S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: empty input");
    Tape<S>& t = *parts.front().tape;
    const Eigen::Index c = parts.front().cols();
    Eigen::Index r = 0;
    bool ng = false;
    for (const auto& p : parts) {
        detail::require_same_tape(parts.front(), p, "concat_rows");
        if (p.cols() != c) throw ShapeError("concat_rows: column mismatch");
        r += p.rows();
        ng = ng || t.needs_grad(p.id);
    }
    Mat<S> v(r, c);
    Eigen::Index at = 0;
    std::vector<int> ids;
    std::vector<Eigen::Index> offs, lens;
    for (const auto& p : parts) {
        v.middleRows(at, p.rows()) = p.value();
        ids.push_back(p.id);
        offs.push_back(at);
        lens.push_back(p.rows());
        at += p.rows();
    }
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int oid = out.id;
        t.set_backward(oid, [tp, ids, offs, lens, oid] {
            const Mat<S>& g = tp->grad(oid);
            for (size_t i = 0; i < ids.size(); ++i)
                if (tp->needs_grad(ids[i])) tp->grad(ids[i]) += g.middleRows(offs[i], lens[i]);
        });
    }
    return out;
}

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: empty input");
    Tape<S>& t = *parts.front().tape;
    const Eigen::Index r = parts.front().rows();
    Eigen::Index c = 0;
    bool ng = false;
    for (const auto& p : parts) {
        detail::require_same_tape(parts.front(), p, "concat_cols");
        if (p.rows() != r) throw ShapeError("concat_cols: row mismatch");
        c += p.cols();
        ng = ng || t.needs_grad(p.id);
    }
    Mat<S> v(r, c);
    Eigen::Index at = 0;
    std::vector<int> ids;
    std::vector<Eigen::Index> offs, lens;
    for (const auto& p : parts) {
        v.middleCols(at, p.cols()) = p.value();
        ids.push_back(p.id);
        offs.push_back(at);
        lens.push_back(p.cols());
        at += p.cols();
    }
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int oid = out.id;
        t.set_backward(oid, [tp, ids, offs, lens, oid] {
            const Mat<S>& g = tp->grad(oid);
            for (size_t i = 0; i < ids.size(); ++i)
                if (tp->needs_grad(ids[i])) tp->grad(ids[i]) += g.middleCols(offs[i], lens[i]);
        });
    }
    return out;
}

template <typename S>
Var<S> slice(const Var<S>& a, Eigen::Index r0, Eigen::Index nr, Eigen::Index c0, Eigen::Index nc) {
    Tape<S>& t = *a.tape;
    if (r0 < 0 || c0 < 0 || r0 + nr > a.rows() || c0 + nc > a.cols())
        throw ShapeError("slice: block out of range on " + Tape<S>::shape_str(a.value()));
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(t.value(a.id).block(r0, c0, nr, nc), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid, r0, c0, nr, nc] {
            tp->grad(aid).block(r0, c0, nr, nc) += tp->grad(oid);
        });
    }
    return out;
}

// column-major reinterpretation; element count must match
template <typename S>
Var<S> reshape(const Var<S>& a, Eigen::Index r, Eigen::Index c) {
    Tape<S>& t = *a.tape;
    if (r * c != a.rows() * a.cols())
        throw ShapeError("reshape: size mismatch " + Tape<S>::shape_str(a.value()) + " -> " +
                         std::to_string(r) + "x" + std::to_string(c));
    Mat<S> v = t.value(a.id);
    Mat<S> shaped = Eigen::Map<const Mat<S>>(v.data(), r, c);
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(std::move(shaped), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid] {
            const Mat<S>& g = tp->grad(oid);
            Mat<S>& ga = tp->grad(aid);
            ga += Eigen::Map<const Mat<S>>(g.data(), ga.rows(), ga.cols());
        });
    }
    return out;
}

// ---- activations ----

template <typename S>
Var<S> relu(const Var<S>& a) {
    Tape<S>& t = *a.tape;
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(t.value(a.id).cwiseMax(S(0)), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid] {
            tp->grad(aid).array() +=
                tp->grad(oid).array() * (tp->value(aid).array() > S(0)).template cast<S>();
        });
    }
    return out;
}

template <typename S>
Var<S> sigmoid(const Var<S>& a) {
    Tape<S>& t = *a.tape;
    Mat<S> v = t.value(a.id).unaryExpr([](S x) {
        return x >= S(0) ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
    });
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid] {
            const auto y = tp->value(oid).array();
            tp->grad(aid).array() += tp->grad(oid).array() * y * (S(1) - y);
        });
    }
    return out;
}

template <typename S>
Var<S> tanh(const Var<S>& a) {
    Tape<S>& t = *a.tape;
    Mat<S> v = t.value(a.id).unaryExpr([](S x) { return std::tanh(x); });
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid] {
            const auto y = tp->value(oid).array();
            tp->grad(aid).array() += tp->grad(oid).array() * (S(1) - y * y);
        });
    }
    return out;
}

// elementwise min(x, cap); gradient passes only where x < cap
template <typename S>
Var<S> clamp_max(const Var<S>& a, S cap) {
    Tape<S>& t = *a.tape;
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(t.value(a.id).cwiseMin(cap), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid, cap] {
            tp->grad(aid).array() +=
                tp->grad(oid).array() * (tp->value(aid).array() < cap).template cast<S>();
        });
    }
    return out;
}

// caller must keep the argument strictly positive (e.g. via add_const)
template <typename S>
Var<S> log(const Var<S>& a) {
    Tape<S>& t = *a.tape;
    Mat<S> v = t.value(a.id).unaryExpr([](S x) { return std::log(x); });
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid] {
            tp->grad(aid).array() += tp->grad(oid).array() / tp->value(aid).array();
        });
    }
    return out;
}

// ---- reductions ----

template <typename S>
Var<S> sum(const Var<S>& a) {
    Tape<S>& t = *a.tape;
    Mat<S> v(1, 1);
    v(0, 0) = t.value(a.id).sum();
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid] {
            tp->grad(aid).array() += tp->grad(oid)(0, 0);
        });
    }
    return out;
}

// mean squared error over all elements
template <typename S>
Var<S> mse(const Var<S>& a, const Var<S>& b) {
    detail::require_same_shape(a, b, "mse");
    Tape<S>& t = *a.tape;
    const S n = static_cast<S>(a.rows() * a.cols());
    Mat<S> v(1, 1);
    v(0, 0) = (t.value(a.id) - t.value(b.id)).squaredNorm() / n;
    const bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, bid = b.id, oid = out.id;
        t.set_backward(oid, [tp, aid, bid, oid, n] {
            const S g = tp->grad(oid)(0, 0);
            const Mat<S> d = tp->value(aid) - tp->value(bid);
            if (tp->needs_grad(aid)) tp->grad(aid) += d * (S(2) * g / n);
            if (tp->needs_grad(bid)) tp->grad(bid) -= d * (S(2) * g / n);
        });
    }
    return out;
}

// axis = 0: variance over rows, one value per column (1 x C)
// axis = 1: variance over columns, one value per row (R x 1)
// Population convention (divide by N).
template <typename S>
Var<S> population_variance(const Var<S>& a, int axis) {
    Tape<S>& t = *a.tape;
    if (axis != 0 && axis != 1) throw ShapeError("population_variance: axis must be 0 or 1");
    const Mat<S>& x = t.value(a.id);
    Mat<S> v;
    if (axis == 0) {
        const Eigen::Index n = x.rows();
        Mat<S> mean = x.colwise().mean();
        v = ((x.rowwise() - mean.row(0)).array().square().colwise().sum() / static_cast<S>(n)).matrix();
    } else {
        const Eigen::Index n = x.cols();
        Mat<S> mean = x.rowwise().mean();
        v = ((x.colwise() - mean.col(0)).array().square().rowwise().sum() / static_cast<S>(n)).matrix();
    }
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid, axis] {
            const Mat<S>& x2 = tp->value(aid);
            const Mat<S>& g = tp->grad(oid);
            if (axis == 0) {
                const S n = static_cast<S>(x2.rows());
                Mat<S> mean = x2.colwise().mean();
                Mat<S> centered = x2.rowwise() - mean.row(0);
                tp->grad(aid).array() +=
                    centered.array().rowwise() * (g.row(0).array() * (S(2) / n));
            } else {
                const S n = static_cast<S>(x2.cols());
                Mat<S> mean = x2.rowwise().mean();
                Mat<S> centered = x2.colwise() - mean.col(0);
                tp->grad(aid).array() +=
                    centered.array().colwise() * (g.col(0).array() * (S(2) / n));
            }
        });
    }
    return out;
}

// ---- stochastic ----

// Adds Gaussian noise sampled at graph-build time; backward is the identity.
// std = 0 leaves the value untouched and does not consume the RNG.
template <typename S>
Var<S> gaussian_noise_add(const Var<S>& a, S stddev, Rng& rng) {
    Tape<S>& t = *a.tape;
    Mat<S> v = t.value(a.id);
    if (stddev != S(0)) {
        for (Eigen::Index j = 0; j < v.cols(); ++j)
            for (Eigen::Index i = 0; i < v.rows(); ++i)
                v(i, j) += static_cast<S>(rng.normal(0.0, static_cast<double>(stddev)));
    }
    const bool ng = t.needs_grad(a.id);
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, oid = out.id;
        t.set_backward(oid, [tp, aid, oid] { tp->grad(aid) += tp->grad(oid); });
    }
    return out;
}

// ---- classification heads ----

// logits: n x 1, target in [0, n); log-sum-exp stabilized.
// Backward is exactly softmax(logits) - onehot(target).
template <typename S>
Var<S> softmax_cross_entropy(const Var<S>& logits, int target) {
    Tape<S>& t = *logits.tape;
    if (logits.cols() != 1) throw ShapeError("softmax_cross_entropy: logits must be a column vector");
    const Eigen::Index n = logits.rows();
    if (target < 0 || target >= n) throw ShapeError("softmax_cross_entropy: target out of range");
    const Mat<S>& l = t.value(logits.id);
    const S m = l.maxCoeff();
    const S lse = m + std::log((l.array() - m).exp().sum());
    Mat<S> v(1, 1);
    v(0, 0) = lse - l(target, 0);
    const bool ng = t.needs_grad(logits.id);
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int lid = logits.id, oid = out.id;
        t.set_backward(oid, [tp, lid, oid, target, lse] {
            const S g = tp->grad(oid)(0, 0);
            const Mat<S>& l2 = tp->value(lid);
            Mat<S> p = (l2.array() - lse).exp().matrix();
            p(target, 0) -= S(1);
            tp->grad(lid) += p * g;
        });
    }
    return out;
}

// out = a / s where s is a 1x1 node
template <typename S>
Var<S> div_by_scalar(const Var<S>& a, const Var<S>& s) {
    detail::require_same_tape(a, s, "div_by_scalar");
    Tape<S>& t = *a.tape;
    if (s.rows() != 1 || s.cols() != 1) throw ShapeError("div_by_scalar: divisor must be 1x1");
    const S sv = t.value(s.id)(0, 0);
    const bool ng = t.needs_grad(a.id) || t.needs_grad(s.id);
    Var<S> out = t.push(t.value(a.id) / sv, ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int aid = a.id, sid = s.id, oid = out.id;
        t.set_backward(oid, [tp, aid, sid, oid] {
            const Mat<S>& g = tp->grad(oid);
            const S sv2 = tp->value(sid)(0, 0);
            if (tp->needs_grad(aid)) tp->grad(aid) += g / sv2;
            if (tp->needs_grad(sid))
                tp->grad(sid)(0, 0) -= (g.array() * tp->value(aid).array()).sum() / (sv2 * sv2);
        });
    }
    return out;
}

// Variance of Dirichlet(e + 1): with a_i = e_i + 1, A = sum a,
//   V = sum_i a_i (A - a_i) / (A^2 (A + 1)) = (A^2 - sum a_i^2) / (A^2 (A + 1)).
template <typename S>
Var<S> dirichlet_variance_op(const Var<S>& e) {
    Tape<S>& t = *e.tape;
    if (e.cols() != 1) throw ShapeError("dirichlet_variance: evidence must be a column vector");
    const Mat<S>& ev = t.value(e.id);
    Mat<S> a = (ev.array() + S(1)).matrix();
    const S A = a.sum();
    const S Q = a.squaredNorm();
    Mat<S> v(1, 1);
    v(0, 0) = (A * A - Q) / (A * A * (A + S(1)));
    const bool ng = t.needs_grad(e.id);
    Var<S> out = t.push(std::move(v), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int eid = e.id, oid = out.id;
        t.set_backward(oid, [tp, eid, oid] {
            const S g = tp->grad(oid)(0, 0);
            const Mat<S> a2 = (tp->value(eid).array() + S(1)).matrix();
            const S A2 = a2.sum();
            const S Q2 = a2.squaredNorm();
            const S f = A2 * A2 - Q2;
            const S den = A2 * A2 * (A2 + S(1));
            const S dden = S(3) * A2 * A2 + S(2) * A2;
            // dV/da_i = (df/da_i * den - f * dden/da_i) / den^2
            tp->grad(eid).array() +=
                g * ((S(2) * A2 - S(2) * a2.array()) * den - f * dden) / (den * den);
        });
    }
    return out;
}

// ---- temporal convolution ----

// x: L x Cin, w: (kernel * Cin) x Cout, bias: Cout x 1 (pass empty Var id < 0
// by using the overload below). Zero padding, odd kernel width required.
template <typename S>
Var<S> conv1d(const Var<S>& x, const Var<S>& w, const Var<S>& bias, int kernel, int stride, int pad) {
    detail::require_same_tape(x, w, "conv1d");
    Tape<S>& t = *x.tape;
    if (kernel < 1 || kernel % 2 == 0) throw ShapeError("conv1d: kernel width must be odd and positive");
    if (stride < 1) throw ShapeError("conv1d: stride must be positive");
    const Eigen::Index L = x.rows(), cin = x.cols();
    if (w.rows() != static_cast<Eigen::Index>(kernel) * cin)
        throw ShapeError("conv1d: weight rows " + std::to_string(w.rows()) + " != kernel*Cin = " +
                         std::to_string(kernel * cin));
    const Eigen::Index cout = w.cols();
    const bool has_bias = bias.id >= 0;
    if (has_bias && (bias.rows() != cout || bias.cols() != 1))
        throw ShapeError("conv1d: bias must be Cout x 1");
    const Eigen::Index lout = (L + 2 * pad - kernel) / stride + 1;
    if (lout < 1) throw ShapeError("conv1d: output would be empty");

    auto im2col = std::make_shared<Mat<S>>(Mat<S>::Zero(lout, kernel * cin));
    const Mat<S>& xv = t.value(x.id);
    for (Eigen::Index r = 0; r < lout; ++r) {
        for (int k = 0; k < kernel; ++k) {
            const Eigen::Index src = r * stride - pad + k;
            if (src >= 0 && src < L) im2col->block(r, k * cin, 1, cin) = xv.row(src);
        }
    }
    Mat<S> outv = (*im2col) * t.value(w.id);
    if (has_bias) outv.rowwise() += t.value(bias.id).col(0).transpose();

    const bool ng = t.needs_grad(x.id) || t.needs_grad(w.id) || (has_bias && t.needs_grad(bias.id));
    Var<S> out = t.push(std::move(outv), ng);
    if (ng) {
        Tape<S>* tp = &t;
        const int xid = x.id, wid = w.id, bid = has_bias ? bias.id : -1, oid = out.id;
        t.set_backward(oid, [tp, xid, wid, bid, oid, im2col, kernel, stride, pad, L, cin, lout] {
            const Mat<S>& g = tp->grad(oid);
            if (tp->needs_grad(wid)) tp->grad(wid).noalias() += im2col->transpose() * g;
            if (bid >= 0 && tp->needs_grad(bid))
                tp->grad(bid) += g.colwise().sum().transpose();
            if (tp->needs_grad(xid)) {
                const Mat<S> dcol = g * tp->value(wid).transpose();  // lout x kernel*cin
                Mat<S>& gx = tp->grad(xid);
                for (Eigen::Index r = 0; r < lout; ++r) {
                    for (int k = 0; k < kernel; ++k) {
                        const Eigen::Index src = r * stride - pad + k;
                        if (src >= 0 && src < L) gx.row(src) += dcol.block(r, k * cin, 1, cin);
                    }
                }
            }
        });
    }
    return out;
}

template <typename S>
Var<S> conv1d(const Var<S>& x, const Var<S>& w, int kernel, int stride, int pad) {
    return conv1d(x, w, Var<S>{x.tape, -1}, kernel, stride, pad);
}

} // namespace eleson::ad
