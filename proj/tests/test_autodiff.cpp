#include <doctest.h>

#include <cmath>

#include "eleson/autodiff.hpp"
#include "eleson/nn.hpp"
#include "gradcheck.hpp"

using namespace eleson;
using namespace eleson::ad;
using gradcheck::Matd;
using gradcheck::random_mat;
using gradcheck::random_mat_away_from_zero;

TEST_CASE("forward op examples") {
    Tape<double> t;
    Matd x(3, 1);
    x << -1, 0, 2;
    CHECK(relu(t.push(x)).value()(1, 0) == 0.0);
    CHECK(relu(t.push(x)).value()(2, 0) == 2.0);

    Matd a(2, 1), b(2, 1);
    a << 1, 2;
    b << 1, 0;
    CHECK(mse(t.push(a), t.push(b)).value()(0, 0) == doctest::Approx(2.0));

    Matd logits = Matd::Zero(3, 1);
    CHECK(softmax_cross_entropy(t.push(logits), 0).value()(0, 0) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("backward basics") {
    // loss = sum(x*x) at x=[3] -> grad 6
    Tape<double> t;
    Matd x(1, 1);
    x << 3;
    auto vx = t.push(x, true);
    auto loss = sum(cmul(vx, vx));
    t.backward_from(loss);
    CHECK(t.grad(vx.id)(0, 0) == doctest::Approx(6.0));

    // gradient of unused parameter is zero after harvest
    Tape<float> t2;
    nn::GraphContext<float> g(t2, true);
    nn::Parameter<float> used{"u", ad::Mat<float>::Constant(1, 1, 2.f), {}, true};
    nn::Parameter<float> unused{"n", ad::Mat<float>::Constant(1, 1, 5.f), {}, true};
    auto vu = g.use(used);
    auto vn = g.use(unused);
    (void)vn;
    auto l2 = sum(cmul(vu, vu));
    t2.backward_from(l2);
    g.harvest();
    CHECK(used.grad(0, 0) == doctest::Approx(4.f));
    CHECK(unused.grad(0, 0) == 0.f);
}

TEST_CASE("backward requires scalar loss") {
    Tape<double> t;
    auto v = t.push(Matd::Ones(2, 2), true);
    CHECK_THROWS_AS(t.backward_from(v), ShapeError);
}

TEST_CASE("shape mismatches are structured errors") {
    Tape<double> t;
    auto a = t.push(Matd::Ones(2, 2));
    auto b = t.push(Matd::Ones(3, 2));
    CHECK_THROWS_AS(add(a, b), ShapeError);
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
    CHECK_THROWS_AS(conv1d(a, b, 2, 1, 1), ShapeError);  // even kernel
}

TEST_CASE("softmax cross entropy gradient equals softmax minus onehot") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        Tape<double> t;
        Matd logits = random_mat(5, 1, rng, 2.0);
        auto v = t.push(logits, true);
        const int target = trial % 5;
        auto loss = softmax_cross_entropy(v, target);
        t.backward_from(loss);

        Matd p = (logits.array() - logits.maxCoeff()).exp();
        p /= p.sum();
        p(target, 0) -= 1.0;
        CHECK((t.grad(v.id) - p).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("population variance properties") {
    Tape<double> t;
    auto c = t.push(Matd::Constant(7, 1, 3.25));
    CHECK(population_variance(c, 0).value()(0, 0) == 0.0);

    // translation invariance
    Rng rng(2);
    Matd x = random_mat(9, 4, rng);
    auto v1 = population_variance(t.push(x), 0);
    Matd shifted = x.array() + 17.5;
    auto v2 = population_variance(t.push(shifted), 0);
    CHECK((v1.value() - v2.value()).cwiseAbs().maxCoeff() < 1e-6);

    // axis-1 example: rows of [0,2] -> population variance 1
    Matd two(1, 2);
    two << 0, 2;
    CHECK(population_variance(t.push(two), 1).value()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("gaussian noise op") {
    Tape<float> t;
    Rng rng(5);
    auto x = t.push(ad::Mat<float>::Constant(4, 3, 1.5f));
    auto same = gaussian_noise_add(x, 0.f, rng);
    CHECK((same.value() - x.value()).cwiseAbs().maxCoeff() == 0.f);

    Rng r1(42), r2(42);
    auto n1 = gaussian_noise_add(x, 0.3f, r1);
    auto n2 = gaussian_noise_add(x, 0.3f, r2);
    CHECK((n1.value() - n2.value()).cwiseAbs().maxCoeff() == 0.f);
    CHECK((n1.value() - x.value()).cwiseAbs().maxCoeff() > 0.f);
}

TEST_CASE("gradient checks across the op inventory") {
    Rng rng(1234);
    auto expect_ok = [](const gradcheck::Result& r) {
        INFO(r.where);
        CHECK(r.max_rel_error < 1e-4);
    };

    // add/sub/cmul/scale chain
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            return sum(cmul(add(in[0], in[1]), sub(scale(in[0], 1.7), add_const(in[1], 0.3))));
        },
        {random_mat(4, 3, rng), random_mat(4, 3, rng)}));

    // matmul
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            return sum(matmul(in[0], in[1]));
        },
        {random_mat(3, 4, rng), random_mat(4, 2, rng)}));

    // concat + slice + reshape
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            auto cat = concat_rows<double>({in[0], in[1]});
            auto s = slice(cat, 1, 3, 0, 2);
            return sum(cmul(reshape(s, 6, 1), reshape(s, 6, 1)));
        },
        {random_mat(2, 2, rng), random_mat(3, 2, rng)}));

    // activations
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            return sum(relu(in[0]));
        },
        {random_mat_away_from_zero(5, 3, rng)}));
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            return sum(cmul(sigmoid(in[0]), ad::tanh(in[0])));
        },
        {random_mat(4, 4, rng)}));
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            return sum(ad::log(add_const(cmul(in[0], in[0]), 0.5)));
        },
        {random_mat(3, 3, rng)}));

    // mse
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) { return mse(in[0], in[1]); },
        {random_mat(4, 2, rng), random_mat(4, 2, rng)}));

    // softmax cross entropy
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            return softmax_cross_entropy(in[0], 2);
        },
        {random_mat(5, 1, rng, 2.0)}));

    // population variance both axes
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            return sum(population_variance(in[0], 0));
        },
        {random_mat(5, 3, rng)}));
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            return sum(population_variance(in[0], 1));
        },
        {random_mat(3, 6, rng)}));

    // div_by_scalar and dirichlet variance
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            auto den = add_const(sum(cmul(in[0], in[0])), 1.0);
            return sum(div_by_scalar(in[0], den));
        },
        {random_mat(4, 1, rng)}));
    expect_ok(gradcheck::check(
        [](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            return dirichlet_variance_op(cmul(in[0], in[0]));
        },
        {random_mat_away_from_zero(3, 1, rng)}));

    // conv1d: gradients w.r.t. input, weight, bias; stride 1 and 2
    for (int stride : {1, 2}) {
        expect_ok(gradcheck::check(
            [stride](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
                return sum(conv1d(in[0], in[1], in[2], 3, stride, 1));
            },
            {random_mat(6, 2, rng), random_mat(6, 3, rng), random_mat(3, 1, rng)}));
    }

    // noise add is identity in gradient
    Rng noise_rng(9);
    expect_ok(gradcheck::check(
        [&noise_rng](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            Rng local(7);  // reseeded every build so forward is deterministic
            return sum(cmul(gaussian_noise_add(in[0], 0.25, local), in[0]));
        },
        {random_mat(3, 3, rng)}));
}

TEST_CASE("gradient check convlstm three step unroll") {
    Rng rng(77);
    // parameters as leaves: wx (K*Cin x 4H), wh (K*H x 4H), bias (4H x 1), inputs x3
    const int cin = 2, h = 3, k = 3, L = 4;
    std::vector<Matd> inputs = {random_mat(k * cin, 4 * h, rng, 0.5), random_mat(k * h, 4 * h, rng, 0.5),
                                random_mat(4 * h, 1, rng, 0.2),       random_mat(L, cin, rng),
                                random_mat(L, cin, rng),              random_mat(L, cin, rng)};
    auto res = gradcheck::check(
        [=](gradcheck::Taped& t, std::vector<gradcheck::Vard>& in) {
            nn::ConvLstmCellVars<double> cell{in[0], in[1], in[2], k, h};
            nn::ConvLstmState<double> st = nn::convlstm_zero_state(t, L, h);
            for (int step = 0; step < 3; ++step) st = nn::convlstm_step(cell, st, in[3 + static_cast<size_t>(step)]);
            return sum(cmul(st.h, st.h));
        },
        inputs);
    INFO(res.where);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("adam optimizer contract") {
    using P = nn::Parameter<double>;
    // zero gradient leaves parameters unchanged
    P p{"p", Matd::Constant(2, 1, 0.7), Matd::Zero(2, 1), true};
    nn::Adam<double> opt;
    std::vector<P*> params{&p};
    opt.init(params);
    opt.update(params);
    CHECK(p.value(0, 0) == doctest::Approx(0.7).epsilon(1e-15));

    // first step with g=1 moves by ~lr (hand-computed bias-corrected step)
    P q{"q", Matd::Constant(1, 1, 1.0), Matd::Constant(1, 1, 1.0), true};
    nn::Adam<double> opt2;
    std::vector<P*> qs{&q};
    opt2.init(qs);
    opt2.update(qs);
    // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
    CHECK(q.value(0, 0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-9));

    // determinism: two identical runs give bit-identical parameters
    auto run = [] {
        P r{"r", Matd::Constant(3, 1, 0.5), {}, true};
        nn::Adam<double> o;
        std::vector<P*> rs{&r};
        o.init(rs);
        for (int i = 0; i < 10; ++i) {
            r.grad = Matd::Constant(3, 1, 0.1 * (i + 1));
            o.update(rs);
        }
        return r.value;
    };
    Matd a = run(), b = run();
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    // missing grad is an error
    P m{"m", Matd::Constant(1, 1, 1.0), {}, true};
    nn::Adam<double> opt3;
    std::vector<P*> ms{&m};
    opt3.init(ms);
    CHECK_THROWS_AS(opt3.update(ms), ConfigError);
}
