#include <doctest.h>

#include <cmath>

#include "eleson/ins.hpp"

using namespace eleson;

namespace {

std::vector<InsSample> uniform_session(int n, double rate) {
    std::vector<InsSample> s(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        s[static_cast<size_t>(i)].t = i / rate;
        s[static_cast<size_t>(i)].accel = Eigen::Vector3d(0.1 * i, 0, 0);
    }
    return s;
}

} // namespace

TEST_CASE("windowing counts and remainder rule") {
    // 10 s at 100 Hz, 2 s window and stride -> 5 windows of T=200
    auto w = window_session(uniform_session(1000, 100.0), 2.0, 2.0, 100.0);
    CHECK(w.size() == 5);
    CHECK(w[0].length() == 200);

    // shorter than one window -> none
    CHECK(window_session(uniform_session(190, 100.0), 2.0, 2.0, 100.0).empty());

    // 401 samples -> 2 windows, last sample dropped
    auto w2 = window_session(uniform_session(401, 100.0), 2.0, 2.0, 100.0);
    CHECK(w2.size() == 2);
}

TEST_CASE("windowing partitions the prefix") {
    const int n = 1034;
    auto session = uniform_session(n, 100.0);
    auto w = window_session(session, 2.0, 2.0, 100.0);
    const int t = 200;
    REQUIRE(w.size() == static_cast<size_t>(n / t));
    for (size_t k = 0; k < w.size(); ++k)
        for (int i = 0; i < t; ++i)
            CHECK(w[k].samples(i, 0) ==
                  doctest::Approx(session[k * t + static_cast<size_t>(i)].accel[0]).epsilon(1e-6));
}

TEST_CASE("windowing rejects gappy sessions") {
    auto s = uniform_session(400, 100.0);
    s[200].t += 0.02;  // 2.6 periods after previous wait-- gap becomes 0.03s > 1.5*0.01
    for (size_t i = 201; i < s.size(); ++i) s[i].t += 0.02;
    CHECK_THROWS_AS(window_session(s, 2.0, 2.0, 100.0), DataError);
}

TEST_CASE("split_modalities routes columns and inverts") {
    InsWindow w;
    w.sample_rate = 100;
    w.samples.resize(200, 9);
    w.samples.leftCols<3>().setConstant(1.f);
    w.samples.middleCols<3>(3).setConstant(2.f);
    w.samples.rightCols<3>().setConstant(3.f);
    auto [motion, magnetic] = split_modalities(w);
    CHECK(motion.rows() == 200);
    CHECK(motion.cols() == 6);
    CHECK(magnetic.cols() == 3);
    CHECK(motion(0, 0) == 1.f);
    CHECK(motion(0, 5) == 2.f);
    CHECK(magnetic(7, 2) == 3.f);

    Eigen::MatrixXf recon(200, 9);
    recon << motion, magnetic;
    CHECK((recon - w.samples).cwiseAbs().maxCoeff() == 0.f);
}

TEST_CASE("standardize centering, identity and round trip") {
    InsWindow w;
    w.sample_rate = 100;
    w.samples = Eigen::MatrixXf::Random(50, 9) * 5.f;

    ChannelStats ident;  // mean 0, std 1
    auto same = standardize(w, ident);
    CHECK((same.samples - w.samples).cwiseAbs().maxCoeff() == 0.f);

    ChannelStats st = compute_channel_stats({&w});
    auto z = standardize(w, st);
    for (int c = 0; c < 9; ++c) CHECK(std::abs(z.samples.col(c).mean()) < 1e-5);

    auto back = unstandardize(z, st);
    CHECK((back.samples - w.samples).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("training split statistics after standardization") {
    // independent oracle: recompute moments on the transformed split
    std::vector<InsWindow> ws(4);
    Rng rng(7);
    for (auto& w : ws) {
        w.sample_rate = 100;
        w.samples.resize(100, 9);
        for (int i = 0; i < 100; ++i)
            for (int c = 0; c < 9; ++c)
                w.samples(i, c) = static_cast<float>(rng.normal(2.0 * c, 1.0 + 0.3 * c));
    }
    std::vector<const InsWindow*> ptrs;
    for (auto& w : ws) ptrs.push_back(&w);
    ChannelStats st = compute_channel_stats(ptrs);

    Eigen::Array<double, 9, 1> sum = Eigen::Array<double, 9, 1>::Zero();
    Eigen::Array<double, 9, 1> sumsq = Eigen::Array<double, 9, 1>::Zero();
    long long n = 0;
    for (auto& w : ws) {
        auto z = standardize(w, st);
        sum += z.samples.colwise().sum().transpose().array().cast<double>();
        sumsq += z.samples.array().square().colwise().sum().transpose().cast<double>();
        n += z.length();
    }
    for (int c = 0; c < 9; ++c) {
        const double mean = sum[c] / n;
        const double var = sumsq[c] / n - mean * mean;
        CHECK(std::abs(mean) < 1e-5);
        CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-4);
    }
}

TEST_CASE("gyro peak magnitude") {
    InsWindow w;
    w.sample_rate = 100;
    w.samples = Eigen::MatrixXf::Zero(100, 9);
    CHECK(gyro_peak_magnitude(w) == 0.0);

    w.samples(40, 5) = 2.0f;
    CHECK(gyro_peak_magnitude(w) == doctest::Approx(2.0));

    w.samples.middleCols<3>(3).setConstant(1.f);
    CHECK(gyro_peak_magnitude(w) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-4));
}

TEST_CASE("gyro peak is rotation invariant") {
    Rng rng(3);
    InsWindow w;
    w.sample_rate = 100;
    w.samples = Eigen::MatrixXf::Zero(20, 9);
    for (int i = 0; i < 20; ++i)
        for (int c = 3; c < 6; ++c) w.samples(i, c) = static_cast<float>(rng.normal(0, 1));
    const double before = gyro_peak_magnitude(w);

    // rotate each gyro sample by a fixed rotation
    Eigen::Matrix3f rot =
        Eigen::AngleAxisf(0.83f, Eigen::Vector3f(1, 2, -1).normalized()).toRotationMatrix();
    for (int i = 0; i < 20; ++i) {
        Eigen::Vector3f g = w.samples.block<1, 3>(i, 3).transpose();
        w.samples.block<1, 3>(i, 3) = (rot * g).transpose();
    }
    CHECK(gyro_peak_magnitude(w) == doctest::Approx(before).epsilon(1e-5));
}

TEST_CASE("majority labels with ties to neither") {
    auto session = uniform_session(400, 100.0);
    std::vector<ConveyorState> labels(400, ConveyorState::Neither);
    for (int i = 100; i < 300; ++i) labels[static_cast<size_t>(i)] = ConveyorState::Elevator;
    auto lw = window_labeled_session(session, labels, 2.0, 2.0, 100.0, "s", "l");
    REQUIRE(lw.size() == 2);
    // both windows are exactly half elevator -> tie -> Neither
    CHECK(lw[0].label == ConveyorState::Neither);
    CHECK(lw[1].label == ConveyorState::Neither);

    for (int i = 0; i < 300; ++i) labels[static_cast<size_t>(i)] = ConveyorState::Escalator;
    auto lw2 = window_labeled_session(session, labels, 2.0, 2.0, 100.0, "s", "l");
    CHECK(lw2[0].label == ConveyorState::Escalator);
}
