#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "eleson/magnetic.hpp"
#include "eleson/synth.hpp"

using namespace eleson;

namespace {

ScenarioConfig still_config(ConveyorProfile profile, double noise_scale = 0.0) {
    ScenarioConfig cfg;
    cfg.profile = std::move(profile);
    cfg.behavior = BehaviorProcess::defaults(BehaviorKind::Still);
    cfg.environment.background_field = Eigen::Vector3d(18, -4, 42);
    cfg.environment.spatial_gradient_amp = 1.0;
    cfg.duration_seconds = 12.0;
    cfg.seed_behavior = 11;
    cfg.seed_unobserved = 12;
    cfg.noise_scale = noise_scale;
    return cfg;
}

bool sessions_identical(const SessionData& a, const SessionData& b) {
    if (a.samples.size() != b.samples.size()) return false;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        if (a.samples[i].accel != b.samples[i].accel) return false;
        if (a.samples[i].gyro != b.samples[i].gyro) return false;
        if (a.samples[i].mag != b.samples[i].mag) return false;
    }
    return a.labels == b.labels;
}

} // namespace

TEST_CASE("no sources means constant channels") {
    auto cfg = still_config(ConveyorProfile::neither());
    SessionData s = gen_session(cfg);
    REQUIRE(s.samples.size() == 1200);
    for (const auto& smp : s.samples) {
        CHECK(smp.accel.norm() == 0.0);
        CHECK(smp.gyro.norm() == 0.0);
        CHECK((smp.mag - cfg.environment.background_field).norm() == 0.0);
    }
    for (auto l : s.labels) CHECK(l == ConveyorState::Neither);
}

TEST_CASE("elevator acceleration integrates to zero net velocity") {
    auto cfg = still_config(ConveyorProfile::elevator_default());
    SessionData s = gen_session(cfg);
    double v = 0;
    for (const auto& smp : s.samples) v += smp.accel.z() / cfg.sample_rate;
    CHECK(std::abs(v) < 1e-3);
}

TEST_CASE("generation is deterministic") {
    auto cfg = still_config(ConveyorProfile::escalator_default(), 1.0);
    cfg.behavior = BehaviorProcess::defaults(BehaviorKind::Swinging);
    CHECK(sessions_identical(gen_session(cfg), gen_session(cfg)));
}

TEST_CASE("duration too short is rejected") {
    auto cfg = still_config(ConveyorProfile::elevator_default());
    cfg.duration_seconds = 5.0;  // ride alone needs 8 s
    CHECK_THROWS_AS(gen_session(cfg), ConfigError);
}

TEST_CASE("interventional pair on neither profile is a no-op") {
    auto cfg = still_config(ConveyorProfile::neither(), 1.0);
    cfg.behavior = BehaviorProcess::defaults(BehaviorKind::Walking);
    auto [experimental, control] = gen_interventional_pair(cfg);
    CHECK(sessions_identical(experimental, control));
}

TEST_CASE("interventional pair isolates the transport pattern") {
    auto cfg = still_config(ConveyorProfile::elevator_default(), 1.0);
    cfg.behavior = BehaviorProcess::defaults(BehaviorKind::Browsing);
    auto [experimental, control] = gen_interventional_pair(cfg);
    const auto [r0, r1] = ride_interval(cfg);

    for (size_t i = 0; i < experimental.samples.size(); ++i) {
        const auto& e = experimental.samples[i];
        const auto& c = control.samples[i];
        // transport adds no rotation: gyro difference identically zero
        CHECK((e.gyro - c.gyro).norm() == 0.0);
        const double t = e.t;
        if (t < r0 || t >= r1) {
            CHECK((e.accel - c.accel).norm() == 0.0);
        }
    }
}

TEST_CASE("transport acceleration peak matches the profile") {
    // with a Still behavior the phone frame stays aligned to the world frame
    auto cfg = still_config(ConveyorProfile::elevator_default());
    cfg.noise_scale = 1.0;
    auto [experimental, control] = gen_interventional_pair(cfg);
    double peak = 0;
    for (size_t i = 0; i < experimental.samples.size(); ++i)
        peak = std::max(peak, std::abs(experimental.samples[i].accel.z() - control.samples[i].accel.z()));
    CHECK(std::abs(peak - cfg.profile.accel_peak) < 1e-6);
}

TEST_CASE("seed separation") {
    auto base = still_config(ConveyorProfile::elevator_default(), 1.0);
    base.behavior = BehaviorProcess::defaults(BehaviorKind::Swinging);
    SessionData ref = gen_session(base);

    // changing the unobserved seed keeps the behavior trajectory (gyro is
    // behavior plus noise; compare the noise-free behavior by differencing
    // two noise realizations of the same behavior seed)
    auto cfg2 = base;
    cfg2.seed_unobserved = 999;
    SessionData other = gen_session(cfg2);
    auto cfg3 = base;
    cfg3.noise_scale = 0.0;
    SessionData clean = gen_session(cfg3);
    auto cfg4 = cfg2;
    cfg4.noise_scale = 0.0;
    SessionData clean2 = gen_session(cfg4);
    CHECK(sessions_identical(clean, clean2));  // noise seed does not touch behavior or transport

    // changing the behavior seed with noise off alters the signal
    auto cfg5 = cfg3;
    cfg5.seed_behavior = 777;
    CHECK_FALSE(sessions_identical(clean, gen_session(cfg5)));

    // noise realization actually differs
    bool any_diff = false;
    for (size_t i = 0; i < ref.samples.size() && !any_diff; ++i)
        any_diff = (ref.samples[i].accel - other.samples[i].accel).norm() > 0;
    CHECK(any_diff);
}

TEST_CASE("escalator magnetic ripple is periodic") {
    auto cfg = still_config(ConveyorProfile::escalator_default());
    SessionData s = gen_session(cfg);
    const auto [r0, r1] = ride_interval(cfg);
    const int rate = static_cast<int>(cfg.sample_rate);
    const int a = static_cast<int>((r0 + cfg.profile.ramp_seconds) * rate);
    const int b = static_cast<int>((r1 - cfg.profile.ramp_seconds) * rate);

    std::vector<double> intensity;
    for (int i = a; i < b; ++i) intensity.push_back(s.samples[static_cast<size_t>(i)].mag.norm());
    const double mean = std::accumulate(intensity.begin(), intensity.end(), 0.0) / intensity.size();
    for (auto& v : intensity) v -= mean;

    const int period_n = static_cast<int>(std::lround(cfg.profile.mag_period_seconds * rate));
    auto autocorr = [&](int lag) {
        double acc = 0;
        for (size_t i = 0; i + static_cast<size_t>(lag) < intensity.size(); ++i)
            acc += intensity[i] * intensity[i + static_cast<size_t>(lag)];
        return acc;
    };
    int best_lag = period_n / 2;
    double best = autocorr(best_lag);
    for (int lag = period_n / 2; lag <= period_n * 3 / 2; ++lag) {
        const double v = autocorr(lag);
        if (v > best) {
            best = v;
            best_lag = lag;
        }
    }
    CHECK(std::abs(best_lag - period_n) <= 1);
}

TEST_CASE("location shift moves intensity mean by the field norm difference") {
    auto cfg1 = still_config(ConveyorProfile::elevator_default());
    auto cfg2 = cfg1;
    cfg2.environment.background_field = Eigen::Vector3d(-30, 12, 31);

    SessionData s1 = gen_session(cfg1);
    SessionData s2 = gen_session(cfg2);
    double m1 = 0, m2 = 0;
    for (size_t i = 0; i < s1.samples.size(); ++i) {
        m1 += s1.samples[i].mag.norm();
        m2 += s2.samples[i].mag.norm();
    }
    m1 /= static_cast<double>(s1.samples.size());
    m2 /= static_cast<double>(s2.samples.size());
    const double norm_diff = cfg1.environment.background_field.norm() - cfg2.environment.background_field.norm();
    CHECK(m1 - m2 == doctest::Approx(norm_diff).epsilon(1e-9));

    // conveyor distortion component identical once the offset is removed
    const double base1 = cfg1.environment.background_field.norm();
    const double base2 = cfg2.environment.background_field.norm();
    for (size_t i = 0; i < s1.samples.size(); ++i)
        CHECK(s1.samples[i].mag.norm() - base1 ==
              doctest::Approx(s2.samples[i].mag.norm() - base2).epsilon(1e-9));
}

TEST_CASE("dataset generation hits the requested mix") {
    Dataset ds = gen_dataset(1000, {0.2, 0.2, 0.6}, BehaviorMix::uniform_everyday(), 7);
    REQUIRE(ds.records.size() > 500);
    std::array<double, 3> counts{0, 0, 0};
    for (const auto& r : ds.records) counts[static_cast<size_t>(state_code(r.label))] += 1;
    for (int c = 0; c < 3; ++c) {
        const double prop = counts[static_cast<size_t>(c)] / static_cast<double>(ds.records.size());
        CHECK(std::abs(prop - (c == 2 ? 0.6 : 0.2)) < 0.02);
        CHECK(ds.meta.class_proportions[static_cast<size_t>(c)] == doctest::Approx(prop));
    }
    ds.validate();

    // determinism of the whole dataset path
    Dataset again = gen_dataset(1000, {0.2, 0.2, 0.6}, BehaviorMix::uniform_everyday(), 7);
    REQUIRE(again.records.size() == ds.records.size());
    for (size_t i = 0; i < ds.records.size(); ++i) {
        CHECK(again.records[i].label == ds.records[i].label);
        CHECK((again.records[i].window.samples - ds.records[i].window.samples).cwiseAbs().maxCoeff() == 0.f);
    }
}

TEST_CASE("degenerate mix yields a single class") {
    Dataset ds = gen_dataset(50, {1.0, 0.0, 0.0}, BehaviorMix::uniform_everyday(), 3);
    REQUIRE(!ds.records.empty());
    for (const auto& r : ds.records) CHECK(r.label == ConveyorState::Elevator);
}

TEST_CASE("high-rate swinging windows are flagged as perturbations") {
    GenOptions options;
    options.behaviors[static_cast<size_t>(BehaviorKind::Swinging)].gyro_amp = 3.0;
    BehaviorMix mix;
    mix.weights = {0, 0, 1, 0, 0, 0, 0};  // swinging only
    Dataset ds = gen_dataset(60, {0.3, 0.3, 0.4}, mix, 5, options);
    REQUIRE(ds.records.size() > 100);
    long long vp1 = 0;
    for (const auto& r : ds.records) vp1 += r.vp_flag == 1 ? 1 : 0;
    CHECK(static_cast<double>(vp1) / static_cast<double>(ds.records.size()) >= 0.95);
}

TEST_CASE("scenario file parsing") {
    std::stringstream ss(R"(# escalator scenario
kind=escalator
accel_peak=0.6
cruise_seconds=5.5
behavior=swinging
behavior_gyro_amp=2.0
background_field=20,-5,40
duration_seconds=11
seed_behavior=4
seed_unobserved=9
noise_scale=0.5
)");
    ScenarioConfig cfg = parse_scenario(ss);
    CHECK(cfg.profile.kind == ConveyorState::Escalator);
    CHECK(cfg.profile.accel_peak == doctest::Approx(0.6));
    CHECK(cfg.profile.cruise_seconds == doctest::Approx(5.5));
    CHECK(cfg.profile.mag_period_seconds == doctest::Approx(0.8));  // default kept
    CHECK(cfg.behavior.kind == BehaviorKind::Swinging);
    CHECK(cfg.behavior.gyro_amp == doctest::Approx(2.0));
    CHECK(cfg.environment.background_field.x() == doctest::Approx(20));
    CHECK(cfg.seed_unobserved == 9);

    std::stringstream bad("kind=escalator\nbogus_key=1\n");
    CHECK_THROWS_AS(parse_scenario(bad), ConfigError);

    std::stringstream bad_field("background_field=100,0,0\n");
    CHECK_THROWS_AS(parse_scenario(bad_field), ConfigError);
}
