#include "eleson/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Geometry>

#include "eleson/kv.hpp"
#include "eleson/magnetic.hpp"

namespace eleson {

namespace {
constexpr double kLeadSeconds = 1.0;    // quiet margin before/after a ride
constexpr double kLabelMarginSeconds = 1.0;  // boarding/alighting samples labeled Neither
constexpr double kAccelNoiseStd = 0.04;
constexpr double kGyroNoiseStd = 0.02;
constexpr double kMagNoiseStd = 0.25;
} // namespace

ConveyorProfile ConveyorProfile::elevator_default() {
    ConveyorProfile p;
    p.kind = ConveyorState::Elevator;
    p.accel_peak = 0.9;
    p.ramp_seconds = 2.0;
    p.cruise_seconds = 4.0;
    p.mag_distortion_amp = 8.0;
    return p;
}

ConveyorProfile ConveyorProfile::escalator_default() {
    ConveyorProfile p;
    p.kind = ConveyorState::Escalator;
    p.accel_peak = 0.55;
    p.ramp_seconds = 1.0;
    p.cruise_seconds = 6.0;
    p.incline_deg = 30.0;
    p.mag_distortion_amp = 4.0;
    p.mag_period_seconds = 0.8;
    return p;
}

void ConveyorProfile::validate() const {
    if (kind == ConveyorState::Neither) {
        if (accel_peak != 0 || ramp_seconds != 0 || cruise_seconds != 0 || incline_deg != 0 ||
            mag_distortion_amp != 0 || mag_period_seconds != 0)
            throw ConfigError("Neither profile must have all conveyor fields zero");
        return;
    }
    if (ramp_seconds <= 0) throw ConfigError("conveyor ramp_seconds must be positive");
    if (cruise_seconds < 0) throw ConfigError("conveyor cruise_seconds must be non-negative");
    if (kind == ConveyorState::Escalator && mag_period_seconds <= 0)
        throw ConfigError("escalator mag_period_seconds must be positive");
}

const char* behavior_kind_name(BehaviorKind k) {
    switch (k) {
        case BehaviorKind::Still: return "still";
        case BehaviorKind::Browsing: return "browsing";
        case BehaviorKind::Swinging: return "swinging";
        case BehaviorKind::InPocket: return "in_pocket";
        case BehaviorKind::InBag: return "in_bag";
        case BehaviorKind::Shaking: return "shaking";
        default: return "walking";
    }
}

BehaviorKind behavior_kind_from_name(const std::string& name) {
    for (int i = 0; i < kBehaviorKindCount; ++i) {
        const auto k = static_cast<BehaviorKind>(i);
        if (name == behavior_kind_name(k)) return k;
    }
    throw ConfigError("unknown behavior kind: " + name);
}

BehaviorProcess BehaviorProcess::defaults(BehaviorKind k) {
    BehaviorProcess b;
    b.kind = k;
    switch (k) {
        case BehaviorKind::Still:
            b.accel_amp = 0.0; b.gyro_amp = 0.0; b.freq_hz = 0.3; b.burst_prob = 0.0; b.mag_coupling = 0.0;
            break;
        case BehaviorKind::Browsing:
            b.accel_amp = 0.25; b.gyro_amp = 0.35; b.freq_hz = 0.5; b.burst_prob = 0.05; b.mag_coupling = 0.5;
            break;
        case BehaviorKind::Swinging:
            b.accel_amp = 1.8; b.gyro_amp = 1.9; b.freq_hz = 0.9; b.burst_prob = 0.08; b.mag_coupling = 0.9;
            break;
        case BehaviorKind::InPocket:
            b.accel_amp = 0.9; b.gyro_amp = 0.85; b.freq_hz = 1.8; b.burst_prob = 0.10; b.mag_coupling = 0.7;
            break;
        case BehaviorKind::InBag:
            b.accel_amp = 0.7; b.gyro_amp = 0.5; b.freq_hz = 1.6; b.burst_prob = 0.06; b.mag_coupling = 0.8;
            break;
        case BehaviorKind::Shaking:
            b.accel_amp = 2.4; b.gyro_amp = 2.8; b.freq_hz = 3.0; b.burst_prob = 0.25; b.mag_coupling = 1.0;
            break;
        case BehaviorKind::Walking:
            b.accel_amp = 1.5; b.gyro_amp = 0.65; b.freq_hz = 1.9; b.burst_prob = 0.10; b.mag_coupling = 0.6;
            break;
    }
    return b;
}

void BehaviorProcess::validate(double sample_rate) const {
    if (accel_amp < 0 || gyro_amp < 0) throw ConfigError("behavior amplitudes must be non-negative");
    if (freq_hz <= 0 || freq_hz >= sample_rate / 2)
        throw ConfigError("behavior freq_hz must lie in (0, sample_rate/2)");
    if (burst_prob < 0) throw ConfigError("behavior burst_prob must be non-negative");
}

void MagneticEnvironment::validate() const {
    const double norm = background_field.norm();
    if (norm < 20.0 || norm > 70.0)
        throw ConfigError("background field norm " + std::to_string(norm) +
                          " outside the Earth-field band [20, 70] microtesla");
    if (spatial_gradient_amp < 0) throw ConfigError("spatial_gradient_amp must be non-negative");
}

void ScenarioConfig::validate() const {
    if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
    if (duration_seconds <= 0) throw ConfigError("duration_seconds must be positive");
    if (noise_scale < 0) throw ConfigError("noise_scale must be non-negative");
    profile.validate();
    behavior.validate(sample_rate);
    environment.validate();
    if (profile.kind != ConveyorState::Neither &&
        duration_seconds < profile.ride_seconds() + 2 * kLeadSeconds)
        throw ConfigError("duration too short for conveyor profile: need at least " +
                          std::to_string(profile.ride_seconds() + 2 * kLeadSeconds) + "s");
}

namespace {

// first-order smoother used for OU-style colored noise
struct Ou {
    double alpha;
    double x = 0.0;
    Ou(double tau, double dt) : alpha(std::exp(-dt / tau)) {}
    double step(double draw) {
        x = alpha * x + std::sqrt(1.0 - alpha * alpha) * draw;
        return x;
    }
};

double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

Eigen::Vector3d unit_weights(Rng& rng) {
    Eigen::Vector3d w(rng.uniform(0.35, 1.0), rng.uniform(0.35, 1.0), rng.uniform(0.35, 1.0));
    return w / w.norm();
}

// Per-sample behavior output, all streams drawn from the behavior seed only.
struct BehaviorGen {
    const BehaviorProcess& b;
    double dt;
    Rng rng;
    Eigen::Vector3d wa, wg;
    double phase_a[3], phase_g[3];
    double impact_phase;
    Ou oua[3] = {{0.25, 0.0}, {0.25, 0.0}, {0.25, 0.0}};
    Ou oug[3] = {{0.25, 0.0}, {0.25, 0.0}, {0.25, 0.0}};
    Ou ouc{0.3, 0.0};
    double burst_env = 1.0;
    double burst_left = 0.0;

    BehaviorGen(const BehaviorProcess& proc, double dt_, std::uint64_t seed)
        : b(proc), dt(dt_), rng(seed),
          oua{{0.25, dt_}, {0.25, dt_}, {0.25, dt_}},
          oug{{0.25, dt_}, {0.25, dt_}, {0.25, dt_}},
          ouc{0.3, dt_} {
        wa = unit_weights(rng);
        wg = unit_weights(rng);
        for (int k = 0; k < 3; ++k) phase_a[k] = rng.uniform(0, 2 * M_PI);
        for (int k = 0; k < 3; ++k) phase_g[k] = rng.uniform(0, 2 * M_PI);
        impact_phase = rng.uniform(0, 1.0);
    }

    struct Out {
        Eigen::Vector3d accel;
        Eigen::Vector3d gyro;
        double mag_disturb;
    };

    Out step(double t) {
        // draws happen unconditionally so the stream stays aligned across kinds
        const double burst_draw = rng.uniform();
        double mix_a[3], mix_g[3];
        for (int k = 0; k < 3; ++k)
            mix_a[k] = clamp(0.6 * std::sin(2 * M_PI * b.freq_hz * t + phase_a[k]) + 0.45 * oua[k].step(rng.normal()),
                             -1.3, 1.3);
        for (int k = 0; k < 3; ++k)
            mix_g[k] = clamp(0.6 * std::sin(2 * M_PI * b.freq_hz * t + phase_g[k]) + 0.45 * oug[k].step(rng.normal()),
                             -1.3, 1.3);
        const double coup = ouc.step(rng.normal());

        if (burst_left <= 0.0 && burst_draw < b.burst_prob * dt) burst_left = 0.5;
        const double target = burst_left > 0.0 ? 1.9 : 1.0;
        burst_left = std::max(0.0, burst_left - dt);
        burst_env += (target - burst_env) * (dt / 0.08);

        Out out;
        for (int k = 0; k < 3; ++k) {
            out.accel[k] = b.accel_amp * burst_env * wa[k] * mix_a[k];
            out.gyro[k] = b.gyro_amp * burst_env * wg[k] * mix_g[k];
        }
        // foot-fall impacts for carried-while-moving styles
        if (b.kind == BehaviorKind::Walking || b.kind == BehaviorKind::InPocket ||
            b.kind == BehaviorKind::InBag) {
            const double period = 1.0 / b.freq_hz;
            const double s = std::fmod(t + impact_phase * period, period);
            out.accel[2] += 1.1 * b.accel_amp * std::exp(-s / 0.045);
        }
        out.mag_disturb = b.mag_coupling * std::min(out.gyro.norm(), 3.0) * coup;
        return out;
    }
};

} // namespace

std::pair<double, double> ride_interval(const ScenarioConfig& cfg) {
    if (cfg.profile.kind == ConveyorState::Neither) return {0.0, 0.0};
    const double rate = cfg.sample_rate;
    const double ride = cfg.profile.ride_seconds();
    const double start =
        std::lround(std::max(kLeadSeconds, (cfg.duration_seconds - ride) / 2.0) * rate) / rate;
    const double end = start + std::lround(ride * rate) / rate;
    return {start, end};
}

SessionData gen_session(const ScenarioConfig& cfg) {
    cfg.validate();
    const double rate = cfg.sample_rate;
    const double dt = 1.0 / rate;
    const int n = static_cast<int>(std::lround(cfg.duration_seconds * rate));

    const double ride = cfg.profile.ride_seconds();
    const bool has_ride = cfg.profile.kind != ConveyorState::Neither;
    const auto [ride_start, ride_end] = ride_interval(cfg);
    const int i0 = static_cast<int>(std::lround(ride_start * rate));
    const int ride_n = has_ride ? static_cast<int>(std::lround(ride * rate)) : 0;
    const int i1 = i0 + ride_n;
    (void)ride_end;
    const int ramp_n = has_ride ? static_cast<int>(std::lround(cfg.profile.ramp_seconds * rate)) : 0;
    const int margin_n = static_cast<int>(std::lround(kLabelMarginSeconds * rate));

    BehaviorGen behavior(cfg.behavior, dt, cfg.seed_behavior);
    Rng rng_u(cfg.seed_unobserved);
    Ou drift_ou(3.0, dt);

    const Eigen::Vector3d bg = cfg.environment.background_field;
    const double base_intensity = bg.norm();
    const Eigen::Vector3d bdir = bg / base_intensity;

    const double incline = cfg.profile.incline_deg * M_PI / 180.0;
    const Eigen::Vector3d incline_dir(std::cos(incline), 0.0, std::sin(incline));

    SessionData out;
    out.samples.resize(static_cast<size_t>(n));
    out.labels.assign(static_cast<size_t>(n), ConveyorState::Neither);

    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    double drift = 0.0;

    for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        const auto beh = behavior.step(t);

        // orientation random walk driven by the behavior gyro
        const double w = beh.gyro.norm();
        if (w > 1e-12) {
            Eigen::AngleAxisd da(w * dt, beh.gyro / w);
            q = q * Eigen::Quaterniond(da);
            q.normalize();
        }
        const Eigen::Matrix3d rot_t = q.toRotationMatrix().transpose();

        // transport pattern, world frame
        Eigen::Vector3d accel_world = Eigen::Vector3d::Zero();
        double mag_distortion = 0.0;
        const bool riding = has_ride && i >= i0 && i < i1;
        if (riding) {
            const double tr = (i - i0) * dt;
            if (cfg.profile.kind == ConveyorState::Elevator) {
                if (i < i0 + ramp_n)
                    accel_world.z() = cfg.profile.accel_peak;
                else if (i >= i1 - ramp_n)
                    accel_world.z() = -cfg.profile.accel_peak;
                mag_distortion = cfg.profile.mag_distortion_amp * std::pow(std::sin(M_PI * tr / ride), 2);
            } else {
                if (i < i0 + ramp_n)
                    accel_world = cfg.profile.accel_peak * incline_dir;
                else if (i >= i1 - ramp_n)
                    accel_world = -cfg.profile.accel_peak * incline_dir;
                else
                    accel_world.z() = 0.12 * std::abs(cfg.profile.accel_peak) *
                                      std::sin(2 * M_PI * tr / cfg.profile.mag_period_seconds);
                mag_distortion =
                    cfg.profile.mag_distortion_amp * std::sin(2 * M_PI * tr / cfg.profile.mag_period_seconds);
            }
        }

        // location drift accumulates only while the phone travels; it rides
        // the unobserved stream, so noise_scale gates it too
        const double drift_draw = drift_ou.step(rng_u.normal());
        const bool moving = riding || cfg.behavior.kind == BehaviorKind::Walking;
        if (moving) drift += cfg.noise_scale * cfg.environment.spatial_gradient_amp * drift_draw * dt;

        const double ns = cfg.noise_scale;
        Eigen::Vector3d noise_a(rng_u.normal(), rng_u.normal(), rng_u.normal());
        Eigen::Vector3d noise_g(rng_u.normal(), rng_u.normal(), rng_u.normal());
        Eigen::Vector3d noise_m(rng_u.normal(), rng_u.normal(), rng_u.normal());

        InsSample& s = out.samples[static_cast<size_t>(i)];
        s.t = t;
        s.accel = rot_t * accel_world + beh.accel + ns * kAccelNoiseStd * noise_a;
        s.gyro = beh.gyro + ns * kGyroNoiseStd * noise_g;
        const double intensity = base_intensity + mag_distortion + drift;
        s.mag = rot_t * (bdir * intensity) + Eigen::Vector3d(beh.mag_disturb, 0, 0) +
                ns * kMagNoiseStd * noise_m;

        if (has_ride && i >= i0 + margin_n && i < i1 - margin_n)
            out.labels[static_cast<size_t>(i)] = cfg.profile.kind;
    }
    return out;
}

std::pair<SessionData, SessionData> gen_interventional_pair(const ScenarioConfig& cfg) {
    SessionData experimental = gen_session(cfg);
    ScenarioConfig control_cfg = cfg;
    control_cfg.profile = ConveyorProfile::neither();
    SessionData control = gen_session(control_cfg);
    return {std::move(experimental), std::move(control)};
}

BehaviorMix BehaviorMix::uniform_everyday() {
    BehaviorMix m;
    m.weights = {1, 1, 1, 1, 1, 1, 1};
    return m;
}

GenOptions::GenOptions() {
    for (int i = 0; i < kBehaviorKindCount; ++i)
        behaviors[static_cast<size_t>(i)] = BehaviorProcess::defaults(static_cast<BehaviorKind>(i));
}

namespace {

BehaviorKind sample_kind(const BehaviorMix& mix, Rng& rng) {
    double total = 0;
    for (double w : mix.weights) {
        if (w < 0) throw ConfigError("behavior mix weights must be non-negative");
        total += w;
    }
    if (total <= 0) throw ConfigError("behavior mix must have positive total weight");
    double u = rng.uniform() * total;
    for (int i = 0; i < kBehaviorKindCount; ++i) {
        u -= mix.weights[static_cast<size_t>(i)];
        if (u <= 0) return static_cast<BehaviorKind>(i);
    }
    return BehaviorKind::Walking;
}

Eigen::Vector3d random_field(Rng& rng) {
    Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
    while (dir.norm() < 1e-6) dir = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    if (dir.z() < 0) dir.z() = -dir.z();  // keep a downward-ish vertical component convention
    return dir * rng.uniform(26.0, 58.0);
}

} // namespace

Dataset gen_dataset(int n_sessions, const std::array<double, 3>& mix, const BehaviorMix& behavior_mix,
                    std::uint64_t seed, const GenOptions& options) {
    double mix_total = 0;
    for (double p : mix) {
        if (p < 0) throw ConfigError("class proportions must be non-negative");
        mix_total += p;
    }
    if (std::abs(mix_total - 1.0) > 1e-6) throw ConfigError("class proportions must sum to 1");
    if (n_sessions <= 0) throw ConfigError("n_sessions must be positive");

    Rng rng(seed_split(seed, 0));

    // conveyor sessions yield fewer on-class windows, so over-weight them
    std::array<double, 3> sw{mix[0] * 2.0, mix[1] * 2.0, mix[2]};
    const double sw_total = sw[0] + sw[1] + sw[2];
    std::array<int, 3> session_counts{0, 0, 0};
    std::array<double, 3> remainders{0, 0, 0};
    int assigned = 0;
    for (int c = 0; c < 3; ++c) {
        const double exact = n_sessions * sw[static_cast<size_t>(c)] / sw_total;
        session_counts[static_cast<size_t>(c)] = static_cast<int>(exact);
        remainders[static_cast<size_t>(c)] = exact - session_counts[static_cast<size_t>(c)];
        assigned += session_counts[static_cast<size_t>(c)];
    }
    while (assigned < n_sessions) {
        int best = 0;
        for (int c = 1; c < 3; ++c)
            if (remainders[static_cast<size_t>(c)] > remainders[static_cast<size_t>(best)]) best = c;
        session_counts[static_cast<size_t>(best)]++;
        remainders[static_cast<size_t>(best)] = -1;
        ++assigned;
    }

    std::vector<ConveyorState> session_kinds;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < session_counts[static_cast<size_t>(c)]; ++i)
            session_kinds.push_back(state_from_code(c));
    // seeded shuffle
    for (size_t i = session_kinds.size(); i > 1; --i)
        std::swap(session_kinds[i - 1], session_kinds[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);

    std::vector<Eigen::Vector3d> fields = options.background_fields;
    if (fields.empty())
        for (int i = 0; i < options.locations; ++i) fields.push_back(random_field(rng));

    Dataset ds;
    ds.meta.generator_seed = seed;
    std::array<std::vector<size_t>, 3> by_class;

    for (int i = 0; i < n_sessions; ++i) {
        const ConveyorState kind = session_kinds[static_cast<size_t>(i)];
        ScenarioConfig cfg;
        cfg.sample_rate = options.sample_rate;
        cfg.noise_scale = options.noise_scale;
        cfg.behavior = options.behaviors[static_cast<size_t>(sample_kind(behavior_mix, rng))];
        const int loc = rng.uniform_int(static_cast<int>(fields.size()));
        cfg.environment.background_field = fields[static_cast<size_t>(loc)];
        cfg.environment.spatial_gradient_amp = rng.uniform(0.5, 2.0);

        if (kind == ConveyorState::Elevator) {
            cfg.profile.kind = kind;
            cfg.profile.accel_peak = rng.uniform(0.7, 1.1) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
            cfg.profile.ramp_seconds = rng.uniform(1.6, 2.4);
            cfg.profile.cruise_seconds = rng.uniform(2.0, 6.0);
            cfg.profile.mag_distortion_amp = rng.uniform(6.0, 10.0);
        } else if (kind == ConveyorState::Escalator) {
            cfg.profile.kind = kind;
            cfg.profile.accel_peak = rng.uniform(0.45, 0.7) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
            cfg.profile.ramp_seconds = rng.uniform(0.8, 1.4);
            cfg.profile.cruise_seconds = rng.uniform(4.0, 8.0);
            cfg.profile.incline_deg = rng.uniform(27.0, 33.0);
            cfg.profile.mag_distortion_amp = rng.uniform(3.0, 5.0);
            cfg.profile.mag_period_seconds = rng.uniform(0.7, 0.9);
        }
        const double min_dur = cfg.profile.ride_seconds() + 2 * kLeadSeconds + 0.2;
        cfg.duration_seconds = std::max(rng.uniform(10.0, 14.0), min_dur);
        cfg.seed_behavior = seed_split(seed, 1000 + 2 * static_cast<std::uint64_t>(i));
        cfg.seed_unobserved = seed_split(seed, 1001 + 2 * static_cast<std::uint64_t>(i));

        SessionData session = gen_session(cfg);
        session.session_id = "s" + std::to_string(i);
        session.location_id = "loc" + std::to_string(loc);

        auto windows = window_labeled_session(session.samples, session.labels, options.window_seconds,
                                              options.stride_seconds, options.sample_rate,
                                              session.session_id, session.location_id);
        for (auto& lw : windows) {
            lw.vp_flag = auto_label_vp(lw.window);
            by_class[static_cast<size_t>(state_code(lw.label))].push_back(ds.records.size());
            ds.records.push_back(std::move(lw));
        }
    }

    // subsample the window pool to the requested proportions
    long long n_total = -1;
    for (int c = 0; c < 3; ++c) {
        if (mix[static_cast<size_t>(c)] <= 0) continue;
        if (by_class[static_cast<size_t>(c)].empty())
            throw ConfigError(std::string("requested class produced no windows: ") +
                              state_name(state_from_code(c)));
        const long long cap = static_cast<long long>(
            static_cast<double>(by_class[static_cast<size_t>(c)].size()) / mix[static_cast<size_t>(c)]);
        if (n_total < 0 || cap < n_total) n_total = cap;
    }

    std::vector<size_t> selected;
    for (int c = 0; c < 3; ++c) {
        if (mix[static_cast<size_t>(c)] <= 0) continue;
        auto& pool = by_class[static_cast<size_t>(c)];
        auto target = static_cast<size_t>(std::llround(mix[static_cast<size_t>(c)] * static_cast<double>(n_total)));
        target = std::min(target, pool.size());
        for (size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
        selected.insert(selected.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(target));
    }
    std::sort(selected.begin(), selected.end());

    Dataset out;
    out.meta = ds.meta;
    out.records.reserve(selected.size());
    for (size_t idx : selected) out.records.push_back(std::move(ds.records[idx]));
    out.refresh_proportions();
    out.validate();
    return out;
}

// ----- scenario files -----

ScenarioConfig parse_scenario(std::istream& is) {
    ScenarioConfig cfg;
    cfg.behavior = BehaviorProcess::defaults(BehaviorKind::Still);
    bool behavior_named = false;

    std::map<std::string, std::string> kvs;
    for (auto& [k, v] : read_kv(is)) kvs[k] = v;

    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = kvs.find(key);
        if (it == kvs.end()) return std::nullopt;
        std::string v = it->second;
        kvs.erase(it);
        return v;
    };
    auto num = [](const std::string& v, const char* key) {
        try {
            return std::stod(v);
        } catch (...) {
            throw ConfigError(std::string("bad numeric value for ") + key + ": " + v);
        }
    };

    if (auto v = take("kind")) {
        if (*v == "elevator") cfg.profile = ConveyorProfile::elevator_default();
        else if (*v == "escalator") cfg.profile = ConveyorProfile::escalator_default();
        else if (*v == "neither") cfg.profile = ConveyorProfile::neither();
        else throw ConfigError("unknown conveyor kind: " + *v);
    }
    if (auto v = take("accel_peak")) cfg.profile.accel_peak = num(*v, "accel_peak");
    if (auto v = take("ramp_seconds")) cfg.profile.ramp_seconds = num(*v, "ramp_seconds");
    if (auto v = take("cruise_seconds")) cfg.profile.cruise_seconds = num(*v, "cruise_seconds");
    if (auto v = take("incline_deg")) cfg.profile.incline_deg = num(*v, "incline_deg");
    if (auto v = take("mag_distortion_amp")) cfg.profile.mag_distortion_amp = num(*v, "mag_distortion_amp");
    if (auto v = take("mag_period_seconds")) cfg.profile.mag_period_seconds = num(*v, "mag_period_seconds");

    if (auto v = take("behavior")) {
        cfg.behavior = BehaviorProcess::defaults(behavior_kind_from_name(*v));
        behavior_named = true;
    }
    if (auto v = take("behavior_accel_amp")) cfg.behavior.accel_amp = num(*v, "behavior_accel_amp");
    if (auto v = take("behavior_gyro_amp")) cfg.behavior.gyro_amp = num(*v, "behavior_gyro_amp");
    if (auto v = take("behavior_freq_hz")) cfg.behavior.freq_hz = num(*v, "behavior_freq_hz");
    if (auto v = take("behavior_burst_prob")) cfg.behavior.burst_prob = num(*v, "behavior_burst_prob");
    if (auto v = take("behavior_mag_coupling")) cfg.behavior.mag_coupling = num(*v, "behavior_mag_coupling");
    (void)behavior_named;

    if (auto v = take("background_field")) {
        std::stringstream ss(*v);
        std::string tok;
        Eigen::Vector3d f;
        for (int k = 0; k < 3; ++k) {
            if (!std::getline(ss, tok, ',')) throw ConfigError("background_field needs 3 comma-separated values");
            f[k] = num(tok, "background_field");
        }
        cfg.environment.background_field = f;
    }
    if (auto v = take("spatial_gradient_amp")) cfg.environment.spatial_gradient_amp = num(*v, "spatial_gradient_amp");

    if (auto v = take("duration_seconds")) cfg.duration_seconds = num(*v, "duration_seconds");
    if (auto v = take("seed_behavior")) cfg.seed_behavior = static_cast<std::uint64_t>(std::stoull(*v));
    if (auto v = take("seed_unobserved")) cfg.seed_unobserved = static_cast<std::uint64_t>(std::stoull(*v));
    if (auto v = take("sample_rate")) cfg.sample_rate = num(*v, "sample_rate");
    if (auto v = take("noise_scale")) cfg.noise_scale = num(*v, "noise_scale");

    if (!kvs.empty()) throw ConfigError("unknown scenario key: " + kvs.begin()->first);
    cfg.validate();
    return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open scenario file: " + path);
    return parse_scenario(f);
}

} // namespace eleson
