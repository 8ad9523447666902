#include "eleson/benchmark.hpp"

#include <algorithm>
#include <cmath>

#include "eleson/magnetic.hpp"
#include "eleson/pipeline.hpp"

namespace eleson {

namespace {

ScenarioConfig draw_scenario(ConveyorState kind, const BehaviorMix& behavior_mix,
                             const std::vector<Eigen::Vector3d>& fields, const GenOptions& options,
                             Rng& rng, std::uint64_t seed, std::uint64_t session_index, int& loc_out) {
    ScenarioConfig cfg;
    cfg.sample_rate = options.sample_rate;
    cfg.noise_scale = options.noise_scale;

    double total = 0;
    for (double w : behavior_mix.weights) total += w;
    double u = rng.uniform() * total;
    int bk = kBehaviorKindCount - 1;
    for (int i = 0; i < kBehaviorKindCount; ++i) {
        u -= behavior_mix.weights[static_cast<size_t>(i)];
        if (u <= 0) {
            bk = i;
            break;
        }
    }
    cfg.behavior = options.behaviors[static_cast<size_t>(bk)];

    loc_out = rng.uniform_int(static_cast<int>(fields.size()));
    cfg.environment.background_field = fields[static_cast<size_t>(loc_out)];
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
    const double min_dur = cfg.profile.ride_seconds() + 2.2;
    cfg.duration_seconds = std::max(rng.uniform(10.0, 14.0), min_dur);
    cfg.seed_behavior = seed_split(seed, 5000 + 2 * session_index);
    cfg.seed_unobserved = seed_split(seed, 5001 + 2 * session_index);
    return cfg;
}

} // namespace

Dataset gen_mixture_dataset(int target_windows, const std::array<double, 3>& mix,
                            const std::array<BehaviorMix, 3>& behavior_by_class,
                            const std::vector<Eigen::Vector3d>& fields, std::uint64_t seed,
                            const GenOptions& options, const std::string& id_prefix) {
    if (fields.empty()) throw ConfigError("benchmark needs at least one background field");
    Rng rng(seed_split(seed, 3));

    Dataset pool;
    std::array<std::vector<size_t>, 3> by_class;
    std::array<long long, 3> want{};
    for (int c = 0; c < 3; ++c)
        want[static_cast<size_t>(c)] =
            static_cast<long long>(std::ceil(mix[static_cast<size_t>(c)] * target_windows * 1.25)) + 4;

    std::uint64_t session_index = 0;
    // conveyor sessions also shed Neither windows (margins and lead-in/out),
    // so generate class by class until every pool is full
    while (true) {
        int deficit_class = -1;
        for (int c = 0; c < 3; ++c) {
            if (mix[static_cast<size_t>(c)] <= 0) continue;
            if (static_cast<long long>(by_class[static_cast<size_t>(c)].size()) < want[static_cast<size_t>(c)]) {
                deficit_class = c;
                break;
            }
        }
        if (deficit_class < 0) break;
        // generating conveyor sessions fills Neither too, so prefer them
        ConveyorState kind = state_from_code(deficit_class);
        if (deficit_class == 2 &&
            static_cast<long long>(by_class[0].size()) < want[0] * 2)  // any conveyor still useful
            kind = rng.uniform() < 0.5 ? ConveyorState::Elevator : ConveyorState::Escalator;

        int loc = 0;
        ScenarioConfig cfg =
            draw_scenario(kind, behavior_by_class[static_cast<size_t>(state_code(kind))], fields, options,
                          rng, seed, session_index, loc);
        SessionData session = gen_session(cfg);
        session.session_id = id_prefix + std::to_string(session_index);
        session.location_id = id_prefix + "loc" + std::to_string(loc);
        ++session_index;

        auto windows = window_labeled_session(session.samples, session.labels, options.window_seconds,
                                              options.stride_seconds, options.sample_rate,
                                              session.session_id, session.location_id);
        for (auto& lw : windows) {
            lw.vp_flag = auto_label_vp(lw.window);
            by_class[static_cast<size_t>(state_code(lw.label))].push_back(pool.records.size());
            pool.records.push_back(std::move(lw));
        }
        if (session_index > 100000) throw ConfigError("benchmark generation failed to reach targets");
    }

    // subsample to the exact mix
    std::vector<size_t> selected;
    for (int c = 0; c < 3; ++c) {
        if (mix[static_cast<size_t>(c)] <= 0) continue;
        auto& list = by_class[static_cast<size_t>(c)];
        auto target = static_cast<size_t>(std::llround(mix[static_cast<size_t>(c)] * target_windows));
        target = std::min(target, list.size());
        for (size_t i = list.size(); i > 1; --i)
            std::swap(list[i - 1], list[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
        selected.insert(selected.end(), list.begin(), list.begin() + static_cast<std::ptrdiff_t>(target));
    }
    std::sort(selected.begin(), selected.end());

    Dataset out;
    out.meta.generator_seed = seed;
    for (size_t idx : selected) out.records.push_back(std::move(pool.records[idx]));
    out.refresh_proportions();
    out.validate();
    return out;
}

BenchmarkData make_benchmark(const BenchmarkSpec& spec) {
    GenOptions options;

    // training fields (set A)
    std::vector<Eigen::Vector3d> train_fields = {
        {14.0, 6.0, 40.0}, {-20.0, 10.0, 38.0}, {25.0, -12.0, 30.0},
        {5.0, 18.0, 47.0}, {-12.0, -20.0, 35.0}, {30.0, 5.0, 25.0},
    };
    // unseen fields (set B): different directions, norms pushed to the band edges
    std::vector<Eigen::Vector3d> test_fields = {
        {-35.0, 25.0, 40.0}, {8.0, -3.0, 21.0}, {45.0, 30.0, 28.0}, {-5.0, 40.0, 50.0},
    };

    auto mix_of = [](std::initializer_list<std::pair<BehaviorKind, double>> ws) {
        BehaviorMix m;
        m.weights = {0, 0, 0, 0, 0, 0, 0};
        for (auto& [k, w] : ws) m.weights[static_cast<size_t>(k)] = w;
        return m;
    };

    // training: behavior kind correlates with the conveyor class
    std::array<BehaviorMix, 3> train_mixes{
        mix_of({{BehaviorKind::Still, 0.45},
                {BehaviorKind::Browsing, 0.35},
                {BehaviorKind::InPocket, 0.15},
                {BehaviorKind::Walking, 0.05}}),
        mix_of({{BehaviorKind::Browsing, 0.30},
                {BehaviorKind::Walking, 0.30},
                {BehaviorKind::InPocket, 0.25},
                {BehaviorKind::Swinging, 0.15}}),
        mix_of({{BehaviorKind::Walking, 0.50},
                {BehaviorKind::Still, 0.15},
                {BehaviorKind::Browsing, 0.20},
                {BehaviorKind::Swinging, 0.10},
                {BehaviorKind::InPocket, 0.05}}),
    };
    // test: correlation broken, Shaking and InBag unseen in training
    std::array<BehaviorMix, 3> test_mixes{
        mix_of({{BehaviorKind::Swinging, 0.30},
                {BehaviorKind::Shaking, 0.20},
                {BehaviorKind::InBag, 0.25},
                {BehaviorKind::Walking, 0.15},
                {BehaviorKind::Browsing, 0.10}}),
        mix_of({{BehaviorKind::Still, 0.25},
                {BehaviorKind::InBag, 0.25},
                {BehaviorKind::Shaking, 0.20},
                {BehaviorKind::Browsing, 0.20},
                {BehaviorKind::Walking, 0.10}}),
        mix_of({{BehaviorKind::Swinging, 0.25},
                {BehaviorKind::Shaking, 0.25},
                {BehaviorKind::InBag, 0.20},
                {BehaviorKind::Still, 0.15},
                {BehaviorKind::Walking, 0.15}}),
    };

    BenchmarkData data;
    Dataset train_pool = gen_mixture_dataset(spec.train_windows, spec.class_mix, train_mixes, train_fields,
                                             seed_split(spec.seed, 100), options, "tr");
    data.valid = split_sessions(train_pool, spec.valid_fraction, seed_split(spec.seed, 101), &data.train);
    data.test = gen_mixture_dataset(spec.test_windows, spec.class_mix, test_mixes, test_fields,
                                    seed_split(spec.seed, 102), options, "te");
    return data;
}

} // namespace eleson
