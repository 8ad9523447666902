#include "eleson/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace eleson {

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Eigen::MatrixXf mag_input_sequence(const InsWindow& raw, MagneticInputMode mode) {
    auto [motion, magnetic_cols] = split_modalities(raw);
    (void)motion;
    if (mode == MagneticInputMode::Differential) return differential_feature(magnetic_cols);
    Eigen::MatrixXf seq(magnetic_cols.rows(), 1);
    for (Eigen::Index i = 0; i < magnetic_cols.rows(); ++i) seq(i, 0) = magnetic_cols.row(i).norm();
    return seq;
}

void check_dataset_matches(const TrainConfig& config, const Dataset& ds, const char* which) {
    if (ds.records.empty()) throw DataError(std::string(which) + " dataset is empty");
    ds.validate();
    if (ds.window_len() != config.window_len())
        throw DataError(std::string(which) + " dataset window length " + std::to_string(ds.window_len()) +
                        " does not match configured T=" + std::to_string(config.window_len()));
    if (std::abs(ds.sample_rate() - config.sample_rate) > 1e-9)
        throw DataError(std::string(which) + " dataset sample rate does not match config");
}

std::set<std::string> session_ids(const Dataset& ds) {
    std::set<std::string> out;
    for (const auto& r : ds.records) out.insert(r.session_id);
    return out;
}

// Stratified class-balanced batches (near-equal per-class quotas). Balance
// matters: with the summed evidential CE, a class in the batch minority
// receives net negative evidence pressure and its output units die. Equal
// quotas also keep the variance-consistency term defined for every label.
std::vector<std::vector<size_t>> plan_batches(const std::vector<PreparedItem>& items, int batch_size,
                                              Rng& rng) {
    std::array<std::vector<size_t>, 3> by_class;
    for (size_t i = 0; i < items.size(); ++i)
        by_class[static_cast<size_t>(items[i].label)].push_back(i);
    int present = 0;
    for (const auto& list : by_class) present += list.empty() ? 0 : 1;

    std::array<size_t, 3> quota{0, 0, 0};
    long long n_batches = -1;
    for (int c = 0; c < 3; ++c) {
        auto& list = by_class[static_cast<size_t>(c)];
        if (list.empty()) continue;
        for (size_t i = list.size(); i > 1; --i)
            std::swap(list[i - 1], list[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
        size_t q = static_cast<size_t>(batch_size / std::max(1, present));
        q = std::max<size_t>(q, list.size() >= 2 ? 2 : 1);
        q = std::min(q, list.size());
        quota[static_cast<size_t>(c)] = q;
        const long long cap = static_cast<long long>(list.size() / q);
        if (n_batches < 0 || cap < n_batches) n_batches = cap;
    }
    if (n_batches <= 0) n_batches = 1;

    std::vector<std::vector<size_t>> batches;
    for (long long b = 0; b < n_batches; ++b) {
        std::vector<size_t> batch;
        for (int c = 0; c < 3; ++c) {
            const size_t q = quota[static_cast<size_t>(c)];
            const auto& list = by_class[static_cast<size_t>(c)];
            for (size_t k = 0; k < q; ++k) batch.push_back(list[static_cast<size_t>(b) * q + k]);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

struct Snapshot {
    std::vector<RMat> values;
    void capture(const std::vector<nn::Parameter<Real>*>& params) {
        values.clear();
        for (auto* p : params) values.push_back(p->value);
    }
    void restore(const std::vector<nn::Parameter<Real>*>& params) const {
        for (size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
    }
};

} // namespace

PreprocStats compute_preproc_stats(const TrainConfig& config, const Dataset& train_set) {
    PreprocStats stats;
    stats.channels = compute_channel_stats(train_set);
    double sum = 0, sumsq = 0;
    long long n = 0;
    for (const auto& r : train_set.records) {
        Eigen::MatrixXf pooled = pool_rows(mag_input_sequence(r.window, config.magnetic_input),
                                           config.dims.pool);
        sum += pooled.cast<double>().sum();
        sumsq += pooled.cast<double>().array().square().sum();
        n += pooled.size();
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sumsq / static_cast<double>(n) - mean * mean);
    stats.mag_input_mean = static_cast<float>(mean);
    stats.mag_input_std = static_cast<float>(std::max(std::sqrt(var), 1e-6));
    return stats;
}

std::vector<PreparedItem> prepare_items(const TrainConfig& config, const PreprocStats& stats,
                                        const Dataset& dataset) {
    std::vector<PreparedItem> items;
    items.reserve(dataset.records.size());
    for (size_t i = 0; i < dataset.records.size(); ++i) {
        const auto& rec = dataset.records[i];
        PreparedItem it;
        const InsWindow z = standardize(rec.window, stats.channels);
        auto [motion, magnetic_cols] = split_modalities(z);
        (void)magnetic_cols;
        it.pooled_motion = pool_rows(motion, config.dims.pool);
        Eigen::MatrixXf pooled_mag =
            pool_rows(mag_input_sequence(rec.window, config.magnetic_input), config.dims.pool);
        pooled_mag.array() = (pooled_mag.array() - stats.mag_input_mean) / stats.mag_input_std;
        it.pooled_mag = pooled_mag;
        it.motion_flat = Eigen::Map<const Eigen::MatrixXf>(motion.data(), motion.size(), 1);
        it.label = state_code(rec.label);
        it.vp = rec.vp_flag;
        it.record = i;
        items.push_back(std::move(it));
    }
    return items;
}

TrainOutcome train(const TrainConfig& config, const Dataset& train_set, const Dataset& valid_set) {
    config.validate();
    check_dataset_matches(config, train_set, "train");
    check_dataset_matches(config, valid_set, "valid");

    // session-disjoint splits prevent leakage
    const auto train_ids = session_ids(train_set);
    for (const auto& id : session_ids(valid_set))
        if (train_ids.count(id))
            throw DataError("session " + id + " appears in both train and valid splits");

    std::array<long long, 3> class_counts{0, 0, 0};
    for (const auto& r : train_set.records) class_counts[static_cast<size_t>(state_code(r.label))]++;
    for (int c = 0; c < 3; ++c)
        if (class_counts[static_cast<size_t>(c)] == 0)
            throw DataError(std::string("training split has no windows of class ") +
                            state_name(state_from_code(c)));

    TrainOutcome outcome;
    ModelBundle& bundle = outcome.bundle;
    bundle.init(config);
    bundle.stats = compute_preproc_stats(config, train_set);

    const std::vector<PreparedItem> items = prepare_items(config, bundle.stats, train_set);

    const bool causal_branch = !config.disable_causal_branch;
    const bool magnetic_branch = !config.disable_magnetic_branch;
    const bool causal_loss_active = causal_branch && !config.disable_causal_loss && config.w4 > 0;
    const bool magnetic_loss = magnetic_branch && config.w3 > 0;

    auto joint_params = bundle.joint_parameters(true);
    nn::Adam<Real> joint_opt;
    joint_opt.lr = static_cast<Real>(config.learning_rate);
    joint_opt.init(joint_params);

    auto adv_params = bundle.adversary_parameters();
    nn::Adam<Real> adv_opt;
    adv_opt.lr = static_cast<Real>(config.learning_rate);
    adv_opt.init(adv_params);

    const int fd = config.dims.feature_dim;
    Snapshot best;
    auto all_params = bundle.all_parameters();
    best.capture(all_params);
    double best_f1 = -1;
    int since_best = 0;
    long long step_counter = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng epoch_rng(seed_split(config.seed, 0x500 + static_cast<std::uint64_t>(epoch)));
        const auto batches = plan_batches(items, config.batch_size, epoch_rng);
        double epoch_loss = 0;

        for (const auto& batch : batches) {
            Rng noise_rng(seed_split(config.seed, 0x9000 + static_cast<std::uint64_t>(step_counter)));
            RTape tape;
            RContext g(tape, true);

            std::vector<RVar> evidential_terms, similarity_terms, reconstruction_terms, adversary_terms;
            std::array<std::vector<RVar>, 3> conveyor_by_label;
            std::vector<std::pair<RMat, int>> detached_magnetic;  // adversary step input

            for (size_t idx : batch) {
                const PreparedItem& it = items[idx];
                const auto label = state_from_code(it.label);

                RVar zc{&tape, -1}, zb{&tape, -1};
                if (causal_branch) {
                    RVar input = tape.push(it.pooled_motion);
                    auto feats = bundle.causal.forward(g, input);
                    zc = feats.conveyor;
                    conveyor_by_label[static_cast<size_t>(it.label)].push_back(zc);
                    if (causal_loss_active) {
                        if (config.w1 > 0) {
                            RVar target = tape.push(it.motion_flat);
                            reconstruction_terms.push_back(
                                reconstruction_term(g, bundle.generator, feats.conveyor, feats.behavior,
                                                    target, static_cast<Real>(config.feature_noise_std),
                                                    noise_rng));
                        }
                        similarity_terms.push_back(
                            similarity_term(g, bundle.aux, feats.conveyor, feats.behavior, label));
                    }
                } else {
                    zc = tape.push(RMat::Zero(fd, 1));
                }

                if (magnetic_branch) {
                    RVar input = tape.push(it.pooled_mag);
                    zb = bundle.magnetic.forward(g, input);
                    const bool conveyor_window = label != ConveyorState::Neither;
                    if (conveyor_window && (it.vp == 0 || it.vp == 1)) {
                        detached_magnetic.emplace_back(zb.value(), it.vp);
                        if (magnetic_loss) {
                            g.set_frozen(true);
                            adversary_terms.push_back(adversary_ce_term(g, bundle.adversary, zb, it.vp));
                            g.set_frozen(false);
                        }
                    }
                } else {
                    zb = tape.push(RMat::Zero(fd, 1));
                }

                RVar z = ad::concat_rows<Real>({zc, zb});
                RVar evid = bundle.evidence.forward(g, z);
                evidential_terms.push_back(evidential_term(g, evid, label, !config.disable_variance_term));
            }

            RVar total = ad::scalar<Real>(tape, 0);
            for (auto& term : evidential_terms) total = ad::add(total, term);
            if (magnetic_loss && !adversary_terms.empty()) {
                RVar adv_sum = ad::scalar<Real>(tape, 0);
                for (auto& term : adversary_terms) adv_sum = ad::add(adv_sum, term);
                total = ad::add(total, ad::scale(adv_sum, static_cast<Real>(-config.w3)));
            }
            if (causal_loss_active) {
                RVar sim = ad::scalar<Real>(tape, 0);
                for (auto& term : similarity_terms) sim = ad::add(sim, term);
                RVar rec = ad::scalar<Real>(tape, 0);
                for (auto& term : reconstruction_terms) rec = ad::add(rec, term);
                RVar con = config.w2 > 0 ? consistency_term(g, conveyor_by_label)
                                         : ad::scalar<Real>(tape, 0);
                RVar cal = causal_loss(sim, rec, con, static_cast<Real>(config.w1),
                                       static_cast<Real>(config.w2));
                total = ad::add(total, ad::scale(cal, static_cast<Real>(config.w4)));
            }

            epoch_loss += static_cast<double>(total.value()(0, 0));
            tape.backward_from(total);
            g.harvest();
            joint_opt.update(joint_params);

            // adversary catches up against the pre-update magnetic features
            if (magnetic_branch) {
                int n0 = 0, n1 = 0;
                for (const auto& [zb_val, vp] : detached_magnetic) (vp == 0 ? n0 : n1)++;
                if (n0 > 0 && n1 > 0) {
                    RTape adv_tape;
                    RContext ag(adv_tape, true);
                    RVar adv_total = ad::scalar<Real>(adv_tape, 0);
                    for (const auto& [zb_val, vp] : detached_magnetic) {
                        RVar zb_const = adv_tape.push(zb_val);
                        adv_total = ad::add(adv_total, adversary_ce_term(ag, bundle.adversary, zb_const, vp));
                    }
                    adv_tape.backward_from(adv_total);
                    ag.harvest();
                    adv_opt.update(adv_params);
                }
            }
            ++step_counter;
        }

        outcome.epoch_train_loss.push_back(epoch_loss);
        const double valid_f1 = evaluate(bundle, valid_set, 0.0).mean_f1;
        outcome.epoch_valid_f1.push_back(valid_f1);
        if (config.verbose)
            std::cerr << "epoch " << epoch << ": train_loss=" << epoch_loss << " valid_f1=" << valid_f1
                      << "\n";

        if (valid_f1 > best_f1 + 1e-9) {
            best_f1 = valid_f1;
            best.capture(all_params);
            outcome.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.early_stop_patience) {
            break;
        }
    }
    best.restore(all_params);
    return outcome;
}

MetricsReport evaluate(const ModelBundle& bundle, const Dataset& dataset, double tau) {
    check_dataset_matches(bundle.config, dataset, "eval");
    std::vector<WindowOutcome> outcomes;
    std::vector<double> latencies;
    outcomes.reserve(dataset.records.size());
    for (const auto& rec : dataset.records) {
        const double t0 = now_ms();
        const Decision d = bundle.classify(rec.window, tau);
        latencies.push_back(now_ms() - t0);
        WindowOutcome o;
        o.truth = rec.label;
        o.argmax = d.state;
        o.decided = d.decided;
        o.score = d.confidence;
        outcomes.push_back(o);
    }
    MetricsReport r = compute_metrics(outcomes);
    r.latency_p50_ms = percentile(latencies, 0.5);
    r.latency_p95_ms = percentile(latencies, 0.95);
    return r;
}

std::vector<Decision> classify_dataset(const ModelBundle& bundle, const Dataset& dataset, double tau) {
    check_dataset_matches(bundle.config, dataset, "eval");
    std::vector<Decision> out;
    out.reserve(dataset.records.size());
    for (const auto& rec : dataset.records) out.push_back(bundle.classify(rec.window, tau));
    return out;
}

std::vector<StreamDecision> infer_stream(const ModelBundle& bundle, SampleSource& source, double tau) {
    const double rate = bundle.config.sample_rate;
    const double gap_tol = 1.5 / rate;
    const int t_len = bundle.window_len;
    const int stride = static_cast<int>(std::lround(bundle.config.stride_seconds * rate));

    std::vector<StreamDecision> out;
    std::vector<InsSample> buffer;
    int window_index = 0;
    double prev_t = 0;
    bool have_prev = false;

    auto emit_gap = [&] {
        StreamDecision sd;
        sd.window_index = window_index++;
        sd.decision.decided = false;
        sd.decision.gap = true;
        sd.decision.conf = ConfidenceVector{};
        out.push_back(sd);
    };

    while (auto s = source.next()) {
        if (have_prev && s->t - prev_t > gap_tol) {
            // source dropped samples: the in-flight window cannot complete
            if (!buffer.empty()) emit_gap();
            buffer.clear();
        }
        prev_t = s->t;
        have_prev = true;
        buffer.push_back(*s);

        if (static_cast<int>(buffer.size()) == t_len) {
            InsWindow w;
            w.sample_rate = rate;
            w.samples.resize(t_len, 9);
            for (int i = 0; i < t_len; ++i) {
                const InsSample& smp = buffer[static_cast<size_t>(i)];
                for (int k = 0; k < 3; ++k) {
                    w.samples(i, k) = static_cast<float>(smp.accel[k]);
                    w.samples(i, 3 + k) = static_cast<float>(smp.gyro[k]);
                    w.samples(i, 6 + k) = static_cast<float>(smp.mag[k]);
                }
            }
            StreamDecision sd;
            sd.window_index = window_index++;
            const double t0 = now_ms();
            sd.decision = bundle.classify(w, tau);
            sd.wall_ms = now_ms() - t0;
            out.push_back(sd);
            buffer.erase(buffer.begin(), buffer.begin() + std::min<std::ptrdiff_t>(stride, t_len));
        }
    }
    return out;
}

// ---- baseline ----

TrainOutcome train_baseline_outcome(const TrainConfig& config, const Dataset& train_set,
                                    const Dataset& valid_set, BaselineModel& model) {
    config.validate();
    check_dataset_matches(config, train_set, "train");
    check_dataset_matches(config, valid_set, "valid");

    model.init(config);
    model.stats = compute_preproc_stats(config, train_set);

    // baseline consumes the standardized 9-channel window directly
    std::vector<Eigen::MatrixXf> inputs;
    std::vector<int> labels;
    inputs.reserve(train_set.records.size());
    for (const auto& rec : train_set.records) {
        inputs.push_back(pool_rows(standardize(rec.window, model.stats.channels).samples, config.dims.pool));
        labels.push_back(state_code(rec.label));
    }
    std::vector<PreparedItem> pseudo(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i) pseudo[i].label = labels[i];

    auto params = model.parameters();
    nn::Adam<Real> opt;
    opt.lr = static_cast<Real>(config.learning_rate);
    opt.init(params);

    TrainOutcome outcome;
    Snapshot best;
    best.capture(params);
    double best_f1 = -1;
    int since_best = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng epoch_rng(seed_split(config.seed, 0x600 + static_cast<std::uint64_t>(epoch)));
        const auto batches = plan_batches(pseudo, config.batch_size, epoch_rng);
        double epoch_loss = 0;
        for (const auto& batch : batches) {
            RTape tape;
            RContext g(tape, true);
            RVar total = ad::scalar<Real>(tape, 0);
            for (size_t idx : batch) {
                RVar logits = model.head.forward(
                    g, ad::relu(model.backbone.forward(g, tape.push(inputs[idx]))));
                total = ad::add(total, ad::softmax_cross_entropy(logits, labels[idx]));
            }
            epoch_loss += static_cast<double>(total.value()(0, 0));
            tape.backward_from(total);
            g.harvest();
            opt.update(params);
        }
        outcome.epoch_train_loss.push_back(epoch_loss);
        const double valid_f1 = evaluate_baseline(model, valid_set).mean_f1;
        outcome.epoch_valid_f1.push_back(valid_f1);
        if (config.verbose)
            std::cerr << "baseline epoch " << epoch << ": train_loss=" << epoch_loss
                      << " valid_f1=" << valid_f1 << "\n";
        if (valid_f1 > best_f1 + 1e-9) {
            best_f1 = valid_f1;
            best.capture(params);
            outcome.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.early_stop_patience) {
            break;
        }
    }
    best.restore(params);
    model.temperature = temperature_scale(model, valid_set);
    return outcome;
}

BaselineModel train_baseline(const TrainConfig& config, const Dataset& train_set, const Dataset& valid_set) {
    BaselineModel model;
    train_baseline_outcome(config, train_set, valid_set, model);
    return model;
}

MetricsReport evaluate_baseline(const BaselineModel& model, const Dataset& dataset) {
    check_dataset_matches(model.config, dataset, "eval");
    std::vector<WindowOutcome> outcomes;
    std::vector<double> latencies;
    for (const auto& rec : dataset.records) {
        const double t0 = now_ms();
        const Eigen::Vector3f logits = model.logits(rec.window);
        latencies.push_back(now_ms() - t0);
        const Eigen::Vector3d p = softmax3(logits, model.temperature);
        int best = 0;
        for (int s = 1; s < 3; ++s)
            if (p[s] > p[best]) best = s;
        WindowOutcome o;
        o.truth = rec.label;
        o.argmax = state_from_code(best);
        o.decided = true;
        o.score = -entropy3(p);  // high entropy = low confidence
        outcomes.push_back(o);
    }
    MetricsReport r = compute_metrics(outcomes);
    r.latency_p50_ms = percentile(latencies, 0.5);
    r.latency_p95_ms = percentile(latencies, 0.95);
    return r;
}

double temperature_from_logits(const std::vector<Eigen::Vector3f>& logits, const std::vector<int>& labels) {
    if (logits.size() != labels.size() || logits.empty())
        throw DataError("temperature calibration needs matching non-empty logits and labels");
    auto nll = [&](double temp) {
        double total = 0;
        for (size_t i = 0; i < logits.size(); ++i) {
            const Eigen::Vector3d p = softmax3(logits[i], temp);
            total -= std::log(std::max(p[labels[i]], 1e-300));
        }
        return total;
    };
    // golden-section search on [0.05, 20]
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.05, b = 20.0;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = nll(c), fd = nll(d);
    for (int it = 0; it < 80; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = nll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = nll(d);
        }
    }
    return 0.5 * (a + b);
}

double temperature_scale(const BaselineModel& model, const Dataset& valid_set) {
    std::vector<Eigen::Vector3f> logits;
    std::vector<int> labels;
    for (const auto& rec : valid_set.records) {
        logits.push_back(model.logits(rec.window));
        labels.push_back(state_code(rec.label));
    }
    return temperature_from_logits(logits, labels);
}

BenchReport bench(const ModelBundle& bundle, int n_windows) {
    BenchReport r;
    const auto records = bundle_to_records(bundle);
    r.serialized_bytes = elsn_byte_size(records);
    for (const auto* p : const_cast<ModelBundle&>(bundle).all_parameters()) r.parameter_count += p->size();

    Rng rng(1234);
    std::vector<double> latencies;
    for (int i = 0; i < n_windows; ++i) {
        InsWindow w;
        w.sample_rate = bundle.config.sample_rate;
        w.samples.resize(bundle.window_len, 9);
        for (int row = 0; row < bundle.window_len; ++row)
            for (int c = 0; c < 9; ++c) w.samples(row, c) = static_cast<float>(rng.normal(0, 1));
        const double t0 = now_ms();
        (void)bundle.classify(w, 0.5);
        latencies.push_back(now_ms() - t0);
    }
    r.latency_p50_ms = percentile(latencies, 0.5);
    r.latency_p95_ms = percentile(latencies, 0.95);
    return r;
}

Dataset split_sessions(const Dataset& source, double fraction, std::uint64_t seed, Dataset* remainder) {
    if (fraction < 0 || fraction > 1) throw ConfigError("split fraction must lie in [0, 1]");
    // group record indices by session, classify each session by its conveyor label
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < source.records.size(); ++i)
        groups[source.records[i].session_id].push_back(i);

    std::array<std::vector<const std::vector<size_t>*>, 3> by_class;
    for (const auto& [id, idxs] : groups) {
        ConveyorState cls = ConveyorState::Neither;
        for (size_t i : idxs)
            if (source.records[i].label != ConveyorState::Neither) {
                cls = source.records[i].label;
                break;
            }
        by_class[static_cast<size_t>(state_code(cls))].push_back(&idxs);
    }

    Rng rng(seed_split(seed, 0x77));
    std::vector<size_t> take_idx, rest_idx;
    for (auto& sessions : by_class) {
        for (size_t i = sessions.size(); i > 1; --i)
            std::swap(sessions[i - 1], sessions[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
        const size_t n_take = static_cast<size_t>(std::lround(fraction * static_cast<double>(sessions.size())));
        for (size_t s = 0; s < sessions.size(); ++s) {
            auto& dst = s < n_take ? take_idx : rest_idx;
            dst.insert(dst.end(), sessions[s]->begin(), sessions[s]->end());
        }
    }
    std::sort(take_idx.begin(), take_idx.end());
    std::sort(rest_idx.begin(), rest_idx.end());

    Dataset taken;
    taken.meta = source.meta;
    for (size_t i : take_idx) taken.records.push_back(source.records[i]);
    taken.refresh_proportions();
    if (remainder) {
        remainder->records.clear();
        remainder->meta = source.meta;
        for (size_t i : rest_idx) remainder->records.push_back(source.records[i]);
        remainder->refresh_proportions();
    }
    return taken;
}

std::vector<MetricsReport> cross_validate(const TrainConfig& config, const Dataset& dataset, int folds) {
    if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    // assign sessions to folds round-robin within each class
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < dataset.records.size(); ++i)
        groups[dataset.records[i].session_id].push_back(i);

    std::array<std::vector<const std::vector<size_t>*>, 3> by_class;
    for (const auto& [id, idxs] : groups) {
        ConveyorState cls = ConveyorState::Neither;
        for (size_t i : idxs)
            if (dataset.records[i].label != ConveyorState::Neither) {
                cls = dataset.records[i].label;
                break;
            }
        by_class[static_cast<size_t>(state_code(cls))].push_back(&idxs);
    }
    Rng rng(seed_split(config.seed, 0x88));
    std::vector<std::vector<size_t>> fold_indices(static_cast<size_t>(folds));
    for (auto& sessions : by_class) {
        for (size_t i = sessions.size(); i > 1; --i)
            std::swap(sessions[i - 1], sessions[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
        for (size_t s = 0; s < sessions.size(); ++s) {
            auto& dst = fold_indices[s % static_cast<size_t>(folds)];
            dst.insert(dst.end(), sessions[s]->begin(), sessions[s]->end());
        }
    }

    std::vector<MetricsReport> reports;
    for (int f = 0; f < folds; ++f) {
        Dataset test, rest;
        test.meta = dataset.meta;
        rest.meta = dataset.meta;
        std::vector<char> in_test(dataset.records.size(), 0);
        for (size_t i : fold_indices[static_cast<size_t>(f)]) in_test[i] = 1;
        for (size_t i = 0; i < dataset.records.size(); ++i)
            (in_test[i] ? test : rest).records.push_back(dataset.records[i]);
        test.refresh_proportions();
        rest.refresh_proportions();

        Dataset valid, train_part;
        valid = split_sessions(rest, 0.15, config.seed + static_cast<std::uint64_t>(f), &train_part);
        TrainOutcome out = train(config, train_part, valid);
        reports.push_back(evaluate(out.bundle, test, config.tau));
    }
    return reports;
}

} // namespace eleson
