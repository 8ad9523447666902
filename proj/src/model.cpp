#include "eleson/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "eleson/kv.hpp"

namespace eleson {

void TrainConfig::validate() const {
    if (w1 < 0 || w2 < 0 || w3 < 0 || w4 < 0) throw ConfigError("loss weights must be non-negative");
    if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 4) throw ConfigError("batch_size must be at least 4");
    if (tau < 0 || tau >= 1) throw ConfigError("tau must lie in [0, 1)");
    if (window_seconds <= 0 || stride_seconds <= 0 || sample_rate <= 0)
        throw ConfigError("window/stride/rate must be positive");
    if (feature_noise_std < 0) throw ConfigError("feature_noise_std must be non-negative");
    if (disable_causal_branch && disable_magnetic_branch)
        throw ConfigError("cannot disable both feature branches");
    dims.validate(window_len());
}

namespace {

double to_num(const std::string& v, const std::string& key) {
    try {
        return std::stod(v);
    } catch (...) {
        throw ConfigError("bad numeric value for " + key + ": " + v);
    }
}

bool to_flag(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("bad flag value for " + key + ": " + v);
}

} // namespace

TrainConfig parse_train_config(std::istream& is) {
    TrainConfig c;
    for (auto& [k, v] : read_kv(is)) {
        if (k == "w1") c.w1 = to_num(v, k);
        else if (k == "w2") c.w2 = to_num(v, k);
        else if (k == "w3") c.w3 = to_num(v, k);
        else if (k == "w4") c.w4 = to_num(v, k);
        else if (k == "learning_rate") c.learning_rate = to_num(v, k);
        else if (k == "epochs") c.epochs = static_cast<int>(to_num(v, k));
        else if (k == "batch_size") c.batch_size = static_cast<int>(to_num(v, k));
        else if (k == "seed") c.seed = static_cast<std::uint64_t>(std::stoull(v));
        else if (k == "window_seconds") c.window_seconds = to_num(v, k);
        else if (k == "stride_seconds") c.stride_seconds = to_num(v, k);
        else if (k == "sample_rate") c.sample_rate = to_num(v, k);
        else if (k == "tau") c.tau = to_num(v, k);
        else if (k == "disable_causal_loss") c.disable_causal_loss = to_flag(v, k);
        else if (k == "disable_magnetic_branch") c.disable_magnetic_branch = to_flag(v, k);
        else if (k == "disable_causal_branch") c.disable_causal_branch = to_flag(v, k);
        else if (k == "disable_variance_term") c.disable_variance_term = to_flag(v, k);
        else if (k == "feature_noise_std") c.feature_noise_std = to_num(v, k);
        else if (k == "early_stop_patience") c.early_stop_patience = static_cast<int>(to_num(v, k));
        else if (k == "magnetic_input") {
            if (v == "differential") c.magnetic_input = MagneticInputMode::Differential;
            else if (v == "raw_intensity") c.magnetic_input = MagneticInputMode::RawIntensity;
            else throw ConfigError("magnetic_input must be differential or raw_intensity");
        }
        else if (k == "feature_dim") c.dims.feature_dim = static_cast<int>(to_num(v, k));
        else if (k == "lstm_hidden") c.dims.lstm_hidden = static_cast<int>(to_num(v, k));
        else if (k == "fc_width") c.dims.fc_width = static_cast<int>(to_num(v, k));
        else if (k == "patch_len") c.dims.patch_len = static_cast<int>(to_num(v, k));
        else if (k == "pool") c.dims.pool = static_cast<int>(to_num(v, k));
        else if (k == "verbose") c.verbose = to_flag(v, k);
        else throw ConfigError("unknown config key: " + k);
    }
    c.validate();
    return c;
}

TrainConfig parse_train_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return parse_train_config(f);
}

// ---- bundle ----

void ModelBundle::init(const TrainConfig& cfg) {
    cfg.validate();
    config = cfg;
    window_len = cfg.window_len();
    Rng rng(seed_split(cfg.seed, 7));
    causal.init(cfg.dims, rng);
    generator.init(cfg.dims, window_len * 6, rng);
    aux.init(cfg.dims, rng);
    magnetic.init(cfg.dims, rng);
    adversary.init(cfg.dims, rng);
    evidence.init(cfg.dims, rng);
    stats = PreprocStats{};
}

std::vector<nn::Parameter<Real>*> ModelBundle::joint_parameters(bool trained_only) {
    std::vector<nn::Parameter<Real>*> out;
    const bool causal_branch = !config.disable_causal_branch || !trained_only;
    const bool causal_loss = (!config.disable_causal_loss && config.w4 > 0) || !trained_only;
    const bool magnetic_branch = !config.disable_magnetic_branch || !trained_only;
    if (causal_branch) causal.collect(out);
    if (causal_branch && causal_loss) {
        generator.collect(out);
        aux.collect(out);
    }
    if (magnetic_branch) magnetic.collect(out);
    evidence.collect(out);
    return out;
}

std::vector<nn::Parameter<Real>*> ModelBundle::adversary_parameters() {
    std::vector<nn::Parameter<Real>*> out;
    adversary.collect(out);
    return out;
}

std::vector<nn::Parameter<Real>*> ModelBundle::all_parameters() {
    std::vector<nn::Parameter<Real>*> out;
    causal.collect(out);
    generator.collect(out);
    aux.collect(out);
    magnetic.collect(out);
    adversary.collect(out);
    evidence.collect(out);
    return out;
}

Eigen::MatrixXf ModelBundle::pooled_motion_input(const InsWindow& raw) const {
    const InsWindow z = standardize(raw, stats.channels);
    auto [motion, magnetic_cols] = split_modalities(z);
    (void)magnetic_cols;
    return pool_rows(motion, config.dims.pool);
}

Eigen::MatrixXf ModelBundle::pooled_magnetic_input(const InsWindow& raw) const {
    auto [motion, magnetic_cols] = split_modalities(raw);
    (void)motion;
    Eigen::MatrixXf seq;
    if (config.magnetic_input == MagneticInputMode::Differential) {
        seq = differential_feature(magnetic_cols);
    } else {
        seq.resize(magnetic_cols.rows(), 1);
        for (Eigen::Index i = 0; i < magnetic_cols.rows(); ++i) seq(i, 0) = magnetic_cols.row(i).norm();
    }
    Eigen::MatrixXf pooled = pool_rows(seq, config.dims.pool);
    pooled.array() = (pooled.array() - stats.mag_input_mean) / stats.mag_input_std;
    return pooled;
}

FeatureBundle ModelBundle::extract_features(const InsWindow& raw) const {
    if (raw.length() != window_len)
        throw DataError("window length " + std::to_string(raw.length()) + " does not match model T=" +
                        std::to_string(window_len));
    FeatureBundle fb;
    const int fd = config.dims.feature_dim;
    fb.conveyor = Eigen::VectorXf::Zero(fd);
    fb.behavior = Eigen::VectorXf::Zero(fd);
    fb.magnetic = Eigen::VectorXf::Zero(fd);

    if (!config.disable_causal_branch) {
        RTape tape;
        RContext g(tape, false);
        RVar input = tape.push(pooled_motion_input(raw));
        auto feats = causal.forward(g, input);
        fb.conveyor = feats.conveyor.value().col(0);
        fb.behavior = feats.behavior.value().col(0);
    }
    if (!config.disable_magnetic_branch) {
        RTape tape;
        RContext g(tape, false);
        RVar input = tape.push(pooled_magnetic_input(raw));
        fb.magnetic = magnetic.forward(g, input).value().col(0);
    }
    return fb;
}

EvidenceVector ModelBundle::collect_evidence(const InsWindow& raw) const {
    const FeatureBundle fb = extract_features(raw);
    RTape tape;
    RContext g(tape, false);
    RMat z(2 * config.dims.feature_dim, 1);
    z << fb.conveyor, fb.magnetic;
    RVar ev = evidence.forward(g, tape.push(std::move(z)));
    EvidenceVector out;
    out.e = ev.value().col(0).cast<double>();
    return out;
}

Decision ModelBundle::classify(const InsWindow& raw, double tau) const {
    return decide(confidence(collect_evidence(raw)), tau);
}

// ---- serialization ----

namespace {

TensorRecord scalar_record(const std::string& name, double v) {
    TensorRecord r;
    r.name = name;
    r.dims = {1};
    r.data = {static_cast<float>(v)};
    return r;
}

TensorRecord seed_record(const std::string& name, std::uint64_t seed) {
    // four 16-bit chunks, each exactly representable as float
    TensorRecord r;
    r.name = name;
    r.dims = {4};
    for (int i = 0; i < 4; ++i)
        r.data.push_back(static_cast<float>((seed >> (16 * i)) & 0xffffull));
    return r;
}

std::uint64_t seed_from_record(const TensorRecord& r) {
    std::uint64_t s = 0;
    for (int i = 0; i < 4 && i < static_cast<int>(r.data.size()); ++i)
        s |= static_cast<std::uint64_t>(static_cast<std::uint32_t>(r.data[static_cast<size_t>(i)])) << (16 * i);
    return s;
}

TensorRecord param_record(const nn::Parameter<Real>& p) {
    TensorRecord r;
    r.name = p.name;
    r.dims = {static_cast<std::uint32_t>(p.value.rows()), static_cast<std::uint32_t>(p.value.cols())};
    r.data.resize(static_cast<size_t>(p.value.size()));
    std::memcpy(r.data.data(), p.value.data(), sizeof(float) * r.data.size());
    return r;
}

void config_records(const TrainConfig& c, std::vector<TensorRecord>& out) {
    out.push_back(scalar_record("config.w1", c.w1));
    out.push_back(scalar_record("config.w2", c.w2));
    out.push_back(scalar_record("config.w3", c.w3));
    out.push_back(scalar_record("config.w4", c.w4));
    out.push_back(scalar_record("config.learning_rate", c.learning_rate));
    out.push_back(scalar_record("config.epochs", c.epochs));
    out.push_back(scalar_record("config.batch_size", c.batch_size));
    out.push_back(seed_record("config.seed", c.seed));
    out.push_back(scalar_record("config.window_seconds", c.window_seconds));
    out.push_back(scalar_record("config.stride_seconds", c.stride_seconds));
    out.push_back(scalar_record("config.sample_rate", c.sample_rate));
    out.push_back(scalar_record("config.tau", c.tau));
    out.push_back(scalar_record("config.disable_causal_loss", c.disable_causal_loss ? 1 : 0));
    out.push_back(scalar_record("config.disable_magnetic_branch", c.disable_magnetic_branch ? 1 : 0));
    out.push_back(scalar_record("config.disable_causal_branch", c.disable_causal_branch ? 1 : 0));
    out.push_back(scalar_record("config.disable_variance_term", c.disable_variance_term ? 1 : 0));
    out.push_back(scalar_record("config.feature_noise_std", c.feature_noise_std));
    out.push_back(scalar_record("config.early_stop_patience", c.early_stop_patience));
    out.push_back(scalar_record("config.magnetic_input", static_cast<int>(c.magnetic_input)));
    out.push_back(scalar_record("dims.feature_dim", c.dims.feature_dim));
    out.push_back(scalar_record("dims.lstm_hidden", c.dims.lstm_hidden));
    out.push_back(scalar_record("dims.lstm_kernel", c.dims.lstm_kernel));
    out.push_back(scalar_record("dims.patch_len", c.dims.patch_len));
    out.push_back(scalar_record("dims.pool", c.dims.pool));
    out.push_back(scalar_record("dims.fc_width", c.dims.fc_width));
    out.push_back(scalar_record("dims.gen_hidden1", c.dims.gen_hidden1));
    out.push_back(scalar_record("dims.gen_hidden2", c.dims.gen_hidden2));
    out.push_back(scalar_record("dims.aux_hidden", c.dims.aux_hidden));
    out.push_back(scalar_record("dims.adv_hidden", c.dims.adv_hidden));
    out.push_back(scalar_record("dims.ev_hidden1", c.dims.ev_hidden1));
    out.push_back(scalar_record("dims.ev_hidden2", c.dims.ev_hidden2));
}

class RecordMap {
public:
    explicit RecordMap(const std::vector<TensorRecord>& records) {
        for (const auto& r : records) map_[r.name] = &r;
    }
    const TensorRecord& get(const std::string& name) const {
        auto it = map_.find(name);
        if (it == map_.end()) throw DataError("model file missing tensor: " + name);
        return *it->second;
    }
    double num(const std::string& name) const { return static_cast<double>(get(name).data.at(0)); }
    bool has(const std::string& name) const { return map_.count(name) > 0; }

private:
    std::map<std::string, const TensorRecord*> map_;
};

TrainConfig config_from_map(const RecordMap& m) {
    TrainConfig c;
    c.w1 = m.num("config.w1");
    c.w2 = m.num("config.w2");
    c.w3 = m.num("config.w3");
    c.w4 = m.num("config.w4");
    c.learning_rate = m.num("config.learning_rate");
    c.epochs = static_cast<int>(m.num("config.epochs"));
    c.batch_size = static_cast<int>(m.num("config.batch_size"));
    c.seed = seed_from_record(m.get("config.seed"));
    c.window_seconds = m.num("config.window_seconds");
    c.stride_seconds = m.num("config.stride_seconds");
    c.sample_rate = m.num("config.sample_rate");
    c.tau = m.num("config.tau");
    c.disable_causal_loss = m.num("config.disable_causal_loss") != 0;
    c.disable_magnetic_branch = m.num("config.disable_magnetic_branch") != 0;
    c.disable_causal_branch = m.num("config.disable_causal_branch") != 0;
    c.disable_variance_term = m.num("config.disable_variance_term") != 0;
    c.feature_noise_std = m.num("config.feature_noise_std");
    c.early_stop_patience = static_cast<int>(m.num("config.early_stop_patience"));
    c.magnetic_input = static_cast<MagneticInputMode>(static_cast<int>(m.num("config.magnetic_input")));
    c.dims.feature_dim = static_cast<int>(m.num("dims.feature_dim"));
    c.dims.lstm_hidden = static_cast<int>(m.num("dims.lstm_hidden"));
    c.dims.lstm_kernel = static_cast<int>(m.num("dims.lstm_kernel"));
    c.dims.patch_len = static_cast<int>(m.num("dims.patch_len"));
    c.dims.pool = static_cast<int>(m.num("dims.pool"));
    c.dims.fc_width = static_cast<int>(m.num("dims.fc_width"));
    c.dims.gen_hidden1 = static_cast<int>(m.num("dims.gen_hidden1"));
    c.dims.gen_hidden2 = static_cast<int>(m.num("dims.gen_hidden2"));
    c.dims.aux_hidden = static_cast<int>(m.num("dims.aux_hidden"));
    c.dims.adv_hidden = static_cast<int>(m.num("dims.adv_hidden"));
    c.dims.ev_hidden1 = static_cast<int>(m.num("dims.ev_hidden1"));
    c.dims.ev_hidden2 = static_cast<int>(m.num("dims.ev_hidden2"));
    return c;
}

void stats_records(const PreprocStats& s, std::vector<TensorRecord>& out) {
    TensorRecord mean, std_;
    mean.name = "preproc.channel_mean";
    mean.dims = {9};
    std_.name = "preproc.channel_std";
    std_.dims = {9};
    for (int c = 0; c < 9; ++c) {
        mean.data.push_back(s.channels.mean[c]);
        std_.data.push_back(s.channels.stddev[c]);
    }
    out.push_back(std::move(mean));
    out.push_back(std::move(std_));
    out.push_back(scalar_record("preproc.mag_input_mean", s.mag_input_mean));
    out.push_back(scalar_record("preproc.mag_input_std", s.mag_input_std));
}

PreprocStats stats_from_map(const RecordMap& m) {
    PreprocStats s;
    const auto& mean = m.get("preproc.channel_mean");
    const auto& std_ = m.get("preproc.channel_std");
    for (int c = 0; c < 9; ++c) {
        s.channels.mean[c] = mean.data.at(static_cast<size_t>(c));
        s.channels.stddev[c] = std_.data.at(static_cast<size_t>(c));
    }
    s.mag_input_mean = static_cast<float>(m.num("preproc.mag_input_mean"));
    s.mag_input_std = static_cast<float>(m.num("preproc.mag_input_std"));
    return s;
}

void load_params(const RecordMap& m, const std::vector<nn::Parameter<Real>*>& params) {
    for (auto* p : params) {
        const TensorRecord& r = m.get(p->name);
        if (r.dims.size() != 2 || static_cast<Eigen::Index>(r.dims[0]) != p->value.rows() ||
            static_cast<Eigen::Index>(r.dims[1]) != p->value.cols())
            throw DataError("tensor shape mismatch for " + p->name);
        std::memcpy(p->value.data(), r.data.data(), sizeof(float) * r.data.size());
    }
}

} // namespace

std::vector<TensorRecord> bundle_to_records(const ModelBundle& bundle) {
    std::vector<TensorRecord> out;
    out.push_back(scalar_record("bundle.kind", 0));
    out.push_back(scalar_record("meta.window_len", bundle.window_len));
    config_records(bundle.config, out);
    stats_records(bundle.stats, out);
    for (const auto* p : const_cast<ModelBundle&>(bundle).all_parameters()) out.push_back(param_record(*p));
    return out;
}

ModelBundle bundle_from_records(const std::vector<TensorRecord>& records) {
    RecordMap m(records);
    if (static_cast<int>(m.num("bundle.kind")) != 0) throw DataError("not a full pipeline bundle");
    ModelBundle b;
    b.init(config_from_map(m));
    b.stats = stats_from_map(m);
    b.window_len = static_cast<int>(m.num("meta.window_len"));
    load_params(m, b.all_parameters());
    return b;
}

void save_bundle(const std::string& path, const ModelBundle& bundle) {
    write_elsn_file(path, bundle_to_records(bundle));
}

ModelBundle load_bundle(const std::string& path) { return bundle_from_records(read_elsn_file(path)); }

// ---- baseline ----

void BaselineModel::init(const TrainConfig& cfg) {
    cfg.validate();
    config = cfg;
    window_len = cfg.window_len();
    Rng rng(seed_split(cfg.seed, 8));
    backbone.init("base", 9, cfg.dims.lstm_hidden, cfg.dims.lstm_kernel, cfg.dims.patch_len,
                  cfg.dims.fc_width, 2 * cfg.dims.feature_dim, rng);
    head.init("base.head", 2 * cfg.dims.feature_dim, 3, rng);
    temperature = 1.0;
}

std::vector<nn::Parameter<Real>*> BaselineModel::parameters() {
    std::vector<nn::Parameter<Real>*> out;
    backbone.collect(out);
    head.collect(out);
    return out;
}

Eigen::MatrixXf BaselineModel::pooled_input(const InsWindow& raw) const {
    return pool_rows(standardize(raw, stats.channels).samples, config.dims.pool);
}

Eigen::Vector3f BaselineModel::logits(const InsWindow& raw) const {
    if (raw.length() != window_len) throw DataError("window length does not match baseline model");
    RTape tape;
    RContext g(tape, false);
    auto& self = const_cast<BaselineModel&>(*this);
    RVar out = self.head.forward(g, ad::relu(self.backbone.forward(g, tape.push(pooled_input(raw)))));
    return out.value().col(0);
}

std::vector<TensorRecord> baseline_to_records(const BaselineModel& model) {
    std::vector<TensorRecord> out;
    out.push_back(scalar_record("bundle.kind", 1));
    out.push_back(scalar_record("meta.window_len", model.window_len));
    out.push_back(scalar_record("meta.temperature", model.temperature));
    config_records(model.config, out);
    stats_records(model.stats, out);
    for (const auto* p : const_cast<BaselineModel&>(model).parameters()) out.push_back(param_record(*p));
    return out;
}

BaselineModel baseline_from_records(const std::vector<TensorRecord>& records) {
    RecordMap m(records);
    if (static_cast<int>(m.num("bundle.kind")) != 1) throw DataError("not a baseline bundle");
    BaselineModel b;
    b.init(config_from_map(m));
    b.stats = stats_from_map(m);
    b.window_len = static_cast<int>(m.num("meta.window_len"));
    b.temperature = m.num("meta.temperature");
    load_params(m, b.parameters());
    return b;
}

Eigen::Vector3d softmax3(const Eigen::Vector3f& logits, double temperature) {
    Eigen::Vector3d l = logits.cast<double>() / temperature;
    const double m = l.maxCoeff();
    Eigen::Vector3d e = (l.array() - m).exp();
    return e / e.sum();
}

double entropy3(const Eigen::Vector3d& p) {
    double h = 0;
    for (int i = 0; i < 3; ++i)
        if (p[i] > 0) h -= p[i] * std::log(p[i]);
    return h;
}

} // namespace eleson
