#include "eleson/ins.hpp"

#include <algorithm>
#include <cmath>

namespace eleson {

void Dataset::refresh_proportions() {
    std::array<double, 3> counts{0, 0, 0};
    for (const auto& r : records) counts[static_cast<size_t>(state_code(r.label))] += 1.0;
    const double n = std::max<double>(1.0, static_cast<double>(records.size()));
    for (int c = 0; c < 3; ++c) meta.class_proportions[static_cast<size_t>(c)] = counts[static_cast<size_t>(c)] / n;
}

void Dataset::validate() const {
    if (records.empty()) return;
    const int t = records.front().window.length();
    const double rate = records.front().window.sample_rate;
    for (const auto& r : records) {
        if (r.window.length() != t) throw DataError("dataset records disagree on window length");
        if (r.window.sample_rate != rate) throw DataError("dataset records disagree on sample rate");
        if (r.window.samples.cols() != 9) throw DataError("window must have 9 channels");
        if (!r.window.samples.allFinite()) throw DataError("non-finite channel value in dataset");
        if (r.vp_flag < -1 || r.vp_flag > 1) throw DataError("vp flag out of range");
    }
}

namespace {

void check_uniform(const std::vector<InsSample>& session, double sample_rate) {
    const double period = 1.0 / sample_rate;
    const double tol = 1.5 * period;
    for (size_t i = 1; i < session.size(); ++i) {
        const double gap = session[i].t - session[i - 1].t;
        if (gap <= 0.0)
            throw DataError("session timestamps not strictly increasing at index " + std::to_string(i));
        if (gap > tol)
            throw DataError("sampling gap " + std::to_string(gap) + "s exceeds tolerance at index " +
                            std::to_string(i));
    }
}

struct WindowGrid {
    int t = 0;       // samples per window
    int s = 0;       // stride in samples
    int count = 0;   // number of windows
};

WindowGrid window_grid(size_t n, double window_seconds, double stride_seconds, double sample_rate) {
    WindowGrid g;
    g.t = static_cast<int>(std::lround(window_seconds * sample_rate));
    g.s = static_cast<int>(std::lround(stride_seconds * sample_rate));
    if (g.t <= 1) throw ConfigError("window must span more than one sample");
    if (g.s < 1) throw ConfigError("stride must be at least one sample");
    const long long nn = static_cast<long long>(n);
    g.count = nn >= g.t ? static_cast<int>((nn - g.t) / g.s + 1) : 0;
    return g;
}

InsWindow take_window(const std::vector<InsSample>& session, int start, int t, double rate) {
    InsWindow w;
    w.sample_rate = rate;
    w.samples.resize(t, 9);
    for (int i = 0; i < t; ++i) {
        const InsSample& s = session[static_cast<size_t>(start + i)];
        for (int k = 0; k < 3; ++k) {
            w.samples(i, k) = static_cast<float>(s.accel[k]);
            w.samples(i, 3 + k) = static_cast<float>(s.gyro[k]);
            w.samples(i, 6 + k) = static_cast<float>(s.mag[k]);
        }
    }
    if (!w.samples.allFinite()) throw DataError("non-finite sensor value in window");
    return w;
}

} // namespace

std::vector<InsWindow> window_session(const std::vector<InsSample>& session, double window_seconds,
                                      double stride_seconds, double sample_rate) {
    check_uniform(session, sample_rate);
    const WindowGrid g = window_grid(session.size(), window_seconds, stride_seconds, sample_rate);
    std::vector<InsWindow> out;
    out.reserve(static_cast<size_t>(g.count));
    for (int i = 0; i < g.count; ++i) out.push_back(take_window(session, i * g.s, g.t, sample_rate));
    return out;
}

std::vector<LabeledWindow> window_labeled_session(const std::vector<InsSample>& session,
                                                  const std::vector<ConveyorState>& labels,
                                                  double window_seconds, double stride_seconds,
                                                  double sample_rate, const std::string& session_id,
                                                  const std::string& location_id) {
    if (labels.size() != session.size()) throw DataError("label count does not match sample count");
    check_uniform(session, sample_rate);
    const WindowGrid g = window_grid(session.size(), window_seconds, stride_seconds, sample_rate);
    std::vector<LabeledWindow> out;
    out.reserve(static_cast<size_t>(g.count));
    for (int i = 0; i < g.count; ++i) {
        const int start = i * g.s;
        LabeledWindow lw;
        lw.window = take_window(session, start, g.t, sample_rate);
        int counts[3] = {0, 0, 0};
        for (int j = 0; j < g.t; ++j) counts[state_code(labels[static_cast<size_t>(start + j)])]++;
        // majority label; ties go to Neither
        int best = 2;
        for (int c = 0; c < 2; ++c)
            if (counts[c] > counts[best]) best = c;
        lw.label = state_from_code(best);
        lw.session_id = session_id;
        lw.location_id = location_id;
        out.push_back(std::move(lw));
    }
    return out;
}

std::pair<Eigen::MatrixXf, Eigen::MatrixXf> split_modalities(const InsWindow& w) {
    if (w.samples.cols() != 9) throw ShapeError("split_modalities: window must have 9 channels");
    return {w.samples.leftCols<6>(), w.samples.rightCols<3>()};
}

ChannelStats compute_channel_stats(const std::vector<const InsWindow*>& windows) {
    ChannelStats st;
    Eigen::Array<double, 9, 1> sum = Eigen::Array<double, 9, 1>::Zero();
    Eigen::Array<double, 9, 1> sumsq = Eigen::Array<double, 9, 1>::Zero();
    long long n = 0;
    for (const InsWindow* w : windows) {
        sum += w->samples.colwise().sum().transpose().array().cast<double>();
        sumsq += w->samples.array().square().colwise().sum().transpose().cast<double>();
        n += w->length();
    }
    if (n == 0) throw DataError("cannot compute channel statistics from empty data");
    const Eigen::Array<double, 9, 1> mean = sum / static_cast<double>(n);
    Eigen::Array<double, 9, 1> var = sumsq / static_cast<double>(n) - mean.square();
    var = var.max(0.0);
    st.mean = mean.cast<float>();
    st.stddev = var.sqrt().max(1e-6).cast<float>();
    return st;
}

ChannelStats compute_channel_stats(const Dataset& ds) {
    std::vector<const InsWindow*> ws;
    ws.reserve(ds.records.size());
    for (const auto& r : ds.records) ws.push_back(&r.window);
    return compute_channel_stats(ws);
}

InsWindow standardize(const InsWindow& w, const ChannelStats& stats) {
    InsWindow out = w;
    for (int c = 0; c < 9; ++c)
        out.samples.col(c) = (w.samples.col(c).array() - stats.mean[c]) / stats.stddev[c];
    return out;
}

InsWindow unstandardize(const InsWindow& w, const ChannelStats& stats) {
    InsWindow out = w;
    for (int c = 0; c < 9; ++c)
        out.samples.col(c) = w.samples.col(c).array() * stats.stddev[c] + stats.mean[c];
    return out;
}

double gyro_peak_magnitude(const InsWindow& w) {
    if (w.samples.cols() != 9) throw ShapeError("gyro_peak_magnitude: window must have 9 channels");
    double peak = 0.0;
    for (int i = 0; i < w.samples.rows(); ++i) {
        const double gx = w.samples(i, 3), gy = w.samples(i, 4), gz = w.samples(i, 5);
        peak = std::max(peak, std::sqrt(gx * gx + gy * gy + gz * gz));
    }
    return peak;
}

} // namespace eleson
