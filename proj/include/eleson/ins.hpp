#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eleson/common.hpp"

namespace eleson {

// Canonical class codes, serialized in every file format.
enum class ConveyorState : int { Elevator = 0, Escalator = 1, Neither = 2 };

inline int state_code(ConveyorState s) { return static_cast<int>(s); }
inline ConveyorState state_from_code(int code) {
    if (code < 0 || code > 2) throw DataError("conveyor state code out of range: " + std::to_string(code));
    return static_cast<ConveyorState>(code);
}
inline const char* state_name(ConveyorState s) {
    switch (s) {
        case ConveyorState::Elevator: return "elevator";
        case ConveyorState::Escalator: return "escalator";
        default: return "neither";
    }
}

// One INS reading: acceleration (gravity-subtracted), angular velocity,
// magnetic field, all in the phone frame.
struct InsSample {
    double t = 0.0;                                   // seconds
    Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // m/s^2
    Eigen::Vector3d gyro = Eigen::Vector3d::Zero();   // rad/s
    Eigen::Vector3d mag = Eigen::Vector3d::Zero();    // microtesla
};

// Fixed-length 9-channel segment, the unit of classification.
// Column order: ax ay az gx gy gz mx my mz.
struct InsWindow {
    Eigen::MatrixXf samples;  // T x 9
    double sample_rate = 0.0;

    int length() const { return static_cast<int>(samples.rows()); }
};

struct LabeledWindow {
    InsWindow window;
    ConveyorState label = ConveyorState::Neither;
    int vp_flag = -1;  // -1 = absent, else 0/1
    std::string session_id;
    std::string location_id;
};

struct DatasetMeta {
    std::array<double, 3> class_proportions{0, 0, 0};
    std::uint64_t generator_seed = 0;
    int format_version = 1;
    std::string preprocessing;  // empty = raw signals
};

struct Dataset {
    std::vector<LabeledWindow> records;
    DatasetMeta meta;

    int window_len() const { return records.empty() ? 0 : records.front().window.length(); }
    double sample_rate() const { return records.empty() ? 0.0 : records.front().window.sample_rate; }

    // Recomputes meta.class_proportions from the records.
    void refresh_proportions();
    // Every record same T and rate, all values finite.
    void validate() const;
};

struct ChannelStats {
    Eigen::Array<float, 9, 1> mean = Eigen::Array<float, 9, 1>::Zero();
    Eigen::Array<float, 9, 1> stddev = Eigen::Array<float, 9, 1>::Ones();
};

// Slices a uniformly sampled session into fixed windows. Trailing remainder
// shorter than one window is dropped. A sampling gap exceeding 1.5 periods
// rejects the whole session (DataError).
std::vector<InsWindow> window_session(const std::vector<InsSample>& session,
                                      double window_seconds, double stride_seconds,
                                      double sample_rate);

// Same slicing with per-sample labels; the window label is the majority
// per-sample label, ties resolved to Neither.
std::vector<LabeledWindow> window_labeled_session(const std::vector<InsSample>& session,
                                                  const std::vector<ConveyorState>& labels,
                                                  double window_seconds, double stride_seconds,
                                                  double sample_rate,
                                                  const std::string& session_id,
                                                  const std::string& location_id);

// motion = accel|gyro columns (T x 6), magnetic = mag columns (T x 3).
std::pair<Eigen::MatrixXf, Eigen::MatrixXf> split_modalities(const InsWindow& w);

// Training-split channel statistics; stddev floored at 1e-6.
ChannelStats compute_channel_stats(const std::vector<const InsWindow*>& windows);
ChannelStats compute_channel_stats(const Dataset& ds);

InsWindow standardize(const InsWindow& w, const ChannelStats& stats);
InsWindow unstandardize(const InsWindow& w, const ChannelStats& stats);

// max over t of ||gyro_t||_2
double gyro_peak_magnitude(const InsWindow& w);

} // namespace eleson
