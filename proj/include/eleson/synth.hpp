#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eleson/ins.hpp"

namespace eleson {

// ----- generative description of a session -----

// Transport pattern of one conveyor ride. accel_peak is signed (negative =
// descending ride). A Neither profile has every conveyor field at zero.
struct ConveyorProfile {
    ConveyorState kind = ConveyorState::Neither;
    double accel_peak = 0.0;          // m/s^2 during the ramp phases
    double ramp_seconds = 0.0;        // speed-up / slow-down duration
    double cruise_seconds = 0.0;      // constant-speed phase
    double incline_deg = 0.0;         // escalator only
    double mag_distortion_amp = 0.0;  // microtesla
    double mag_period_seconds = 0.0;  // escalator step ripple period

    double ride_seconds() const {
        return kind == ConveyorState::Neither ? 0.0 : 2.0 * ramp_seconds + cruise_seconds;
    }

    static ConveyorProfile neither() { return ConveyorProfile{}; }
    static ConveyorProfile elevator_default();
    static ConveyorProfile escalator_default();

    void validate() const;
};

enum class BehaviorKind : int {
    Still = 0,
    Browsing = 1,
    Swinging = 2,
    InPocket = 3,
    InBag = 4,
    Shaking = 5,
    Walking = 6,
};
constexpr int kBehaviorKindCount = 7;
const char* behavior_kind_name(BehaviorKind k);
BehaviorKind behavior_kind_from_name(const std::string& name);

// Nuisance process perturbing the phone: periodic motion plus smooth noise
// with occasional bursts, an orientation random walk driven by the gyro
// trajectory, and a rotation-coupled magnetic disturbance.
struct BehaviorProcess {
    BehaviorKind kind = BehaviorKind::Still;
    double accel_amp = 0.0;    // m/s^2
    double gyro_amp = 0.0;     // rad/s
    double freq_hz = 0.3;      // dominant periodic component
    double burst_prob = 0.0;   // burst events per second
    double mag_coupling = 0.0; // microtesla per rad/s of rotation

    static BehaviorProcess defaults(BehaviorKind k);
    void validate(double sample_rate) const;
};

struct MagneticEnvironment {
    Eigen::Vector3d background_field = Eigen::Vector3d(18.0, -4.0, 42.0);  // microtesla, world frame
    double spatial_gradient_amp = 1.0;  // microtesla per second of travel

    void validate() const;  // |background_field| must sit in the Earth-field band [20, 70]
};

struct ScenarioConfig {
    ConveyorProfile profile;
    BehaviorProcess behavior;
    MagneticEnvironment environment;
    double duration_seconds = 12.0;
    std::uint64_t seed_behavior = 1;
    std::uint64_t seed_unobserved = 2;
    double sample_rate = 100.0;
    double noise_scale = 1.0;  // scales all sensor noise; 0 = noiseless

    void validate() const;
};

struct SessionData {
    std::vector<InsSample> samples;
    std::vector<ConveyorState> labels;  // per-sample ground truth
    std::string session_id;
    std::string location_id;
};

// ----- generation -----

// Deterministic given (cfg, seeds). The behavior stream depends only on
// seed_behavior, sensor noise and the location drift only on seed_unobserved.
SessionData gen_session(const ScenarioConfig& cfg);

// [start, end) of the conveyor ride in seconds; (0, 0) for Neither profiles.
std::pair<double, double> ride_interval(const ScenarioConfig& cfg);

// Experimental session plus its matched control: same behavior and noise
// seeds, conveyor replaced by Neither. The motion-channel difference is the
// pure transport pattern.
std::pair<SessionData, SessionData> gen_interventional_pair(const ScenarioConfig& cfg);

struct BehaviorMix {
    std::array<double, kBehaviorKindCount> weights{1, 0, 0, 0, 0, 0, 0};

    double& operator[](BehaviorKind k) { return weights[static_cast<size_t>(k)]; }
    static BehaviorMix uniform_everyday();
};

struct GenOptions {
    double window_seconds = 2.0;
    double stride_seconds = 2.0;
    double sample_rate = 100.0;
    int locations = 8;
    double noise_scale = 1.0;
    // per-kind behavior processes; defaults from BehaviorProcess::defaults
    std::array<BehaviorProcess, kBehaviorKindCount> behaviors;
    // optional explicit background fields; one per location, overrides random ones
    std::vector<Eigen::Vector3d> background_fields;

    GenOptions();
};

// Generates sessions, windows them, and subsamples the window pool to match
// the requested class proportions (within one window). Sessions are seeded
// via seed_split so generation order never affects content.
Dataset gen_dataset(int n_sessions, const std::array<double, 3>& mix, const BehaviorMix& behavior_mix,
                    std::uint64_t seed, const GenOptions& options = GenOptions());

// ----- scenario files -----

ScenarioConfig parse_scenario(std::istream& is);
ScenarioConfig parse_scenario_file(const std::string& path);

} // namespace eleson
