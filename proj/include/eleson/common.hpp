#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace eleson {

// Structured error categories; the CLI maps these to exit codes.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64; also the documented seed-splitting function for parallel
// session generation: substreams are seed_split(seed, 0), seed_split(seed, 1), ...
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t seed_split(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x8e9c5f3a9b1d42efull + stream * 0xd1342543de82ef95ull);
    splitmix64(s);
    return splitmix64(s);
}

// Self-contained RNG so generated data is bit-reproducible across compilers
// (std::normal_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // warm up so small seeds decorrelate
        splitmix64(state_);
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    int uniform_int(int n) {
        return static_cast<int>(uniform() * static_cast<double>(n)) % n;
    }

    // Box-Muller with cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace eleson
