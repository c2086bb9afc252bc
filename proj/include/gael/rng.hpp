#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace gael {

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is pinned by the standard; the uniform/normal transforms are
// implemented here rather than with std::*_distribution because the library
// distributions are implementation-defined and would break bit-for-bit
// reproducibility across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Standard normal via Box-Muller. Draws two uniforms per call and keeps
    // no cached state, so the stream position is always just the engine state.
    double normal() {
        double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    std::string state() const {
        std::ostringstream oss;
        oss << engine_;
        return oss.str();
    }

    void set_state(const std::string& s) {
        std::istringstream iss(s);
        iss >> engine_;
        if (iss.fail()) throw std::invalid_argument("Rng::set_state: malformed state string");
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 engine_;
};

}  // namespace gael
