#ifndef DTPINN_COMMON_HPP
#define DTPINN_COMMON_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtpinn {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Raised when a stencil's saddle-point system is numerically rank-deficient.
class SingularSystem : public Error {
public:
    SingularSystem(const std::string& msg, long center, double cond)
        : Error(msg), center_index(center), condition_estimate(cond) {}
    long center_index = -1;
    double condition_estimate = 0.0;
};

class LineSearchFailure : public Error {
public:
    explicit LineSearchFailure(const std::string& msg) : Error(msg) {}
};

// Deterministic uniform RNG. mt19937_64 output is pinned by the standard;
// the mapping to [0,1) is done explicitly so draws are bit-identical across
// platforms (std::uniform_real_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }

private:
    std::mt19937_64 engine_;
};

class Timer {
public:
    Timer() : start_(clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }
    void reset() { start_ = clock::now(); }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
};

inline double relative_l2(const std::vector<double>& approx,
                          const std::vector<double>& exact) {
    if (approx.size() != exact.size())
        throw InvalidArgument("relative_l2: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        const double d = approx[i] - exact[i];
        num += d * d;
        den += exact[i] * exact[i];
    }
    if (den == 0.0) throw InvalidArgument("relative_l2: zero-norm reference");
    return std::sqrt(num / den);
}

}  // namespace dtpinn

#endif
