#pragma once

// Internal deterministic samplers. mt19937_64 plus explicit transforms keep
// the streams reproducible bit-for-bit across standard libraries, which
// std::normal_distribution does not guarantee.

#include <cmath>
#include <cstdint>
#include <random>

namespace rffkm::detail {

class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // Box-Muller; u1 in (0,1], u2 in [0,1).
        const double u1 = (static_cast<double>(eng_()) + 1.0) * 0x1.0p-64;
        const double u2 = static_cast<double>(eng_()) * 0x1.0p-64;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng()) * 0x1.0p-64;  // [0,1)
}

}  // namespace rffkm::detail
