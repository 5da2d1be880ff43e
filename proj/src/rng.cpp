#include "blindsr/rng.hpp"

#include <cmath>
#include <numbers>

namespace blindsr {

std::uint64_t Rng::uniform_index(std::uint64_t bound)
{
    if (bound <= 1) {
        return 0;
    }
    // Reject the top partial bucket.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2  = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_           = rad * std::sin(ang);
    has_spare_       = true;
    return rad * std::cos(ang);
}

std::complex<double> Rng::complex_normal()
{
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

}  // namespace blindsr
