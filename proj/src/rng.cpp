#include "dmimo/rng.hpp"

#include <cmath>
#include <numbers>

namespace dmimo::rng {

double Substream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // u in (0,1] so the log is finite.
    const double u = 1.0 - uniform01();
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * std::numbers::pi * v;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

} // namespace dmimo::rng
