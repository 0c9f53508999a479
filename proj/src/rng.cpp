#include "moyal/rng.hpp"

#include <cmath>

namespace moyal {

std::pair<double, double> stream_gauss_pair(std::uint64_t key, std::uint64_t k) {
    double u1 = stream_u01(key, 2 * k);
    double u2 = stream_u01(key, 2 * k + 1);
    double r = std::sqrt(-2.0 * std::log(u1));
    double phi = 2.0 * M_PI * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

} // namespace moyal
