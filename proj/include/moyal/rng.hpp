#pragma once

#include <cstdint>
#include <utility>

namespace moyal {

// Counter-based random streams: every matrix entry (m, n) owns an
// independent stream keyed on (seed, m, n), and the k-th draw of a stream
// is a pure function of (key, k). Trajectories are therefore bitwise
// reproducible regardless of entry iteration order.

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t entry_key(std::uint64_t seed, int m, int n) {
    std::uint64_t packed = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m)) << 32)
                         | static_cast<std::uint64_t>(static_cast<std::uint32_t>(n));
    return mix64(seed ^ mix64(packed));
}

// Uniform in (0,1], never exactly 0 so it is safe under log().
inline double stream_u01(std::uint64_t key, std::uint64_t counter) {
    std::uint64_t r = mix64(key + 0xd1342543de82ef95ull * (counter + 1));
    return (static_cast<double>(r >> 11) + 1.0) * 0x1.0p-53;
}

// Box-Muller pair; draw `k` of stream `key` consumes uniforms (2k, 2k+1).
std::pair<double, double> stream_gauss_pair(std::uint64_t key, std::uint64_t k);

} // namespace moyal
