// Test-only Wick oracle: brute-force Gaussian moments of products of free
// field entries, straight from the covariance
//   E[z_ab z_cd] = delta_ad delta_bc / A_ab
// and the pairing expansion. Independent of the library's wick/diagram
// machinery, so it can sit on the other side of every cross-check.
#pragma once

#include <vector>

#include "moyal/weights.hpp"

namespace oracle {

struct Factor {
    int row, col; // symbol ids into the assignment vector
};

inline double pair_cov(const Factor& f, const Factor& g, const std::vector<int>& val,
                       const moyal::ModelParams& p) {
    int a = val[f.row], b = val[f.col], c = val[g.row], d = val[g.col];
    if (a != d || b != c) return 0.0;
    return 1.0 / p.weight(a, b);
}

inline double sum_pairings(const std::vector<Factor>& fs, std::vector<int>& used,
                           const std::vector<int>& val, const moyal::ModelParams& p) {
    int first = -1;
    for (std::size_t i = 0; i < fs.size(); ++i)
        if (!used[i]) {
            first = static_cast<int>(i);
            break;
        }
    if (first < 0) return 1.0;
    used[first] = 1;
    double total = 0.0;
    for (std::size_t j = first + 1; j < fs.size(); ++j) {
        if (used[j]) continue;
        double c = pair_cov(fs[first], fs[j], val, p);
        if (c != 0.0) {
            used[j] = 1;
            total += c * sum_pairings(fs, used, val, p);
            used[j] = 0;
        }
    }
    used[first] = 0;
    return total;
}

// E[prod_i z_{a_i b_i}] for one concrete index assignment.
inline double moment(const std::vector<Factor>& fs, const std::vector<int>& val,
                     const moyal::ModelParams& p) {
    if (fs.size() % 2 != 0) return 0.0;
    std::vector<int> used(fs.size(), 0);
    return sum_pairings(fs, used, val, p);
}

// E[sum over free symbols of prod_i z_{a_i b_i}]; values[s] = -1 marks
// symbol s as free (summed over 0..cutoff).
inline double summed_moment(const std::vector<Factor>& fs, std::vector<int> values, int cutoff,
                            const moyal::ModelParams& p) {
    int free_sym = -1;
    for (std::size_t s = 0; s < values.size(); ++s)
        if (values[s] < 0) {
            free_sym = static_cast<int>(s);
            break;
        }
    if (free_sym < 0) return moment(fs, values, p);
    double total = 0.0;
    for (int v = 0; v <= cutoff; ++v) {
        values[free_sym] = v;
        total += summed_moment(fs, values, cutoff, p);
    }
    return total;
}

} // namespace oracle
