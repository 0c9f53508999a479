#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "moyal/gaussian.hpp"
#include "moyal/weights.hpp"

namespace moyal {
namespace diagrams {

// The eight factors of the N5 fourth moment, in the fixed order
//   E[z_{m k} z_{k mb} z_{mb kb} z_{kb m} z_{n lb} z_{lb nb} z_{nb l} z_{l n}]
// over the index symbols {m, k, mb, kb, n, l, nb, lb} (0..7 below).
// Factor f carries the ordered pair (row(f), col(f)).
inline constexpr int kNumFactors = 8;
inline constexpr int kNumIndices = 8;
enum Index : int { IM = 0, IK = 1, IMB = 2, IKB = 3, IN = 4, IL = 5, INB = 6, ILB = 7 };
extern const std::array<std::pair<int, int>, kNumFactors> kFactorIndices;

// A perfect matching on factor labels 1..8, stored as an involution:
// partner[i] = j when factors i and j are contracted (0-based).
struct Pairing {
    std::array<int, kNumFactors> partner{};

    bool operator==(const Pairing&) const = default;
    // "(12)(34)(56)(78)" notation with 1-based labels.
    std::string to_string() const;
};

// All 105 = 7!! perfect matchings, in deterministic order (smallest free
// label pairs first).
std::vector<Pairing> enumerate_pairings();

// Edge weight as an integer combination w = k1 + ka * alpha + kb * beta;
// black contractions contribute k1 += 1, the two alpha decorations
// ka += 2 on (k,l), (kb,lb), the beta decorations kb -= 2 on (m,n),
// (mb,nb). Kept symbolic so classification is exact.
struct SymWeight {
    int k1 = 0, ka = 0, kb = 0;
    bool operator==(const SymWeight&) const = default;
    auto operator<=>(const SymWeight&) const = default;
    double value(double alpha, double beta) const { return k1 + ka * alpha + kb * beta; }
};

// Weighted multigraph over merged index classes. Parallel edges are merged
// by summing weights; u == v entries are self-loops (factors 1/A_uu^w).
struct DiagramGraph {
    int n_vertices = 0;
    // vertex id of each of the eight original index symbols
    std::array<int, kNumIndices> vertex_of{};
    // upper-triangular adjacency, (u,v) with u <= v
    std::vector<std::tuple<int, int, SymWeight>> edges;

    std::string to_string() const;
};

DiagramGraph pairing_to_graph(const Pairing& p);

// Group the 105 graphs by weighted-graph isomorphism (canonical labeling
// by brute force over vertex permutations). This yields 32 classes: the
// hand catalogue below lists 34 groups, of which two pairs are genuinely
// isomorphic (their weighted graphs coincide edge for edge) and merge
// here.
struct DiagramClass {
    int id = 0; // 1-based, ordered by first member in enumeration order
    std::vector<int> members; // indices into enumerate_pairings() order
    DiagramGraph representative;
    std::vector<int> catalogue_ids; // 1-based ids of the hand-catalogue groups
};
std::vector<DiagramClass> classify(const std::vector<Pairing>& pairings);

// The catalogued hand grouping of the 105 contractions into 34 entries,
// as pairing notation strings. Groups 3/18 and 13/29 are isomorphic pairs
// that classify() merges.
const std::vector<std::vector<std::string>>& reference_groupings();

// One reduction move. `rule_case` is the inequality case (1)-(8) actually
// used, or 0 for an edge drop (bounding 1/A^w <= 1, sound since A >= 1).
struct ReductionStep {
    int rule = 0;      // 1..5, or 0 for a drop
    int rule_case = 0; // 1..8, or 0 for a drop
    int vertex = -1;   // eliminated vertex (rules), or -1
    int eu = -1, ev = -1; // edge endpoints for drops / rule-5 context
    double produced_weight = 0.0;
    std::string note;
};

enum class ReductionOutcome { finite, stuck };

struct ReductionTrace {
    ReductionOutcome outcome = ReductionOutcome::stuck;
    std::vector<ReductionStep> steps;
    std::string stuck_reason;
    // exponent of the last rule-(8) self-loop, per resolved component
    std::vector<double> final_exponents;

    bool finite() const { return outcome == ReductionOutcome::finite; }
    std::string to_string() const;
};

// Mechanically applies rules 1-5 with numeric exponents, deterministic
// strategy (rule 1 on degree-2 vertices first, then rule 4, rules 2/3,
// rule 5; ties by smallest vertex id). When the greedy pass sticks, a
// bounded backtracking search over rule choices and edge drops (depth <= 8)
// runs before reporting stuck. Hypotheses are checked with a 1e-9 margin.
ReductionTrace reduce(const DiagramGraph& g, double alpha, double beta, double delta);

// Truncated value of one contraction: sum over the merged free indices
// (each 0..n_sum) of the product of 1/A_uv^w factors. Evaluated by
// variable elimination, so n_sum up to a few hundred is cheap.
double contraction_sum_numeric(const Pairing& p, double alpha, double beta,
                               const ModelParams& params, int n_sum);

// The quartic form whose fourth root bounds ||N5|| = ||z . z||:
// Q(z) = sum_{k,l,kb,lb} (A_kl A_kb,lb)^{-2 alpha}
//        |sum_{m,n} A_mn^{2 beta} z_mk z_ln z_n,lb z_kb,m|^2
double n5_quartic_form(const HermitianField& z, double alpha, double beta, const WeightTable& w);

// bound(z) = Q(z)^{1/4}; deterministically dominates
// ||z v z||_{H^beta} / ||v||_{H^alpha} for every test matrix v.
double n5_operator_bound(const HermitianField& z, double alpha, double beta, const WeightTable& w);

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
    int n_samples = 0;
};

// Monte Carlo estimate of E[Q(z)] from independent stationary samples.
McEstimate n5_moment_mc(const ModelParams& params, double alpha, double beta, int n_samples);

// Exact Gaussian moment E[Q(z)] at cutoff N: the sum of the 105
// contraction values truncated at n_sum = N.
double contraction_sum_total(double alpha, double beta, const ModelParams& params, int n_sum);

} // namespace diagrams
} // namespace moyal
