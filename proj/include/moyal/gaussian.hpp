#pragma once

#include <cstdint>

#include "moyal/matrix.hpp"
#include "moyal/spectral.hpp"
#include "moyal/weights.hpp"

namespace moyal {

// Stationary analytic covariance of the free field:
// E[z_mn(t) z_kl(s)] = delta_{ml} delta_{nk} e^{-|t-s| A_mn} / A_mn.
double covariance(int m, int n, int k, int l, double dt, const WeightTable& w);

// Snapshot of the matrix Ornstein-Uhlenbeck free field. `step` indexes the
// counter-based noise streams; advancing produces a new immutable state.
struct OUState {
    double t = 0.0;
    HermitianField z;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
};

// Draw z(0) from the stationary law: diagonal entries real N(0, 1/A_mm),
// off-diagonal complex with independent re/im of variance 1/(2 A_mn),
// lower triangle by conjugation.
OUState sample_stationary(const ModelParams& params, const WeightTable& w);

// Exact OU transition over dt > 0:
// z_mn <- e^{-A_mn dt} z_mn + sqrt(1 - e^{-2 A_mn dt}) xi_mn
// with xi a fresh stationary-marginal draw. Stationarity is preserved for
// any dt. dt == 0 returns the state unchanged; dt < 0 throws.
OUState advance(const OUState& state, double dt, const WeightTable& w);

enum class WickConvention {
    adjacent, // subtract the two adjacent contractions only (used in the dynamics)
    full      // additionally subtract the outer contraction
};

// (:z^2:)_mn = sum_k z_mk z_kn - delta_mn sum_k 1/A_mk
HermitianField wick2(const HermitianField& z, const WeightTable& w);

// adjacent: (z^3)_mn - z_mn sum_k 1/A_mk - z_mn sum_k 1/A_nk
// full:     additionally - delta_mn sum_k z_kk / A_mk
HermitianField wick3(const HermitianField& z, const WeightTable& w, WickConvention convention);

// Gamma^n_{l,l'} = sum_{m<=N} (z_{l'm} z_{ml} - delta_{l'l}/A_{l'm}) / A_mn^{2 beta}
GammaTensor gamma_tensor(const HermitianField& z, double beta, const WeightTable& w);

// Wick powers of the current z, shared by the dynamics and observables.
struct WickBundle {
    HermitianField z2;
    HermitianField z3_adj;
    HermitianField z3_full;
    std::vector<double> tail1; // sum_k 1/A_mk per row m

    static WickBundle from(const HermitianField& z, const WeightTable& w, bool with_z3 = true);
};

} // namespace moyal
