#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "moyal/gaussian.hpp"
#include "moyal/matrix.hpp"
#include "moyal/weights.hpp"

namespace moyal {

// N1 = v^3, N2 = z v^2, N3 = v z v, N4 = v^2 z, N5 = z v z,
// N6 = v :z^2:, N7 = :z^2: v. Individual terms need not be Hermitian;
// their sum plus :z^3: is.
std::array<CMatrix, 7> nonlinear_terms(const CMatrix& v, const CMatrix& z, const CMatrix& z2);

// -2 pi theta lambda (sum_i N_i(v) + :z^3:_adjacent). The linear -A v part
// belongs to the integrator, not to this forcing.
CMatrix remainder_rhs(const CMatrix& v, const CMatrix& z, const CMatrix& z2,
                      const CMatrix& z3_adj, const ModelParams& params);

// phi1(x) = (1 - e^{-x})/x, evaluated by series below 1e-4.
double phi1(double x);

// Exponential Euler step for d/dt c = -A c + rhs:
// c'_mn = e^{-A_mn dt} c_mn + dt phi1(A_mn dt) rhs_mn
CMatrix exp_euler_step(const CMatrix& v, const CMatrix& rhs, double dt, const WeightTable& w);

// One step of the auxiliary equation d/dt y = -A y - 2 pi theta lambda :z^3:.
CMatrix y_step(const CMatrix& y, const CMatrix& z3_adj, double dt,
               const ModelParams& params, const WeightTable& w);

// S2: terms with two w; S1: one w; S0: none.
struct STerms {
    CMatrix s2, s1, s0;
};
STerms s_terms(const CMatrix& w_mat, const CMatrix& y, const CMatrix& z, const CMatrix& z2);

// Both sides of the tested energy identity
// 1/2 d/dt ||w||_{H0}^2 + ||w||_{H1/2}^2 + 2 pi theta lambda ||w^2||_{H0}^2
//   = -2 pi theta lambda tr[(S2+S1+S0) w]
// evaluated discretely between consecutive states.
struct EnergyReport {
    double t = 0.0;
    double ddt_half_norm = 0.0;   // finite difference of 1/2 ||w||_{H0}^2
    double lhs_dissipation = 0.0; // ||w||_{H1/2}^2 + 2 pi theta lambda ||w^2||_{H0}^2
    double trace_term = 0.0;      // -2 pi theta lambda tr[(S2+S1+S0) w]
    double residual = 0.0;        // ddt + dissipation - trace_term
};

EnergyReport energy_report(const CMatrix& w_now, const CMatrix& w_next, double t_now,
                           double dt_fd, const CMatrix& y, const CMatrix& z,
                           const CMatrix& z2, const ModelParams& params, const WeightTable& w);

// Raw ingredients of the a priori bound, reported instead of a single
// scalar F since the exponent choices are left open.
struct AprioriIngredients {
    double s0_h_meps = 0.0;      // ||S0||_{H^-eps}
    double y_h0 = 0.0;           // ||y||_{H0}
    double z_m_half = 0.0;       // ||z||_{M^{1/2-eps'}}
    double z2_m_half = 0.0;      // ||:z^2:||_{M^{1/2-eps'}}
    double gamma_g = 0.0;        // ||Gamma||_{G^{beta-d', 1/2-k}} at beta=eps, d'=eps/2, k=1/4
    double n5_bound = 0.0;       // fourth-root quartic bound on ||z . z||
};
AprioriIngredients apriori_ingredients(const CMatrix& y, const HermitianField& z,
                                       const CMatrix& z2, const ModelParams& params,
                                       const WeightTable& w);

enum class IntegrationMode { v_mode, w_mode };

struct RunSettings {
    double t_final = 0.0;      // 0 -> 200 / A_00
    double burn_in = -1.0;     // < 0 -> 20 / A_00
    int snapshot_stride = 10;  // steps between emitted records
    IntegrationMode mode = IntegrationMode::v_mode;
    int ensemble_size = 1;
    bool with_energy = true;
    bool with_apriori = false;

    void resolve_defaults(const ModelParams& params);
};

struct TrajectoryState {
    double t = 0.0;
    OUState ou;
    WickBundle wick;
    CMatrix v, y, w;
    CMatrix phi() const { return ou.z.m + v; }
};

struct StepRecord {
    double t = 0.0;
    double v_h0 = 0.0;
    double v_hhalf_meps = 0.0; // ||v||_{H^{1/2 - eps}}
    double w_h0 = 0.0;
    double w_h0_sq = 0.0;
    double energy_residual = 0.0;
    double tr_phi2 = 0.0;
    double tr_phi4_wick = 0.0; // :tr(phi^4):
};

// Per-entry batch-means accumulator for time-averaged |phi_mn|^2.
struct TwoPointAccumulator {
    int n_batches = 32;
    long long n_total = 0;
    std::vector<Eigen::ArrayXXd> batch_sum;
    std::vector<long long> batch_count;

    void init(int cutoff, int batches, long long expected_samples);
    void add(const CMatrix& phi);
    Eigen::ArrayXXd mean() const;
    Eigen::ArrayXXd standard_error() const;

  private:
    long long expected_ = 0;
};

struct SimulationResult {
    std::vector<StepRecord> series;
    std::vector<EnergyReport> energy;
    std::vector<AprioriIngredients> apriori;
    TwoPointAccumulator two_point;
    bool aborted = false;
    std::string abort_reason;
    double final_time = 0.0;
    long long steps_taken = 0;
    CMatrix final_v, final_y, final_z;
};

using SnapshotSink = std::function<void(const TrajectoryState&)>;

// Advances (z, wick, y, v) on the uniform grid params.dt and aggregates
// records every snapshot_stride steps. phi = z + v is derived. NaN/Inf
// aborts with a diagnostic. The stiffness guard
//   dt_sub * 2 pi theta lambda (1 + ||v||_{H0}^2) * (2/A_00) < 0.5
// halves the substep until satisfied.
SimulationResult simulate(const ModelParams& params, const RunSettings& settings,
                          const SnapshotSink& sink = nullptr);

// Shared-path refinement runner for the energy-residual convergence study:
// z advances on the fine grid dt_z; (v, y) update every `v_every` z-steps.
// Returns mean |residual| over the run.
double mean_energy_residual(const ModelParams& params, double dt_z, int v_every, double t_final);

} // namespace moyal
