#include "moyal/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "moyal/diagrams.hpp"
#include "moyal/observables.hpp"

namespace moyal {

std::array<CMatrix, 7> nonlinear_terms(const CMatrix& v, const CMatrix& z, const CMatrix& z2) {
    CMatrix v2 = v * v;
    CMatrix zv = z * v;
    return {
        v2 * v,   // N1 = v^3
        z * v2,   // N2
        v * zv,   // N3 = v z v
        v2 * z,   // N4
        zv * z,   // N5 = z v z
        v * z2,   // N6
        z2 * v,   // N7
    };
}

CMatrix remainder_rhs(const CMatrix& v, const CMatrix& z, const CMatrix& z2,
                      const CMatrix& z3_adj, const ModelParams& params) {
    const double c = 2.0 * M_PI * params.theta * params.lambda;
    if (c == 0.0) return CMatrix::Zero(v.rows(), v.cols());
    auto terms = nonlinear_terms(v, z, z2);
    CMatrix sum = z3_adj;
    for (const auto& t : terms) sum += t;
    return -c * sum;
}

double phi1(double x) {
    if (std::abs(x) < 1e-4) return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
    return (1.0 - std::exp(-x)) / x;
}

CMatrix exp_euler_step(const CMatrix& v, const CMatrix& rhs, double dt, const WeightTable& w) {
    if (!(dt > 0.0)) throw std::invalid_argument("exp_euler_step: dt must be > 0");
    CMatrix out(v.rows(), v.cols());
    for (Eigen::Index m = 0; m < v.rows(); ++m)
        for (Eigen::Index n = 0; n < v.cols(); ++n) {
            double x = w(static_cast<int>(m), static_cast<int>(n)) * dt;
            out(m, n) = std::exp(-x) * v(m, n) + dt * phi1(x) * rhs(m, n);
        }
    return out;
}

CMatrix y_step(const CMatrix& y, const CMatrix& z3_adj, double dt, const ModelParams& params,
               const WeightTable& w) {
    const double c = 2.0 * M_PI * params.theta * params.lambda;
    return exp_euler_step(y, (-c * z3_adj).eval(), dt, w);
}

STerms s_terms(const CMatrix& wm, const CMatrix& y, const CMatrix& z, const CMatrix& z2) {
    STerms s;
    CMatrix w2 = wm * wm;
    CMatrix y2 = y * y;
    CMatrix wz = wm * z, zw = z * wm;
    CMatrix wy = wm * y, yw = y * wm;
    s.s2 = w2 * z + wz * wm + zw * wm + w2 * y + wy * wm + yw * wm;

    CMatrix mixed = z2 + y2 + y * z + z * y;
    s.s1 = wm * mixed + mixed * wm + zw * z + yw * y + zw * y + yw * z;

    s.s0 = y2 * y + y2 * z + y * (z * y) + z * y2 + y * z2 + z * (y * z) + z2 * y;
    return s;
}

EnergyReport energy_report(const CMatrix& w_now, const CMatrix& w_next, double t_now, double dt_fd,
                           const CMatrix& y, const CMatrix& z, const CMatrix& z2,
                           const ModelParams& params, const WeightTable& w) {
    const double c = 2.0 * M_PI * params.theta * params.lambda;
    EnergyReport rep;
    rep.t = t_now;
    double h0_now = h_norm(w_now, 0.0, w);
    double h0_next = h_norm(w_next, 0.0, w);
    rep.ddt_half_norm = 0.5 * (h0_next * h0_next - h0_now * h0_now) / dt_fd;
    double hhalf = h_norm(w_now, 0.5, w);
    CMatrix wsq = w_now * w_now;
    rep.lhs_dissipation = hhalf * hhalf + c * wsq.squaredNorm();
    auto s = s_terms(w_now, y, z, z2);
    rep.trace_term = -c * trace_pair((s.s2 + s.s1 + s.s0).eval(), w_now).real();
    rep.residual = rep.ddt_half_norm + rep.lhs_dissipation - rep.trace_term;
    return rep;
}

AprioriIngredients apriori_ingredients(const CMatrix& y, const HermitianField& z,
                                       const CMatrix& z2, const ModelParams& params,
                                       const WeightTable& w) {
    AprioriIngredients out;
    CMatrix zero = CMatrix::Zero(y.rows(), y.cols());
    auto s = s_terms(zero, y, z.m, z2);
    out.s0_h_meps = h_norm(s.s0, -params.eps, w);
    out.y_h0 = h_norm(y, 0.0, w);
    out.z_m_half = m_norm(z.m, 0.5 - params.eps_prime, w);
    out.z2_m_half = m_norm(z2, 0.5 - params.eps_prime, w);
    double beta = params.eps;
    GammaTensor g = gamma_tensor(z, beta, w);
    out.gamma_g = g_norm(g, beta / 2.0, 0.25, w);
    out.n5_bound = diagrams::n5_operator_bound(z, 0.5 - params.eps,
                                               -params.eps - params.eps_prime, w);
    return out;
}

void RunSettings::resolve_defaults(const ModelParams& params) {
    double a00 = params.a00();
    if (t_final <= 0.0) t_final = 200.0 / a00;
    if (burn_in < 0.0) burn_in = 20.0 / a00;
    if (snapshot_stride < 1) snapshot_stride = 1;
    if (ensemble_size < 1) ensemble_size = 1;
}

void TwoPointAccumulator::init(int cutoff, int batches, long long expected_samples) {
    n_batches = std::max(1, batches);
    if (expected_samples > 0 && expected_samples < n_batches)
        n_batches = static_cast<int>(expected_samples);
    n_total = 0;
    batch_sum.assign(n_batches, Eigen::ArrayXXd::Zero(cutoff + 1, cutoff + 1));
    batch_count.assign(n_batches, 0);
    expected_ = expected_samples;
}

void TwoPointAccumulator::add(const CMatrix& phi) {
    // round-robin over batches keeps batch sizes equal without knowing the
    // exact sample count ahead of time; with contiguous blocks preferred,
    // use expected_ to map sequentially.
    int b;
    if (expected_ > 0) {
        long long per = (expected_ + n_batches - 1) / n_batches;
        b = static_cast<int>(std::min<long long>(n_total / per, n_batches - 1));
    } else {
        b = static_cast<int>(n_total % n_batches);
    }
    batch_sum[b] += phi.array().abs2();
    batch_count[b] += 1;
    n_total += 1;
}

Eigen::ArrayXXd TwoPointAccumulator::mean() const {
    Eigen::ArrayXXd total = Eigen::ArrayXXd::Zero(batch_sum[0].rows(), batch_sum[0].cols());
    for (const auto& b : batch_sum) total += b;
    return total / static_cast<double>(std::max<long long>(n_total, 1));
}

Eigen::ArrayXXd TwoPointAccumulator::standard_error() const {
    Eigen::ArrayXXd grand = mean();
    Eigen::ArrayXXd var = Eigen::ArrayXXd::Zero(grand.rows(), grand.cols());
    int used = 0;
    for (std::size_t b = 0; b < batch_sum.size(); ++b) {
        if (batch_count[b] == 0) continue;
        Eigen::ArrayXXd bm = batch_sum[b] / static_cast<double>(batch_count[b]);
        var += (bm - grand).square();
        ++used;
    }
    if (used < 2) return Eigen::ArrayXXd::Zero(grand.rows(), grand.cols());
    var /= static_cast<double>(used - 1);
    return (var / static_cast<double>(used)).sqrt();
}

namespace {

// dt * 2 pi theta lambda (1 + ||v||^2) K < 1/2 with K = 2/A_00, the
// numerical analogue of the data-dependent local time.
bool step_guard_ok(double dt, double v_h0, const ModelParams& params) {
    double k = 2.0 / params.a00();
    return dt * 2.0 * M_PI * params.theta * params.lambda * (1.0 + v_h0 * v_h0) * k < 0.5;
}

} // namespace

SimulationResult simulate(const ModelParams& params_in, const RunSettings& settings_in,
                          const SnapshotSink& sink) {
    ModelParams params = params_in;
    params.require_valid();
    params.resolve_defaults();
    RunSettings settings = settings_in;
    settings.resolve_defaults(params);

    WeightTable w(params);
    const int n_cut = params.cutoff;
    const bool interacting = params.lambda > 0.0;
    const double dt = params.dt;
    const long long n_steps = static_cast<long long>(std::ceil(settings.t_final / dt));

    SimulationResult result;
    long long expected_post = 0;
    for (long long k = 1; k <= n_steps; ++k)
        if (k * dt >= settings.burn_in) ++expected_post;
    result.two_point.init(n_cut, 32, expected_post);

    OUState ou = sample_stationary(params, w);
    CMatrix v = CMatrix::Zero(n_cut + 1, n_cut + 1);
    CMatrix y = CMatrix::Zero(n_cut + 1, n_cut + 1);
    WickBundle wick = WickBundle::from(ou.z, w, interacting);

    CMatrix w_prev; // w at the previous grid point, for the energy difference
    double residual_latest = 0.0;

    auto record = [&](double t, const CMatrix& vv, const CMatrix& yy) {
        StepRecord rec;
        rec.t = t;
        rec.v_h0 = h_norm(vv, 0.0, w);
        rec.v_hhalf_meps = h_norm(vv, 0.5 - params.eps, w);
        CMatrix wm = vv - yy;
        rec.w_h0 = h_norm(wm, 0.0, w);
        rec.w_h0_sq = rec.w_h0 * rec.w_h0;
        rec.energy_residual = residual_latest;
        CMatrix phi = ou.z.m + vv;
        rec.tr_phi2 = trace_pair(phi, phi).real();
        rec.tr_phi4_wick = renormalized_trace_phi4(HermitianField(phi), w);
        result.series.push_back(rec);
        if (sink) {
            TrajectoryState ts;
            ts.t = t;
            ts.ou = ou;
            ts.wick = wick;
            ts.v = vv;
            ts.y = yy;
            ts.w = wm;
            sink(ts);
        }
    };

    record(0.0, v, y);

    for (long long k = 0; k < n_steps; ++k) {
        double t = k * dt;

        // nonlinear substep control
        int n_sub = 1;
        double v_h0 = interacting ? h_norm(v, 0.0, w) : 0.0;
        while (interacting && !step_guard_ok(dt / n_sub, v_h0, params)) {
            n_sub *= 2;
            if (n_sub > (1 << 20)) {
                result.aborted = true;
                result.abort_reason = "step guard: dt too large for lambda and current ||v||";
                return result;
            }
        }
        double h = dt / n_sub;

        const bool energy_due = settings.with_energy && interacting &&
                                (k + 1) % settings.snapshot_stride == 0;
        CMatrix w_now, z_left, z2_left, y_left;
        if (energy_due) {
            w_now = v - y;
            z_left = ou.z.m;
            z2_left = wick.z2.m;
            y_left = y;
        }
        for (int s = 0; s < n_sub; ++s) {
            if (interacting) {
                if (settings.mode == IntegrationMode::v_mode) {
                    CMatrix rhs = remainder_rhs(v, ou.z.m, wick.z2.m, wick.z3_adj.m, params);
                    v = exp_euler_step(v, rhs, h, w);
                    y = y_step(y, wick.z3_adj.m, h, params, w);
                } else {
                    // w-mode: step w with the expanded forcing, derive v
                    const double c = 2.0 * M_PI * params.theta * params.lambda;
                    CMatrix wm = v - y;
                    auto st = s_terms(wm, y, ou.z.m, wick.z2.m);
                    CMatrix wrhs = -c * (wm * wm * wm + st.s2 + st.s1 + st.s0);
                    CMatrix w_new = exp_euler_step(wm, wrhs, h, w);
                    y = y_step(y, wick.z3_adj.m, h, params, w);
                    v = w_new + y;
                }
            } else {
                v = exp_euler_step(v, CMatrix::Zero(v.rows(), v.cols()), h, w);
            }
            ou = advance(ou, h, w);
            wick = WickBundle::from(ou.z, w, interacting);
        }
        double t_next = (k + 1) * dt;

        if (!v.allFinite() || !ou.z.m.allFinite()) {
            result.aborted = true;
            std::ostringstream os;
            os << "NaN/Inf at t = " << t_next
               << " (step size too large for given lambda, cutoff)";
            result.abort_reason = os.str();
            return result;
        }

        if (energy_due) {
            EnergyReport rep =
                energy_report(w_now, (v - y).eval(), t, dt, y_left, z_left, z2_left, params, w);
            residual_latest = rep.residual;
            result.energy.push_back(rep);
        }

        if (t_next >= settings.burn_in) result.two_point.add(ou.z.m + v);

        if ((k + 1) % settings.snapshot_stride == 0 || k + 1 == n_steps) {
            if (settings.with_apriori && interacting)
                result.apriori.push_back(apriori_ingredients(y, ou.z, wick.z2.m, params, w));
            record(t_next, v, y);
        }
        result.steps_taken += n_sub;
    }
    result.final_time = n_steps * dt;
    result.final_v = v;
    result.final_y = y;
    result.final_z = ou.z.m;
    return result;
}

double mean_energy_residual(const ModelParams& params_in, double dt_z, int v_every,
                            double t_final) {
    ModelParams params = params_in;
    params.require_valid();
    WeightTable w(params);
    const int n_cut = params.cutoff;
    const double dt_v = dt_z * v_every;

    OUState ou = sample_stationary(params, w);
    WickBundle wick = WickBundle::from(ou.z, w);
    CMatrix v = CMatrix::Zero(n_cut + 1, n_cut + 1);
    CMatrix y = CMatrix::Zero(n_cut + 1, n_cut + 1);

    long long n_vsteps = static_cast<long long>(std::round(t_final / dt_v));
    // skip the startup transient; average the residual over the second half
    long long skip = n_vsteps / 2;
    double acc = 0.0;
    long long count = 0;
    for (long long k = 0; k < n_vsteps; ++k) {
        CMatrix w_now = v - y;
        CMatrix z_left = ou.z.m;
        CMatrix z2_left = wick.z2.m;
        CMatrix rhs = remainder_rhs(v, z_left, z2_left, wick.z3_adj.m, params);
        CMatrix v_next = exp_euler_step(v, rhs, dt_v, w);
        CMatrix y_next = y_step(y, wick.z3_adj.m, dt_v, params, w);
        if (k >= skip) {
            EnergyReport rep = energy_report(w_now, v_next - y_next, k * dt_v, dt_v, y, z_left,
                                             z2_left, params, w);
            acc += std::abs(rep.residual);
            ++count;
        }
        v = v_next;
        y = y_next;
        for (int s = 0; s < v_every; ++s) ou = advance(ou, dt_z, w);
        wick = WickBundle::from(ou.z, w);
    }
    return count ? acc / count : 0.0;
}

} // namespace moyal
