#include "moyal/gaussian.hpp"

#include <cmath>
#include <stdexcept>

#include "moyal/rng.hpp"

namespace moyal {

double covariance(int m, int n, int k, int l, double dt, const WeightTable& w) {
    if (m != l || n != k) return 0.0;
    double a = w(m, n);
    return std::exp(-std::abs(dt) * a) / a;
}

namespace {

// Fresh stationary-marginal Hermitian draw for step `step`, scaled by
// `scale(m, n)`; only m <= n is sampled, the rest follows by conjugation.
template <typename Scale>
void fill_hermitian_noise(HermitianField& out, std::uint64_t seed, std::uint64_t step,
                          const WeightTable& w, Scale scale) {
    const int n_cut = out.cutoff();
    for (int m = 0; m <= n_cut; ++m) {
        for (int n = m; n <= n_cut; ++n) {
            auto [g1, g2] = stream_gauss_pair(entry_key(seed, m, n), step);
            double a = w(m, n);
            if (m == n) {
                out(m, m) = scale(m, m) * g1 / std::sqrt(a);
            } else {
                double s = scale(m, n) / std::sqrt(2.0 * a);
                out(m, n) = Complex(s * g1, s * g2);
                out(n, m) = std::conj(out(m, n));
            }
        }
    }
}

} // namespace

OUState sample_stationary(const ModelParams& params, const WeightTable& w) {
    OUState state;
    state.seed = params.seed;
    state.step = 0;
    state.t = 0.0;
    state.z = HermitianField(params.cutoff);
    fill_hermitian_noise(state.z, state.seed, 0, w, [](int, int) { return 1.0; });
    return state;
}

OUState advance(const OUState& state, double dt, const WeightTable& w) {
    if (dt < 0.0) throw std::invalid_argument("advance: dt must be >= 0");
    if (dt == 0.0) return state;
    OUState next;
    next.seed = state.seed;
    next.step = state.step + 1;
    next.t = state.t + dt;
    const int n_cut = state.z.cutoff();
    next.z = HermitianField(n_cut);
    fill_hermitian_noise(next.z, next.seed, next.step, w, [&](int m, int n) {
        return std::sqrt(1.0 - std::exp(-2.0 * w(m, n) * dt));
    });
    for (int m = 0; m <= n_cut; ++m)
        for (int n = 0; n <= n_cut; ++n)
            next.z(m, n) += std::exp(-w(m, n) * dt) * state.z(m, n);
    return next;
}

HermitianField wick2(const HermitianField& z, const WeightTable& w) {
    HermitianField out(z.cutoff());
    out.m = z.m * z.m;
    for (int m = 0; m <= z.cutoff(); ++m) out(m, m) -= w.tail1(m);
    return out;
}

HermitianField wick3(const HermitianField& z, const WeightTable& w, WickConvention convention) {
    const int n_cut = z.cutoff();
    HermitianField out(n_cut);
    out.m = z.m * z.m * z.m;
    for (int m = 0; m <= n_cut; ++m)
        for (int n = 0; n <= n_cut; ++n) out(m, n) -= (w.tail1(m) + w.tail1(n)) * z(m, n);
    if (convention == WickConvention::full) {
        for (int m = 0; m <= n_cut; ++m) {
            Complex s = 0.0;
            for (int k = 0; k <= n_cut; ++k) s += z(k, k) / w(m, k);
            out(m, m) -= s;
        }
    }
    return out;
}

GammaTensor gamma_tensor(const HermitianField& z, double beta, const WeightTable& w) {
    const int n_cut = z.cutoff();
    GammaTensor g;
    g.beta = beta;
    g.slice.assign(n_cut + 1, CMatrix::Zero(n_cut + 1, n_cut + 1));
    const Eigen::ArrayXXd& amn = w.pow(2.0 * beta);
    for (int n = 0; n <= n_cut; ++n) {
        CMatrix& s = g.slice[n];
        for (int l = 0; l <= n_cut; ++l)
            for (int lp = 0; lp <= n_cut; ++lp) {
                Complex acc = 0.0;
                for (int m = 0; m <= n_cut; ++m) {
                    Complex centered = z(lp, m) * z(m, l);
                    if (lp == l) centered -= 1.0 / w(lp, m);
                    acc += centered / amn(m, n);
                }
                s(l, lp) = acc;
            }
    }
    return g;
}

WickBundle WickBundle::from(const HermitianField& z, const WeightTable& w, bool with_z3) {
    WickBundle b;
    b.z2 = wick2(z, w);
    if (with_z3) {
        b.z3_adj = wick3(z, w, WickConvention::adjacent);
        b.z3_full = b.z3_adj;
        const int n_cut = z.cutoff();
        for (int m = 0; m <= n_cut; ++m) {
            Complex s = 0.0;
            for (int k = 0; k <= n_cut; ++k) s += z(k, k) / w(m, k);
            b.z3_full(m, m) -= s;
        }
    }
    b.tail1.resize(z.cutoff() + 1);
    for (int m = 0; m <= z.cutoff(); ++m) b.tail1[m] = w.tail1(m);
    return b;
}

} // namespace moyal
