#include "moyal/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace moyal {

double h_norm(const CMatrix& c, double alpha, const WeightTable& w) {
    if (alpha == 0.0) return c.norm();
    const Eigen::ArrayXXd& weights = w.pow(2.0 * alpha);
    return std::sqrt((weights * c.array().abs2()).sum());
}

double m_norm(const CMatrix& c, double p, const WeightTable& w) {
    if (c.size() == 0) return 0.0;
    if (p == 0.0) return c.cwiseAbs().maxCoeff();
    const Eigen::ArrayXXd& weights = w.pow(p);
    return (weights * c.array().abs()).maxCoeff();
}

CMatrix semigroup_apply(const CMatrix& c, double t, const WeightTable& w) {
    if (t < 0.0) throw std::invalid_argument("semigroup_apply: t must be >= 0");
    if (t == 0.0) return c;
    return ((-t * w.table()).exp() * c.array()).matrix();
}

double g_norm(const GammaTensor& g, double alpha, double beta, const WeightTable& w) {
    double best = 0.0;
    const int n = g.cutoff();
    for (int i = 0; i <= n; ++i) {
        const double wi = std::pow(w(i, i), alpha);
        for (int j = 0; j <= n; ++j)
            for (int k = 0; k <= n; ++k) {
                double val = wi * std::pow(w(j, k), beta) * std::abs(g(i, j, k));
                if (val > best) best = val;
            }
    }
    return best;
}

namespace {

// Truncated sum with a convergence guard: stop once the last term drops
// below 1e-12 of the partial sum.
template <typename Term>
double guarded_sum(int bound, Term term) {
    double s = 0.0;
    for (int k = 0; k <= bound; ++k) {
        double t = term(k);
        s += t;
        if (k > 8 && t < 1e-12 * s) break;
    }
    return s;
}

} // namespace

InequalityReport check_correlation_inequality(int case_id, const std::vector<double>& exponents,
                                              int m_max, const ModelParams& params,
                                              int inner_bound) {
    params.require_valid();
    if (inner_bound <= 0) inner_bound = 10 * std::max(m_max, 1);
    auto a = [&](int m, int n) { return params.weight(m, n); };

    auto need = [&](std::size_t k) {
        if (exponents.size() < k) throw std::invalid_argument("inequality: missing exponents");
    };
    double e0 = exponents.empty() ? 0.0 : exponents[0];
    double e1 = exponents.size() > 1 ? exponents[1] : 0.0;
    double e2 = exponents.size() > 2 ? exponents[2] : 0.0;

    switch (case_id) {
        case 1:
            need(2);
            if (!(e0 > 0 && e0 < 1 && e1 > 0 && e1 < 1 && e0 + e1 > 1))
                throw std::invalid_argument("case 1 needs a,b in (0,1) with a+b > 1");
            break;
        case 2:
            need(3);
            if (!(e0 >= 1 || e1 >= 1) || !(e0 > 0 && e1 > 0) || !(e2 > 0))
                throw std::invalid_argument("case 2 needs a>=1 or b>=1 (both > 0) and delta > 0");
            break;
        case 3:
            need(2);
            if (!(e0 > 0 && e1 > 0 && e0 + e1 > 1 && e0 < 1))
                throw std::invalid_argument("case 3 needs a,b > 0, a+b > 1, a < 1");
            break;
        case 4:
            need(3);
            if (!(e1 > 0 && e0 >= 1 && e2 > 0))
                throw std::invalid_argument("case 4 needs b > 0, a >= 1, delta > 0");
            break;
        case 5:
            need(1);
            if (!(e0 > 1)) throw std::invalid_argument("case 5 needs a > 1");
            break;
        case 6:
            need(1);
            if (!(e0 > 0 && e0 < 1)) throw std::invalid_argument("case 6 needs a in (0,1)");
            break;
        default:
            throw std::invalid_argument("inequality case must be 1..6");
    }

    InequalityReport rep;
    rep.case_id = case_id;
    rep.m_max = m_max;
    // Cases 3-5 sum over the row index, leaving one free index; run the
    // grid over n with m pinned to 0 so the report shape is uniform.
    const bool one_free = (case_id >= 3 && case_id <= 5);
    const int rows = one_free ? 1 : m_max + 1;
    rep.ratios.assign(static_cast<std::size_t>(rows) * (m_max + 1), 0.0);

    for (int m = 0; m < rows; ++m) {
        for (int n = 0; n <= m_max; ++n) {
            double lhs = 0.0, rhs = 1.0;
            switch (case_id) {
                case 1:
                    lhs = guarded_sum(inner_bound, [&](int k) {
                        return 1.0 / (std::pow(a(m, k), e0) * std::pow(a(k, n), e1));
                    });
                    rhs = 1.0 / std::pow(a(m, n), e0 + e1 - 1.0);
                    break;
                case 2:
                    lhs = guarded_sum(inner_bound, [&](int k) {
                        return 1.0 / (std::pow(a(m, k), e0) * std::pow(a(k, n), e1));
                    });
                    rhs = 1.0 / std::pow(a(m, n), std::min(e0, e1) - e2);
                    break;
                case 3:
                    lhs = guarded_sum(inner_bound, [&](int k) {
                        return 1.0 / (std::pow(a(k, k), e0) * std::pow(a(k, n), e1));
                    });
                    rhs = 1.0 / std::pow(a(n, n), e0 + e1 - 1.0);
                    break;
                case 4:
                    lhs = guarded_sum(inner_bound, [&](int k) {
                        return 1.0 / (std::pow(a(k, k), e0) * std::pow(a(k, n), e1));
                    });
                    rhs = 1.0 / std::pow(a(n, n), e1 - e2);
                    break;
                case 5:
                    lhs = guarded_sum(inner_bound,
                                      [&](int k) { return 1.0 / std::pow(a(k, n), e0); });
                    rhs = 1.0 / std::pow(a(n, n), e0 - 1.0);
                    break;
                case 6:
                    lhs = guarded_sum(inner_bound, [&](int k) {
                        return 1.0 / (a(m, k) * std::pow(a(k, k), e0) * a(k, n));
                    });
                    rhs = 1.0 / a(m, n);
                    break;
            }
            double ratio = lhs / rhs;
            rep.ratios[static_cast<std::size_t>(m) * (m_max + 1) + n] = ratio;
            if (ratio > rep.max_ratio) {
                rep.max_ratio = ratio;
                rep.argmax_m = m;
                rep.argmax_n = n;
            }
        }
    }
    return rep;
}

} // namespace moyal
