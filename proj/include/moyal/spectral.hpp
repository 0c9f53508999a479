#pragma once

#include <string>
#include <vector>

#include "moyal/matrix.hpp"
#include "moyal/weights.hpp"

namespace moyal {

// || c ||_{H^alpha} = (sum_{m,n} A_mn^{2 alpha} |c_mn|^2)^{1/2}
double h_norm(const CMatrix& c, double alpha, const WeightTable& w);

// || c ||_{M^p} = sup_{m,n} A_mn^p |c_mn|
double m_norm(const CMatrix& c, double p, const WeightTable& w);

// Entrywise e^{-A_mn t} c_mn, the diagonal heat semigroup.
CMatrix semigroup_apply(const CMatrix& c, double t, const WeightTable& w);

// Three-index tensor L^i_{jk} with the Hermitian symmetry
// L^i_{kj} = conj(L^i_{jk}) for each fixed i. Stored as one matrix slice
// per upper index.
struct GammaTensor {
    double beta = 0.0; // exponent 2*beta used when the tensor was built
    std::vector<CMatrix> slice;

    int cutoff() const { return static_cast<int>(slice.size()) - 1; }
    Complex operator()(int i, int j, int k) const { return slice[i](j, k); }
};

// || L ||_{G^{alpha,beta}} = sup_{i,j,k} A_ii^alpha A_jk^beta |L^i_{jk}|
double g_norm(const GammaTensor& g, double alpha, double beta, const WeightTable& w);

// Numeric check of one of the six correlation inequalities. The truncated
// left-hand sum runs the internal index to `inner_bound` (default
// 10*m_max) with an early stop once the last term falls below 1e-12 of
// the partial sum; the report carries the max LHS/RHS ratio over the
// (m, n) grid.
struct InequalityReport {
    int case_id = 0;
    int m_max = 0;
    double max_ratio = 0.0;
    int argmax_m = 0, argmax_n = 0;
    std::vector<double> ratios; // row-major over the checked grid
};

// case_id = 1..6 per the correlation-inequality list:
//   1: sum_k 1/(A_mk^a A_kn^b)        <~ 1/A_mn^{a+b-1},  a,b in (0,1), a+b>1
//   2: sum_k 1/(A_mk^a A_kn^b)        <~ 1/A_mn^{min(a,b)-d}, a>=1 or b>=1
//   3: sum_m 1/(A_mm^a A_mn^b)        <~ 1/A_nn^{a+b-1},  a,b>0, a+b>1, a<1
//   4: sum_m 1/(A_mm^a A_mn^b)        <~ 1/A_nn^{b-d},    b>0, a>=1
//   5: sum_m 1/A_mn^a                  ~ 1/A_nn^{a-1},    a>1
//   6: sum_k 1/(A_mk A_kk^a A_kn)     <~ 1/A_mn,          a in (0,1)
// `exponents` carries (a), (a,b) or (a,b,delta) as the case requires.
// Throws std::invalid_argument when the hypotheses are violated.
InequalityReport check_correlation_inequality(int case_id,
                                              const std::vector<double>& exponents,
                                              int m_max, const ModelParams& params,
                                              int inner_bound = 0);

} // namespace moyal
