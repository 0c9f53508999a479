#pragma once

#include <complex>
#include <string>
#include <vector>

#include "moyal/matrix.hpp"
#include "moyal/weights.hpp"

namespace moyal {

struct TimeSeries {
    std::string name;
    std::vector<double> times;
    std::vector<double> values;
    double burn_in = 0.0;
    int n_batches = 32;
};

struct BatchMeansResult {
    double mean = 0.0;
    double se = 0.0;
    int n_batches = 0;
    long long n_samples = 0;
};

// Batch-means estimate of the ergodic average and its standard error over
// the post-burn-in window. Throws std::invalid_argument with fewer than
// 20 batches of data.
BatchMeansResult time_average(const TimeSeries& ts);

// :tr(phi^4): = tr(phi^4) - 4 tr(<z^2> phi^2) + 2 tr(<z^2>^2) with
// <z^2> = diag(sum_{k<=N} 1/A_mk). Real for Hermitian phi.
double renormalized_trace_phi4(const HermitianField& phi, const WeightTable& w);

struct StationarityResult {
    double statistic = 0.0; // two-sample KS distance between the halves
    double threshold = 0.0; // 1%-level critical value at the thinned sizes
    int stride = 1;         // decorrelation stride applied before the test
    bool pass = false;
};

// Two-sample Kolmogorov-Smirnov test between the first and second halves
// of the post-burn-in series, at the 1% level. The series is thinned to
// an estimated decorrelation stride (2 x integrated autocorrelation time)
// first; for i.i.d. input the stride is 1 and the test keeps its nominal
// calibration.
StationarityResult stationarity_test(const TimeSeries& ts);

// Matrix-basis function b_mn(x) on R^2; for m > n returns conj(b_nm).
Complex basis_function(int m, int n, double x1, double x2, double theta);

// sum_{m,n<=N} c_mn b_mn(x). For Hermitian c the result is real up to
// roundoff; the imaginary residual is reported.
struct Reconstruction {
    std::vector<double> values;
    double max_imag_residual = 0.0;
};
Reconstruction reconstruct_field(const HermitianField& c,
                                 const std::vector<std::pair<double, double>>& grid,
                                 double theta);

// Gram matrix of the basis under the normalized inner product
// (2 pi theta)^{-1} int b_mn conj(b_m'n') dx, computed with radial
// Gauss-Laguerre plus uniform angular quadrature (exact for these
// integrands). Rows/cols index (m, n) pairs with m, n <= n_max row-major.
Eigen::MatrixXcd basis_gram(int n_max, double theta, int n_radial = 24, int n_angular = 64);

// Nodes and weights for int_0^infty f(u) e^{-u} du (Golub-Welsch).
void gauss_laguerre(int n, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace moyal
