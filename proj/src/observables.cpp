#include "moyal/observables.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace moyal {

namespace {

std::vector<double> post_burn_in(const TimeSeries& ts) {
    if (ts.times.size() != ts.values.size())
        throw std::invalid_argument("time series: times/values length mismatch");
    std::vector<double> vals;
    vals.reserve(ts.values.size());
    for (std::size_t i = 0; i < ts.values.size(); ++i)
        if (ts.times[i] >= ts.burn_in) vals.push_back(ts.values[i]);
    return vals;
}

} // namespace

BatchMeansResult time_average(const TimeSeries& ts) {
    std::vector<double> vals = post_burn_in(ts);
    int n_batches = ts.n_batches > 0 ? ts.n_batches : 32;
    if (n_batches < 20 || static_cast<long long>(vals.size()) < n_batches)
        throw std::invalid_argument("time_average: need at least 20 batches of data");

    const std::size_t n = vals.size();
    const std::size_t per = n / n_batches; // trailing remainder joins the last batch
    std::vector<double> batch(n_batches, 0.0);
    std::vector<std::size_t> count(n_batches, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t b = std::min(i / per, static_cast<std::size_t>(n_batches - 1));
        batch[b] += vals[i];
        count[b] += 1;
    }
    double grand = 0.0;
    for (double v : vals) grand += v;
    grand /= static_cast<double>(n);

    double var = 0.0;
    for (int b = 0; b < n_batches; ++b) {
        double bm = batch[b] / static_cast<double>(count[b]);
        var += (bm - grand) * (bm - grand);
    }
    var /= (n_batches - 1);

    BatchMeansResult out;
    out.mean = grand;
    out.se = std::sqrt(var / n_batches);
    out.n_batches = n_batches;
    out.n_samples = static_cast<long long>(n);
    return out;
}

double renormalized_trace_phi4(const HermitianField& phi, const WeightTable& w) {
    const int n = phi.cutoff();
    CMatrix phi2 = phi.m * phi.m;
    Complex tr4 = trace_pair(phi2, phi2);
    double tr_z2_phi2 = 0.0; // tr(<z^2> phi^2), <z^2> diagonal
    double tr_z2_sq = 0.0;
    for (int m = 0; m <= n; ++m) {
        tr_z2_phi2 += w.tail1(m) * phi2(m, m).real();
        tr_z2_sq += w.tail1(m) * w.tail1(m);
    }
    return tr4.real() - 4.0 * tr_z2_phi2 + 2.0 * tr_z2_sq;
}

namespace {

// integrated autocorrelation time with a 5*tau self-consistent window
double integrated_autocorr_time(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 8) return 0.5;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double x : v) c0 += (x - mean) * (x - mean);
    c0 /= static_cast<double>(n);
    if (c0 <= 0.0) return 0.5;

    double tau = 0.5;
    std::size_t max_lag = n / 4;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double ck = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) ck += (v[i] - mean) * (v[i + k] - mean);
        ck /= static_cast<double>(n - k);
        double rho = ck / c0;
        if (rho < 0.0) break;
        tau += rho;
        if (static_cast<double>(k) > 5.0 * tau) break;
    }
    return tau;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        double fa = static_cast<double>(i) / a.size();
        double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

} // namespace

StationarityResult stationarity_test(const TimeSeries& ts) {
    std::vector<double> vals = post_burn_in(ts);
    if (vals.size() < 40) throw std::invalid_argument("stationarity_test: insufficient data");

    // decorrelate before the KS comparison; correlated samples would
    // inflate the effective sample count and trip the test on perfectly
    // stationary series
    double tau = integrated_autocorr_time(vals);
    int stride = std::max(1, static_cast<int>(std::ceil(2.0 * tau)));
    // keep at least ~40 thinned points so the KS comparison stays usable
    int cap = static_cast<int>(std::max<std::size_t>(vals.size() / 40, 1));
    stride = std::min(stride, cap);
    std::vector<double> thin;
    for (std::size_t i = 0; i < vals.size(); i += stride) thin.push_back(vals[i]);
    if (thin.size() < 10) throw std::invalid_argument("stationarity_test: insufficient data");

    std::size_t half = thin.size() / 2;
    std::vector<double> first(thin.begin(), thin.begin() + half);
    std::vector<double> second(thin.begin() + half, thin.end());

    StationarityResult out;
    out.stride = stride;
    out.statistic = ks_distance(first, second);
    double n1 = static_cast<double>(first.size());
    double n2 = static_cast<double>(second.size());
    const double c01 = 1.6276; // sqrt(-ln(0.005)/2), 1% level
    out.threshold = c01 * std::sqrt((n1 + n2) / (n1 * n2));
    out.pass = out.statistic <= out.threshold;
    return out;
}

namespace {

// associated Laguerre L_k^a by the three-term recurrence
double assoc_laguerre(int k, int a, double x) {
    if (k == 0) return 1.0;
    double lm1 = 1.0;
    double l = 1.0 + a - x;
    for (int i = 2; i <= k; ++i) {
        double next = ((2.0 * i - 1.0 + a - x) * l - (i - 1.0 + a) * lm1) / i;
        lm1 = l;
        l = next;
    }
    return l;
}

} // namespace

Complex basis_function(int m, int n, double x1, double x2, double theta) {
    if (m > n) return std::conj(basis_function(n, m, x1, x2, theta));
    double r2 = x1 * x1 + x2 * x2;
    int d = n - m;
    // sqrt(m!/n!) via log-gamma
    double log_ratio = 0.5 * (std::lgamma(m + 1.0) - std::lgamma(n + 1.0));
    Complex zpow = std::pow(Complex(x1, x2) * std::sqrt(2.0 / theta), d);
    double sign = (m % 2 == 0) ? 1.0 : -1.0;
    double radial = assoc_laguerre(m, d, 2.0 * r2 / theta) * std::exp(log_ratio - r2 / theta);
    return 2.0 * sign * zpow * radial;
}

Reconstruction reconstruct_field(const HermitianField& c,
                                 const std::vector<std::pair<double, double>>& grid,
                                 double theta) {
    Reconstruction out;
    out.values.reserve(grid.size());
    const int n = c.cutoff();
    for (const auto& [x1, x2] : grid) {
        Complex acc = 0.0;
        for (int mm = 0; mm <= n; ++mm)
            for (int nn = 0; nn <= n; ++nn)
                acc += c(mm, nn) * basis_function(mm, nn, x1, x2, theta);
        out.values.push_back(acc.real());
        out.max_imag_residual = std::max(out.max_imag_residual, std::abs(acc.imag()));
    }
    return out;
}

void gauss_laguerre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    // Golub-Welsch on the Laguerre Jacobi matrix: diag 2i+1, offdiag i
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        j(i, i) = 2.0 * i + 1.0;
        if (i + 1 < n) {
            j(i, i + 1) = i + 1.0;
            j(i + 1, i) = i + 1.0;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = es.eigenvalues()(i);
        double v0 = es.eigenvectors()(0, i);
        weights[i] = v0 * v0; // mu_0 = int e^{-u} du = 1
    }
}

Eigen::MatrixXcd basis_gram(int n_max, double theta, int n_radial, int n_angular) {
    std::vector<double> u, gl_w;
    gauss_laguerre(n_radial, u, gl_w);

    const int dim = (n_max + 1) * (n_max + 1);
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(dim, dim);

    // substitute u = 2 r^2 / theta: dx = r dr dphi = (theta/4) du dphi,
    // and the product of two basis functions carries e^{-2 r^2/theta} = e^{-u}
    for (int ir = 0; ir < n_radial; ++ir) {
        double r = std::sqrt(theta * u[ir] / 2.0);
        double radial_w = gl_w[ir] * std::exp(u[ir]) * theta / 4.0;
        for (int ia = 0; ia < n_angular; ++ia) {
            double phi = 2.0 * M_PI * ia / n_angular;
            double x1 = r * std::cos(phi), x2 = r * std::sin(phi);
            double wq = radial_w * (2.0 * M_PI / n_angular) / (2.0 * M_PI * theta);
            std::vector<Complex> b(dim);
            for (int m = 0; m <= n_max; ++m)
                for (int n = 0; n <= n_max; ++n)
                    b[m * (n_max + 1) + n] = basis_function(m, n, x1, x2, theta);
            for (int p = 0; p < dim; ++p)
                for (int q = 0; q < dim; ++q) gram(p, q) += wq * b[p] * std::conj(b[q]);
        }
    }
    return gram;
}

} // namespace moyal
