#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace moyal {

// Physical and numerical parameters of the cutoff model.
struct ModelParams {
    double theta = 1.0;      // Moyal deformation parameter, > 0
    double mass_sq = 1.0;    // M^2, >= 0
    double lambda = 0.1;     // quartic coupling, >= 0
    int cutoff = 8;          // matrix indices run 0..cutoff
    double eps = 0.05;       // regularity slack, in (0, 1/4)
    double eps_prime = 0.02; // second slack, in (0, 1/4)
    double dt = 0.0;         // integrator step; 0 means "derive 0.1 / A_NN"
    std::uint64_t seed = 42;

    // Kinetic weight A_mn = 2*pi*theta*(M^2 + (4/theta)(m+n+1)).
    double weight(int m, int n) const;

    double a00() const { return weight(0, 0); }

    // Returns an empty string when valid, otherwise the first violated
    // constraint (named by field).
    std::string validate() const;

    // Throws std::invalid_argument when invalid.
    void require_valid() const;

    // Fills dt = 0.1 / A_NN when unset.
    void resolve_defaults();
};

double weight(int m, int n, const ModelParams& params);

// Dense table of A_mn for 0 <= m,n <= cutoff plus a cache of fractional
// powers A_mn^p. The hot loops (norms, semigroup, diagram sums) are
// memory-bound, so each requested exponent is tabulated once.
class WeightTable {
  public:
    explicit WeightTable(const ModelParams& params);

    int cutoff() const { return n_; }
    double theta() const { return theta_; }
    double mass_sq() const { return mass_sq_; }

    double operator()(int m, int n) const { return a_(m, n); }
    const Eigen::ArrayXXd& table() const { return a_; }

    // A_mn^p, tabulated. Safe for concurrent callers.
    const Eigen::ArrayXXd& pow(double p) const;

    // sum_{k=0..cutoff} 1/A_mk, the truncated tail entering Wick subtraction.
    double tail1(int m) const { return tail1_[m]; }

  private:
    int n_;
    double theta_, mass_sq_;
    Eigen::ArrayXXd a_;
    std::vector<double> tail1_;
    mutable std::mutex mu_;
    mutable std::map<double, Eigen::ArrayXXd> pow_cache_;
};

} // namespace moyal
