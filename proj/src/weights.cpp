#include "moyal/weights.hpp"

#include <cmath>

namespace moyal {

double ModelParams::weight(int m, int n) const {
    return 2.0 * M_PI * theta * (mass_sq + (4.0 / theta) * (m + n + 1));
}

double weight(int m, int n, const ModelParams& params) { return params.weight(m, n); }

std::string ModelParams::validate() const {
    if (!(theta > 0.0)) return "model.theta must be > 0";
    if (!(mass_sq >= 0.0)) return "model.mass_sq must be >= 0";
    if (!(lambda >= 0.0)) return "model.lambda must be >= 0";
    if (cutoff < 0) return "model.cutoff must be >= 0";
    if (!(eps > 0.0 && eps < 0.25)) return "model.eps must lie in (0, 0.25)";
    if (!(eps_prime > 0.0 && eps_prime < 0.25)) return "model.eps_prime must lie in (0, 0.25)";
    if (dt != 0.0 && !(dt > 0.0)) return "model.dt must be > 0";
    // Several weighted-norm monotonicity properties need A >= 1, so
    // configurations with A_00 < 1 are rejected rather than handled.
    if (a00() < 1.0) return "model: A_00 = 2*pi*theta*(mass_sq + 4/theta) must be >= 1";
    return {};
}

void ModelParams::require_valid() const {
    auto msg = validate();
    if (!msg.empty()) throw std::invalid_argument(msg);
}

void ModelParams::resolve_defaults() {
    if (dt == 0.0) dt = 0.1 / weight(cutoff, cutoff);
}

WeightTable::WeightTable(const ModelParams& params)
    : n_(params.cutoff), theta_(params.theta), mass_sq_(params.mass_sq) {
    params.require_valid();
    a_.resize(n_ + 1, n_ + 1);
    for (int m = 0; m <= n_; ++m)
        for (int n = 0; n <= n_; ++n) a_(m, n) = params.weight(m, n);
    tail1_.resize(n_ + 1);
    for (int m = 0; m <= n_; ++m) {
        double s = 0.0;
        for (int k = 0; k <= n_; ++k) s += 1.0 / a_(m, k);
        tail1_[m] = s;
    }
}

const Eigen::ArrayXXd& WeightTable::pow(double p) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = pow_cache_.find(p);
    if (it == pow_cache_.end()) it = pow_cache_.emplace(p, a_.pow(p)).first;
    return it->second;
}

} // namespace moyal
