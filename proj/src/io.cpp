#include "moyal/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace moyal {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {
std::ofstream open_or_throw(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    return f;
}
} // namespace

void write_series_csv(const std::string& path, const std::vector<StepRecord>& series) {
    auto f = open_or_throw(path);
    f << "t,v_h0,v_hhalf_meps,w_h0,w_h0_sq,energy_residual,tr_phi2,tr_phi4_wick\n";
    for (const auto& r : series)
        f << format_g17(r.t) << "," << format_g17(r.v_h0) << "," << format_g17(r.v_hhalf_meps)
          << "," << format_g17(r.w_h0) << "," << format_g17(r.w_h0_sq) << ","
          << format_g17(r.energy_residual) << "," << format_g17(r.tr_phi2) << ","
          << format_g17(r.tr_phi4_wick) << "\n";
}

void write_two_point_csv(const std::string& path, const Eigen::ArrayXXd& mean,
                         const Eigen::ArrayXXd& se, const WeightTable& w) {
    auto f = open_or_throw(path);
    f << "m,n,mean_abs_sq,se,free_value\n";
    for (int m = 0; m <= w.cutoff(); ++m)
        for (int n = 0; n <= w.cutoff(); ++n)
            f << m << "," << n << "," << format_g17(mean(m, n)) << "," << format_g17(se(m, n))
              << "," << format_g17(1.0 / w(m, n)) << "\n";
}

void write_energy_csv(const std::string& path, const std::vector<EnergyReport>& energy) {
    auto f = open_or_throw(path);
    f << "t,ddt_half_norm,lhs_dissipation,trace_term,residual\n";
    for (const auto& e : energy)
        f << format_g17(e.t) << "," << format_g17(e.ddt_half_norm) << ","
          << format_g17(e.lhs_dissipation) << "," << format_g17(e.trace_term) << ","
          << format_g17(e.residual) << "\n";
}

} // namespace moyal
