#pragma once

#include <string>
#include <vector>

#include "moyal/dynamics.hpp"
#include "moyal/weights.hpp"

namespace moyal {

// shortest-roundtrip decimal formatting shared by all CSV writers, so that
// identical (config, seed) runs produce byte-identical files
std::string format_g17(double v);

void write_series_csv(const std::string& path, const std::vector<StepRecord>& series);
void write_two_point_csv(const std::string& path, const Eigen::ArrayXXd& mean,
                         const Eigen::ArrayXXd& se, const WeightTable& w);
void write_energy_csv(const std::string& path, const std::vector<EnergyReport>& energy);

} // namespace moyal
