#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "specdyn/continual.hpp"
#include "specdyn/linear_dynamics.hpp"
#include "specdyn/meanfield.hpp"
#include "specdyn/race_phase.hpp"

namespace specdyn {

/// CSV writers. All files use '.' decimals, '\n' line endings and UTF-8;
/// numbers are printed with max_digits10 so re-runs are byte-comparable.

void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

/// Header "lambda1,lambda2,min_escape_gap,valid"; masked cells print nan,0.
void write_phase_csv(std::ostream& os, const PhaseGrid& grid);
nlohmann::json phase_grid_json(const PhaseGrid& grid);

/// Header "t,omega,loss" / constants object {"K","C","theta0","lambda","s","d","tau"}.
nlohmann::json constants_json(const DataStatistics& stats, const PathwayConfig& cfg,
                              const DerivedConstants& consts);

/// Header "tau,eps1,eps2,Q00,...,R1_00,...,R2_00,...,h1_0,...,h2_0,...".
void write_meanfield_csv(std::ostream& os, const std::vector<double>& tau,
                         const std::vector<double>& eps1, const std::vector<double>& eps2);

/// Header "axis1,axis2,H_h,H_Q,H_m,forgetting,eps1_final,eps2_final,node_norm_0,node_norm_1,seed".
void write_sweep_csv(std::ostream& os, const SweepGrid& grid);
nlohmann::json sweep_grid_json(const SweepGrid& grid);

std::string format_double(double v);

}  // namespace specdyn
