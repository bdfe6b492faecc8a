#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "specdyn/linear_dynamics.hpp"

namespace specdyn {

/// Inputs of the two-pathway specialisation phase diagram. Both pathways
/// share the task singular value s and the first-layer scale a0; the grids
/// hold the fast (lambda1) and slow (lambda2) imbalances.
struct RaceConfig {
  double s = 105.0;
  double a0 = 0.01;
  double eta = 1e-5;
  Thresholds thresholds{5.0, 1.0};
  std::vector<double> lambda1_grid;
  std::vector<double> lambda2_grid;
  int substeps = 1;  // slow-pathway Euler steps per epoch
};

struct PhaseGrid {
  std::vector<double> lambda1_values;
  std::vector<double> lambda2_values;
  /// Row-major [i1 * n2 + i2]; min over training time of the slow pathway's
  /// remaining escape time, clamped at 0. > 1 epoch signals specialisation.
  std::vector<double> min_escape_gap;
  std::vector<std::uint8_t> valid;
  std::vector<std::string> cell_errors;  // "i1,i2: message" per failed cell

  std::size_t n1() const { return lambda1_values.size(); }
  std::size_t n2() const { return lambda2_values.size(); }
  double gap(std::size_t i1, std::size_t i2) const { return min_escape_gap[i1 * n2() + i2]; }
  bool is_valid(std::size_t i1, std::size_t i2) const { return valid[i1 * n2() + i2] != 0; }
};

/**
 * Runs the coupled race for one (lambda1, lambda2) cell: the fast pathway
 * follows its closed form up to its hitting time, the slow pathway's angle
 * is Euler-integrated against the depleted singular value s - omega1(t),
 * and at every epoch the slow pathway's remaining escape time is evaluated
 * in closed form with the instantaneous s_eff. Returns the minimum over
 * epochs, clamped at 0. Requires lambda1 >= lambda2 >= 0.
 */
double coupled_min_escape(double s, double a0, double lambda1, double lambda2, double eta,
                          const Thresholds& thr, int substeps = 1);

PhaseGrid build_phase_grid(const RaceConfig& cfg, int jobs = 1);

/// Discrete GD on the full two-hidden-neuron network in reduced coordinates;
/// the pathways couple through the shared residual s - omega1 - omega2. The
/// end-to-end oracle for the phase diagram.
std::pair<Trajectory, Trajectory> simulate_two_pathway_gd(double s, double a0, double lambda1,
                                                          double lambda2, double eta, long steps,
                                                          long record_every = 1);

}  // namespace specdyn
