#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specdyn/meanfield.hpp"

namespace specdyn {

/// Readout initialisation in polar coordinates, (r cos theta, r sin theta)
/// for p = 2: theta = 0 is one-hot (maximally asymmetric), theta = pi/4
/// symmetric. For p > 2 the entries fall back to Gaussians of scale r/sqrt(p).
struct PolarReadoutInit {
  double r = 0.1;
  double theta = 0.0;
};

Eigen::VectorXd polar_readout(const PolarReadoutInit& init, int p,
                              std::uint64_t seed = 0);

struct EWCOptions {
  double xi = 0.0;
  int fisher_samples = 1000;
  bool model_fisher = false;   // empirical squared-gradient Fisher by default
  bool normalise = true;       // rescale the estimate so max F = 1
};

enum class Backend { Sgd, MeanfieldOde };

struct ContinualProtocol {
  int d = 10000;
  int p = 2;
  int p_star = 1;
  double gamma = 0.5;
  double sigma_w = 1e-3;
  double eta = 1.0;
  PolarReadoutInit init1{0.01, 0.0};
  PolarReadoutInit init2{0.1, 0.0};
  double tau1 = 60.0;  // per-task training span in tau = steps/d units
  double tau2 = 60.0;
  Backend backend = Backend::Sgd;
  Activation activation = Activation::ScaledErf;
  std::optional<EWCOptions> ewc;
  std::uint64_t seed = 0;
  bool force_identical_teachers = false;  // hT2 := hT1, WT2 := WT1
  double record_dtau = 0.5;
  double ode_dtau = 0.01;
  int eval_samples = 4096;  // Monte-Carlo error samples (Relu path)
  bool ode_sample_init = true;  // ODE backend: initial overlaps from sampled weights
};

struct EntropyReport {
  double h_h = 0.0;
  double h_q = 0.0;
  double h_m = 0.0;
};

/// The three specialisation entropies over normalised readout magnitudes and
/// Q diagonals; H_m's product weights are used verbatim (they do not sum
/// to 1). 0 log 0 counts as 0.
EntropyReport entropy_measures(const Eigen::MatrixXd& q, const Eigen::VectorXd& h);

struct TwoTaskResult {
  std::vector<double> tau, eps1, eps2;
  EntropyReport entropy_task1, entropy_task2;
  Eigen::VectorXd node_norms_final;
  double eps1_end_task1 = 0.0;
  double eps1_final = 0.0;
  double eps2_final = 0.0;
  OrderParams op_end_task1, op_final;
};

/// Task 1 for tau1, optional EWC snapshot (anchor + Fisher), then task 2 for
/// tau2 with h1 frozen. Deterministic given the protocol seed.
TwoTaskResult run_two_task(const ContinualProtocol& proto);

/// eps1(end of task 2) - eps1(end of task 1); negative = backward transfer.
double forgetting(const TwoTaskResult& result);

Eigen::VectorXd node_norms(const OrderParams& op);

/// Axis over which sweeps vary a protocol; `name` is one of
/// gamma, sigma_w, log_sigma_w, r1, theta1, r2, theta2, xi.
struct AxisSpec {
  std::string name;
  std::vector<double> values;
};

struct SweepCell {
  double h_h = 0.0, h_q = 0.0, h_m = 0.0;
  double forgetting = 0.0;
  double eps1_final = 0.0, eps2_final = 0.0;
  double node_norm_0 = 0.0, node_norm_1 = 0.0;
  std::uint64_t seed = 0;
  bool valid = false;
  std::string error;
};

struct SweepGrid {
  AxisSpec axis1, axis2;
  std::vector<SweepCell> cells;  // row-major [i1 * axis2.size + i2]
  std::size_t n1() const { return axis1.values.size(); }
  std::size_t n2() const { return axis2.values.size(); }
  const SweepCell& at(std::size_t i1, std::size_t i2) const { return cells[i1 * n2() + i2]; }
};

struct SweepOptions {
  int n_seeds = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool one_task = false;          // Fig.-5-style single-task variant
  bool entropy_after_task2 = false;
};

void apply_axis(ContinualProtocol& proto, const std::string& name, double value);

/// Runs run_two_task per cell with per-(cell, replica) derived seeds and
/// averages the recorded metrics over replicas. Cells are independent jobs;
/// the grid is bit-identical for a fixed seed regardless of parallelism.
SweepGrid sweep(const ContinualProtocol& tmpl, const AxisSpec& axis1, const AxisSpec& axis2,
                const SweepOptions& opts);

}  // namespace specdyn
