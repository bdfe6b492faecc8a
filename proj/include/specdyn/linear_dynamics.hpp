#pragma once

#include <cstdint>
#include <vector>

namespace specdyn {

/// Singular-value summary of the rank-1 regression task: s is the only
/// nonzero singular value of the input-output correlation matrix, d the
/// input correlation singular value along the shared direction.
struct DataStatistics {
  double s = 1.0;
  double d = 1.0;
  bool whitened = true;

  DataStatistics() = default;
  DataStatistics(double s_, double d_);
};

/// One linear pathway: first-layer scale a0, conserved imbalance
/// lambda = h^2 - w.w, the derived hyperbolic angle theta0 and the learning
/// time constant tau = 1/eta. For lambda == 0 theta0 is not defined and the
/// logistic branch of the dynamics applies (see PathwayDynamics).
struct PathwayConfig {
  double a0 = 0.01;
  double lambda = 2.0;
  double theta0 = 0.0;
  double tau = 1e5;

  static PathwayConfig from_init(double a0, double lambda, double eta);

  /// Initial second-layer scale b0 = sqrt(lambda + a0^2).
  double b0() const;
  /// Initial effective singular value omega(0) = a0 * b0.
  double omega0() const;
};

struct DerivedConstants {
  double K = 0.0;
  double C = 0.0;
};

/// Escaping / hitting thresholds; both must sit strictly below the fixed
/// point s/d to be reachable.
struct Thresholds {
  double upsilon_escape = 5.0;
  double upsilon_hit = 1.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> omega;
  std::vector<double> loss;  // optional; empty when not recorded
};

// --- closed-form operations (lambda != 0 branch) ---

DerivedConstants derive_constants(const DataStatistics& stats, const PathwayConfig& cfg);

double omega_of_t(const DataStatistics& stats, const PathwayConfig& cfg,
                  const DerivedConstants& consts, double t);

double escaping_time(const DataStatistics& stats, const PathwayConfig& cfg,
                     const DerivedConstants& consts, const Thresholds& thr);

double hitting_time(const DataStatistics& stats, const PathwayConfig& cfg,
                    const DerivedConstants& consts, const Thresholds& thr);

/// sgn(lambda) * (2s - lambda*d*sinh(theta)); multiply by 1/tau for dtheta/dt.
/// With s shifted to s - omega_fast(t) this is the coupled slow-pathway rate.
double theta_rate(const DataStatistics& stats, double lambda, double theta);

/// Hyperbolic weight-space coordinates (wbar, hbar); requires lambda > 0.
std::pair<double, double> weight_space_point(double lambda, double theta);

struct GdEndState {
  std::vector<double> w;
  double h = 0.0;
};

struct GdOptions {
  long record_every = 1;
  int substeps = 1;             // internal steps per epoch at rate eta/substeps
  GdEndState* end_state = nullptr;  // final weights, for conservation checks
};

/// Full-batch gradient descent on the quadratic loss in the aligned basis;
/// the oracle for every closed-form operation. w0 must be parallel to the
/// task's right singular vector (component 0) for the closed form to apply.
Trajectory simulate_pathway_gd(const DataStatistics& stats, const std::vector<double>& w0,
                               double h0, double eta, long steps, const GdOptions& opts = {});

/// Imbalance h^2 - w.w of a weight configuration.
double imbalance(const std::vector<double>& w, double h);

/**
 * Branch-dispatching view of one pathway's closed-form dynamics.
 *
 * For lambda != 0 this wraps Eq.-style hyperbolic solutions; at lambda == 0
 * those degenerate and the balanced logistic solution
 * tau * domega/dt = 2 omega (s - omega d) is used instead. Escape and
 * hitting queries return +inf when the threshold is unreachable.
 */
class PathwayDynamics {
 public:
  PathwayDynamics(const DataStatistics& stats, double a0, double lambda, double eta);

  double omega(double t) const;
  double escaping_time(double upsilon_escape) const;
  double hitting_time(double upsilon_hit) const;

  double omega0() const { return omega0_; }
  bool logistic_branch() const { return logistic_; }
  const DerivedConstants& constants() const;  // throws on the logistic branch

  /// Remaining time until omega reaches upsilon from the given state under a
  /// frozen effective singular value s_eff. State is theta for lambda != 0,
  /// omega itself for lambda == 0. Returns +inf when unreachable, 0 when the
  /// state already sits at or above upsilon.
  static double escape_time_from_state(double lambda, double state, double s_eff, double d,
                                       double tau, double upsilon);

 private:
  DataStatistics stats_;
  PathwayConfig cfg_;
  DerivedConstants consts_{};
  double omega0_ = 0.0;
  bool logistic_ = false;
};

}  // namespace specdyn
