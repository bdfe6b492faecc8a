#include "specdyn/race_phase.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "specdyn/parallel.hpp"

namespace specdyn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroLambdaTol = 1e-12;
}  // namespace

double coupled_min_escape(double s, double a0, double lambda1, double lambda2, double eta,
                          const Thresholds& thr, int substeps) {
  if (!(lambda1 >= lambda2))
    throw std::invalid_argument("masked: lambda1 < lambda2 (Algorithm break branch)");
  if (!(lambda2 >= 0.0)) throw std::invalid_argument("lambda2 must be >= 0");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");

  const DataStatistics stats(s, 1.0);
  const double tau = 1.0 / eta;
  const PathwayDynamics fast(stats, a0, lambda1, eta);
  const double t1_star = fast.hitting_time(thr.upsilon_hit);
  if (!std::isfinite(t1_star))
    throw std::domain_error("negative-log-argument: fast pathway never hits");

  const bool slow_logistic = std::abs(lambda2) < kZeroLambdaTol;
  const PathwayConfig slow_cfg = PathwayConfig::from_init(a0, lambda2, eta);
  // state: theta2 on the hyperbolic branch, omega2 on the logistic one
  double state = slow_logistic ? slow_cfg.omega0() : slow_cfg.theta0;

  const long epochs = static_cast<long>(std::floor(t1_star));
  const double dt = 1.0 / substeps;
  double gap = kInf;

  for (long t = 0; t <= epochs; ++t) {
    const double s_eff = s - fast.omega(static_cast<double>(t));
    gap = std::min(gap, PathwayDynamics::escape_time_from_state(
                            lambda2, state, s_eff, 1.0, tau, thr.upsilon_escape));
    if (gap <= 0.0) return 0.0;
    for (int sub = 0; sub < substeps; ++sub) {
      const double se = substeps == 1
                            ? s_eff
                            : s - fast.omega(static_cast<double>(t) + sub * dt);
      if (slow_logistic) {
        state += dt / tau * 2.0 * state * (se - state);
      } else {
        state += dt / tau * theta_rate(DataStatistics(se, 1.0), lambda2, state);
      }
    }
    if (!slow_logistic && std::abs(state) > 50.0)
      throw std::runtime_error("integration-instability: theta2 left [-50, 50]");
  }
  return std::max(gap, 0.0);
}

PhaseGrid build_phase_grid(const RaceConfig& cfg, int jobs) {
  if (cfg.lambda1_grid.empty() || cfg.lambda2_grid.empty())
    throw std::invalid_argument("grids must be non-empty");
  if (!(cfg.a0 > 0.0)) throw std::invalid_argument("a0 must be > 0");

  PhaseGrid grid;
  grid.lambda1_values = cfg.lambda1_grid;
  grid.lambda2_values = cfg.lambda2_grid;
  const std::size_t n1 = grid.n1(), n2 = grid.n2();
  grid.min_escape_gap.assign(n1 * n2, std::numeric_limits<double>::quiet_NaN());
  grid.valid.assign(n1 * n2, 0);
  std::vector<std::string> errors(n1 * n2);

  parallel_for(static_cast<long>(n1 * n2), jobs, [&](long idx) {
    const std::size_t i1 = static_cast<std::size_t>(idx) / n2;
    const std::size_t i2 = static_cast<std::size_t>(idx) % n2;
    const double l1 = grid.lambda1_values[i1];
    const double l2 = grid.lambda2_values[i2];
    if (l1 < l2) return;  // masked: the algorithm's break branch
    try {
      grid.min_escape_gap[idx] =
          coupled_min_escape(cfg.s, cfg.a0, l1, l2, cfg.eta, cfg.thresholds, cfg.substeps);
      grid.valid[idx] = 1;
    } catch (const std::exception& e) {
      errors[idx] = std::to_string(i1) + "," + std::to_string(i2) + ": " + e.what();
    }
  });

  for (auto& e : errors)
    if (!e.empty()) grid.cell_errors.push_back(std::move(e));
  return grid;
}

std::pair<Trajectory, Trajectory> simulate_two_pathway_gd(double s, double a0, double lambda1,
                                                          double lambda2, double eta, long steps,
                                                          long record_every) {
  if (!(a0 > 0.0)) throw std::invalid_argument("a0 must be > 0");
  const double bound = 1e3 * s;
  double w1 = a0, h1 = std::sqrt(lambda1 + a0 * a0);
  double w2 = a0, h2 = std::sqrt(lambda2 + a0 * a0);

  Trajectory tr1, tr2;
  const long rec = std::max(record_every, 1L);
  auto record = [&](long t) {
    const double o1 = h1 * w1, o2 = h2 * w2;
    const double r = s - o1 - o2;
    tr1.times.push_back(static_cast<double>(t));
    tr1.omega.push_back(o1);
    tr1.loss.push_back(0.5 * r * r);
    tr2.times.push_back(static_cast<double>(t));
    tr2.omega.push_back(o2);
    tr2.loss.push_back(0.5 * r * r);
  };

  record(0);
  for (long t = 1; t <= steps; ++t) {
    const double r = s - h1 * w1 - h2 * w2;
    const double nw1 = w1 + eta * h1 * r, nh1 = h1 + eta * w1 * r;
    const double nw2 = w2 + eta * h2 * r, nh2 = h2 + eta * w2 * r;
    w1 = nw1;
    h1 = nh1;
    w2 = nw2;
    h2 = nh2;
    if (std::abs(h1 * w1) > bound || std::abs(h2 * w2) > bound)
      throw std::domain_error("divergence: omega exceeded 1e3 * s/d");
    if (t % rec == 0 || t == steps) record(t);
  }
  return {tr1, tr2};
}

}  // namespace specdyn
