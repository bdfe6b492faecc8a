#include "specdyn/linear_dynamics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace specdyn {

namespace {

constexpr double kZeroLambdaTol = 1e-12;
constexpr double kDegenerateTol = 1e-12;
constexpr double kExpClamp = 700.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

[[noreturn]] void fail(const char* kind, const std::string& what) {
  throw std::domain_error(std::string(kind) + ": " + what);
}

}  // namespace

DataStatistics::DataStatistics(double s_, double d_) : s(s_), d(d_), whitened(d_ == 1.0) {
  if (!(s >= 0.0)) fail("invalid-statistics", "s must be >= 0");
  if (!(d > 0.0)) fail("invalid-statistics", "d must be > 0");
}

PathwayConfig PathwayConfig::from_init(double a0, double lambda, double eta) {
  if (!(a0 > 0.0)) fail("invalid-config", "a0 must be > 0");
  if (!(eta > 0.0)) fail("invalid-config", "eta must be > 0");
  if (!(lambda + a0 * a0 > 0.0)) fail("invalid-config", "lambda + a0^2 must be > 0");
  PathwayConfig cfg;
  cfg.a0 = a0;
  cfg.lambda = lambda;
  cfg.tau = 1.0 / eta;
  cfg.theta0 = std::abs(lambda) < kZeroLambdaTol
                   ? 0.0
                   : std::asinh(2.0 * a0 * cfg.b0() / lambda);
  return cfg;
}

double PathwayConfig::b0() const { return std::sqrt(lambda + a0 * a0); }

double PathwayConfig::omega0() const { return a0 * b0(); }

DerivedConstants derive_constants(const DataStatistics& stats, const PathwayConfig& cfg) {
  if (std::abs(cfg.lambda) < kZeroLambdaTol)
    fail("zero-lambda", "Eq. for omega(t) degenerates; use the logistic branch");
  if (!std::isfinite(cfg.theta0)) fail("invalid-config", "theta0 must be finite");

  const double K = std::sqrt(4.0 * stats.s * stats.s + cfg.lambda * cfg.lambda * stats.d * stats.d);
  const double th = 2.0 * stats.s * std::tanh(0.5 * cfg.theta0);
  const double num = std::abs(th + K + cfg.lambda * stats.d);
  const double den = std::abs(th - K + cfg.lambda * stats.d);
  if (den < kDegenerateTol)
    fail("degenerate-denominator", "initial angle sits at the fixed point");
  return {K, num / den};
}

double omega_of_t(const DataStatistics& stats, const PathwayConfig& cfg,
                  const DerivedConstants& consts, double t) {
  if (!(t >= 0.0)) fail("invalid-argument", "t must be >= 0");
  if (std::abs(cfg.lambda) < kZeroLambdaTol)
    fail("zero-lambda", "use the logistic branch");

  const double expo = sgn(cfg.lambda) * consts.K * t / cfg.tau;
  if (expo > kExpClamp) return stats.s / stats.d;  // exact asymptote
  const double e = consts.C * std::exp(expo);
  const double arg =
      (consts.K * (e - 1.0) - cfg.lambda * stats.d * (e + 1.0)) / (2.0 * stats.s * (e + 1.0));
  if (std::abs(arg) >= 1.0)
    fail("domain", "tanh^-1 argument out of range; constants inconsistent with inputs");
  // (lambda/2) * sinh(2 atanh(arg)) == lambda * arg / (1 - arg^2)
  return cfg.lambda * arg / (1.0 - arg * arg);
}

namespace {

/// Shared closed form for escaping/hitting times: time at which
/// tanh(theta(t)/2) reaches the given target constant T.
double crossing_time(const DataStatistics& stats, const PathwayConfig& cfg,
                     const DerivedConstants& consts, double target_tanh) {
  const double s = stats.s, d = stats.d, lam = cfg.lambda;
  const double num = consts.K + 2.0 * s * target_tanh + lam * d;
  const double den = consts.C * (consts.K - 2.0 * s * target_tanh - lam * d);
  if (!(num > 0.0) || !(den > 0.0))
    fail("negative-log-argument", "threshold unreachable from this initialisation");
  return cfg.tau / (sgn(lam) * consts.K) * std::log(num / den);
}

}  // namespace

namespace {

/// omega(0) as implied by theta0 (authoritative when theta0 was set directly).
double initial_omega(const PathwayConfig& cfg) {
  if (std::abs(cfg.lambda) < kZeroLambdaTol) return cfg.a0 * cfg.a0;
  return 0.5 * cfg.lambda * std::sinh(cfg.theta0);
}

}  // namespace

double escaping_time(const DataStatistics& stats, const PathwayConfig& cfg,
                     const DerivedConstants& consts, const Thresholds& thr) {
  if (std::abs(cfg.lambda) < kZeroLambdaTol) fail("zero-lambda", "use the logistic branch");
  const double ups = thr.upsilon_escape;
  if (!(ups > initial_omega(cfg)))
    fail("invalid-argument", "escaping threshold must exceed omega(0)");
  const double that = crossing_time(
      stats, cfg, consts, std::tanh(0.5 * std::asinh(2.0 * ups / cfg.lambda)));
  const double check = omega_of_t(stats, cfg, consts, that);
  if (std::abs(check - ups) > 1e-8 * std::max(1.0, ups))
    throw std::runtime_error("postcondition: omega(escaping_time) != upsilon_escape");
  return that;
}

double hitting_time(const DataStatistics& stats, const PathwayConfig& cfg,
                    const DerivedConstants& consts, const Thresholds& thr) {
  if (std::abs(cfg.lambda) < kZeroLambdaTol) fail("zero-lambda", "use the logistic branch");
  const double ups = thr.upsilon_hit;
  if (!(ups < stats.s / stats.d - initial_omega(cfg)))
    fail("invalid-argument", "hitting threshold must be below s/d - omega(0)");
  const double tstar = crossing_time(
      stats, cfg, consts,
      std::tanh(0.5 * std::asinh((2.0 * stats.s - 2.0 * stats.d * ups) /
                                 (cfg.lambda * stats.d))));
  const double check = stats.s / stats.d - omega_of_t(stats, cfg, consts, tstar);
  if (std::abs(check - ups) > 1e-8 * std::max(1.0, ups))
    throw std::runtime_error("postcondition: s/d - omega(hitting_time) != upsilon_hit");
  return tstar;
}

double theta_rate(const DataStatistics& stats, double lambda, double theta) {
  if (std::abs(lambda) < kZeroLambdaTol) fail("zero-lambda", "theta is undefined at lambda = 0");
  return sgn(lambda) * (2.0 * stats.s - lambda * stats.d * std::sinh(theta));
}

std::pair<double, double> weight_space_point(double lambda, double theta) {
  if (!(lambda > 0.0))
    fail("negative-lambda", "hyperbolic coordinates cover lambda > 0 only");
  const double rt = std::sqrt(lambda);
  return {rt * std::sinh(0.5 * theta), rt * std::cosh(0.5 * theta)};
}

double imbalance(const std::vector<double>& w, double h) {
  double ww = 0.0;
  for (double wi : w) ww += wi * wi;
  return h * h - ww;
}

Trajectory simulate_pathway_gd(const DataStatistics& stats, const std::vector<double>& w0,
                               double h0, double eta, long steps, const GdOptions& opts) {
  if (w0.empty()) fail("invalid-argument", "w0 must be non-empty");
  if (opts.substeps < 1) fail("invalid-argument", "substeps must be >= 1");
  const double s = stats.s, d = stats.d;
  const double bound = 1e3 * s / d;
  const double dt_eta = eta / opts.substeps;

  std::vector<double> w = w0;
  double h = h0;
  Trajectory out;
  const long rec = std::max(opts.record_every, 1L);
  out.times.reserve(static_cast<std::size_t>(steps / rec) + 2);

  auto record = [&](long t) {
    const double om = h * w[0];
    out.times.push_back(static_cast<double>(t));
    out.omega.push_back(om);
    out.loss.push_back(0.5 * (s - om * d) * (s - om * d) / d);
  };

  record(0);
  for (long t = 1; t <= steps; ++t) {
    for (int sub = 0; sub < opts.substeps; ++sub) {
      // tau dw/dt = h (s e0 - h w d), tau dh/dt = s w0 - h d |w|^2
      const double r0 = s - h * w[0] * d;
      double ww = 0.0;
      for (double wi : w) ww += wi * wi;
      const double dh = dt_eta * (s * w[0] - h * d * ww);
      w[0] += dt_eta * h * r0;
      for (std::size_t j = 1; j < w.size(); ++j) w[j] -= dt_eta * h * h * d * w[j];
      h += dh;
    }
    if (std::abs(h * w[0]) > bound)
      fail("divergence", "omega exceeded 1e3 * s/d at step " + std::to_string(t));
    if (t % rec == 0 || t == steps) record(t);
  }
  if (opts.end_state) {
    opts.end_state->w = w;
    opts.end_state->h = h;
  }
  return out;
}

// --- PathwayDynamics ---

PathwayDynamics::PathwayDynamics(const DataStatistics& stats, double a0, double lambda,
                                 double eta)
    : stats_(stats), cfg_(PathwayConfig::from_init(a0, lambda, eta)) {
  logistic_ = std::abs(lambda) < kZeroLambdaTol;
  omega0_ = cfg_.omega0();
  if (!logistic_) consts_ = derive_constants(stats_, cfg_);
}

const DerivedConstants& PathwayDynamics::constants() const {
  if (logistic_) fail("zero-lambda", "no hyperbolic constants on the logistic branch");
  return consts_;
}

double PathwayDynamics::omega(double t) const {
  if (!logistic_) return omega_of_t(stats_, cfg_, consts_, t);
  const double f = stats_.s / stats_.d;
  const double e = std::exp(-std::min(2.0 * stats_.s * t / cfg_.tau, kExpClamp));
  return f * omega0_ / (omega0_ + (f - omega0_) * e);
}

double PathwayDynamics::escaping_time(double ups) const {
  if (!logistic_) {
    Thresholds thr;
    thr.upsilon_escape = ups;
    if (consts_.K - 2.0 * stats_.s * std::tanh(0.5 * std::asinh(2.0 * ups / cfg_.lambda)) -
            cfg_.lambda * stats_.d <=
        0.0)
      return kInf;
    return specdyn::escaping_time(stats_, cfg_, consts_, thr);
  }
  const double f = stats_.s / stats_.d;
  if (ups >= f) return kInf;
  return cfg_.tau / (2.0 * stats_.s) *
         std::log(ups * (f - omega0_) / (omega0_ * (f - ups)));
}

double PathwayDynamics::hitting_time(double ups) const {
  const double f = stats_.s / stats_.d;
  if (ups >= f - omega0_) return 0.0;
  if (!logistic_) {
    Thresholds thr;
    thr.upsilon_hit = ups;
    return specdyn::hitting_time(stats_, cfg_, consts_, thr);
  }
  return cfg_.tau / (2.0 * stats_.s) *
         std::log((f - ups) * (f - omega0_) / (omega0_ * ups));
}

double PathwayDynamics::escape_time_from_state(double lambda, double state, double s_eff,
                                               double d, double tau, double upsilon) {
  if (std::abs(lambda) < kZeroLambdaTol) {
    const double om = state;
    if (om >= upsilon) return 0.0;
    const double f = s_eff / d;
    if (upsilon >= f) return kInf;
    return tau / (2.0 * s_eff) * std::log(upsilon * (f - om) / (om * (f - upsilon)));
  }
  const double om = 0.5 * lambda * std::sinh(state);
  if (om >= upsilon) return 0.0;
  const double K = std::sqrt(4.0 * s_eff * s_eff + lambda * lambda * d * d);
  const double target = std::tanh(0.5 * std::asinh(2.0 * upsilon / lambda));
  const double denfac = K - 2.0 * s_eff * target - lambda * d;
  if (denfac <= 0.0) return kInf;  // upsilon at or above the fixed point s_eff/d

  const double th = 2.0 * s_eff * std::tanh(0.5 * state);
  const double cden = std::abs(th - K + lambda * d);
  if (cden < kDegenerateTol) return 0.0;  // state at the instantaneous fixed point
  const double c = std::abs(th + K + lambda * d) / cden;
  return tau / (sgn(lambda) * K) *
         std::log((K + 2.0 * s_eff * target + lambda * d) / (c * denfac));
}

}  // namespace specdyn
