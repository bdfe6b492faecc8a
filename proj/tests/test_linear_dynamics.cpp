#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <functional>
#include <vector>

#include "specdyn/linear_dynamics.hpp"
#include "specdyn/rng.hpp"

using namespace specdyn;

namespace {

/// Bisection root of f on [lo, hi] with f(lo), f(hi) of opposite sign.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double rel_tol = 1e-12) {
  double flo = f(lo);
  REQUIRE(flo * f(hi) <= 0.0);
  for (int it = 0; it < 200 && (hi - lo) > rel_tol * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (flo * fm <= 0.0)
      hi = mid;
    else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("derive_constants matches the direct K formula") {
  const DataStatistics stats(1.0, 1.0);
  const PathwayConfig cfg = PathwayConfig::from_init(0.01, 2.0, 1e-3);
  const DerivedConstants c = derive_constants(stats, cfg);
  CHECK(c.K == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(c.C > 0.0);
  CHECK(c.K >= 2.0 * stats.s);
  CHECK(c.K >= std::abs(cfg.lambda) * stats.d);
}

TEST_CASE("derive_constants rejects lambda = 0") {
  const DataStatistics stats(1.0, 1.0);
  PathwayConfig cfg = PathwayConfig::from_init(0.01, 2.0, 1e-3);
  cfg.lambda = 0.0;
  CHECK_THROWS_WITH_AS(derive_constants(stats, cfg),
                       doctest::Contains("zero-lambda"), std::domain_error);
}

TEST_CASE("omega at t = 0 recovers the initial condition (round trip through C)") {
  // (s=105, d=1, lambda=10, theta0 from a0=0.01): omega(0) = (lambda/2) sinh(theta0)
  const DataStatistics stats(105.0, 1.0);
  const PathwayConfig cfg = PathwayConfig::from_init(0.01, 10.0, 1e-5);
  const DerivedConstants c = derive_constants(stats, cfg);
  const double w0 = omega_of_t(stats, cfg, c, 0.0);
  CHECK(w0 == doctest::Approx(0.5 * cfg.lambda * std::sinh(cfg.theta0)).epsilon(1e-10));
  CHECK(w0 == doctest::Approx(cfg.omega0()).epsilon(1e-10));
}

TEST_CASE("omega converges to the fixed point s/d") {
  const DataStatistics stats(2.0, 1.0);
  const PathwayConfig cfg = PathwayConfig::from_init(0.05, 1.5, 1e-4);
  const DerivedConstants c = derive_constants(stats, cfg);
  CHECK(omega_of_t(stats, cfg, c, 1e7) == doctest::Approx(2.0).epsilon(1e-9));
  // overflow clamp region returns the asymptote exactly
  CHECK(omega_of_t(stats, cfg, c, 1e12) == 2.0);
}

TEST_CASE("closed form matches the GD oracle pointwise (s=1, lambda=2)") {
  const DataStatistics stats(1.0, 1.0);
  const double eta = 1e-3;
  const PathwayConfig cfg = PathwayConfig::from_init(0.01, 2.0, eta);
  const DerivedConstants c = derive_constants(stats, cfg);
  GdOptions opts;
  opts.record_every = 100;
  const Trajectory tr = simulate_pathway_gd(stats, {cfg.a0}, cfg.b0(), eta, 2000, opts);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double t = tr.times[i];
    if (t == 0.0) continue;
    const double cf = omega_of_t(stats, cfg, c, t);
    CHECK(std::abs(cf - tr.omega[i]) / std::abs(tr.omega[i]) < 1e-3);
  }
}

TEST_CASE("escaping and hitting times agree with a bisection oracle") {
  const DataStatistics stats(1.0, 1.0);
  const PathwayConfig cfg = PathwayConfig::from_init(0.01, 2.0, 1e-3);
  const DerivedConstants c = derive_constants(stats, cfg);
  Thresholds thr;
  thr.upsilon_escape = 0.1;
  thr.upsilon_hit = 0.05;

  const double that = escaping_time(stats, cfg, c, thr);
  const double oracle_hat = bisect(
      [&](double t) { return omega_of_t(stats, cfg, c, t) - thr.upsilon_escape; }, 0.0, 1e7);
  CHECK(std::abs(that - oracle_hat) / oracle_hat < 1e-6);

  const double tstar = hitting_time(stats, cfg, c, thr);
  const double oracle_star = bisect(
      [&](double t) {
        return stats.s / stats.d - omega_of_t(stats, cfg, c, t) - thr.upsilon_hit;
      },
      0.0, 1e7);
  CHECK(std::abs(tstar - oracle_star) / oracle_star < 1e-6);
  CHECK(tstar > that);
}

TEST_CASE("round trip: omega(escaping_time) = threshold to 1e-8 relative") {
  Philox rng(7);
  for (int done = 0; done < 20;) {
    const double s = 0.5 + 104.5 * rng.next_double();
    const double lam = 0.1 + 99.9 * rng.next_double();
    const double a0 = 1e-3 + (0.1 - 1e-3) * rng.next_double();
    if (a0 * std::sqrt(lam + a0 * a0) >= 0.25 * s) continue;  // thresholds unreachable
    ++done;
    const DataStatistics stats(s, 1.0);
    const PathwayConfig cfg = PathwayConfig::from_init(a0, lam, 1e-5);
    const DerivedConstants c = derive_constants(stats, cfg);
    Thresholds thr;
    thr.upsilon_escape = 0.5 * s;   // above omega0 for these ranges
    thr.upsilon_hit = 0.01 * s;
    REQUIRE(thr.upsilon_escape > cfg.omega0());
    const double that = escaping_time(stats, cfg, c, thr);
    const double tstar = hitting_time(stats, cfg, c, thr);
    // the functions self-check their postconditions; assert the round trip here too
    CHECK(std::abs(omega_of_t(stats, cfg, c, that) - thr.upsilon_escape) <
          1e-8 * std::max(1.0, thr.upsilon_escape));
    CHECK(std::abs(s - omega_of_t(stats, cfg, c, tstar) - thr.upsilon_hit) <
          1e-8 * std::max(1.0, thr.upsilon_hit));
    CHECK(tstar > that);
  }
}

TEST_CASE("escaping time decreases strictly with the imbalance at fixed theta0") {
  const DataStatistics stats(1.0, 1.0);
  Thresholds thr;
  thr.upsilon_escape = 0.1;
  double prev = 1e300;
  for (double lam : {1.0, 2.0, 4.0, 8.0}) {
    PathwayConfig cfg;
    cfg.a0 = 0.01;
    cfg.lambda = lam;
    cfg.tau = 1e3;
    cfg.theta0 = 0.01;  // shared initial angle across the family
    const DerivedConstants c = derive_constants(stats, cfg);
    const double that = escaping_time(stats, cfg, c, thr);
    CHECK(that < prev);
    prev = that;
  }
}

TEST_CASE("theta_rate is the derivative of the closed-form angle") {
  const DataStatistics stats(1.0, 1.0);
  const PathwayConfig cfg = PathwayConfig::from_init(0.01, 2.0, 1e-3);
  const DerivedConstants c = derive_constants(stats, cfg);
  auto theta_of = [&](double t) {
    return std::asinh(2.0 * omega_of_t(stats, cfg, c, t) / cfg.lambda);
  };
  const double t0 = 1.0, h = 1e-2;
  const double fd = (theta_of(t0 + h) - theta_of(t0 - h)) / (2.0 * h);
  const double rate = theta_rate(stats, cfg.lambda, theta_of(t0)) / cfg.tau;
  CHECK(fd == doctest::Approx(rate).epsilon(1e-6));
  // stationary point: sinh(theta) = 2s / (lambda d)
  const double theta_inf = std::asinh(2.0 * stats.s / (cfg.lambda * stats.d));
  CHECK(theta_rate(stats, cfg.lambda, theta_inf) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("weight-space point satisfies the hyperbolic identity") {
  for (double lam : {0.5, 2.0, 17.0}) {
    for (double theta : {0.0, 0.3, 2.0, -1.2}) {
      const auto [wbar, hbar] = weight_space_point(lam, theta);
      CHECK(hbar * hbar - wbar * wbar == doctest::Approx(lam).epsilon(1e-12));
      CHECK(wbar * hbar == doctest::Approx(0.5 * lam * std::sinh(theta)).epsilon(1e-12));
    }
  }
  const auto [w0, h0] = weight_space_point(3.0, 0.0);
  CHECK(w0 == 0.0);
  CHECK(h0 == doctest::Approx(std::sqrt(3.0)));
  CHECK_THROWS_AS(weight_space_point(-1.0, 0.1), std::domain_error);
}

TEST_CASE("weight-space trajectory traces omega via the product") {
  const DataStatistics stats(1.0, 1.0);
  const PathwayConfig cfg = PathwayConfig::from_init(0.01, 2.0, 1e-3);
  const DerivedConstants c = derive_constants(stats, cfg);
  for (double t : {0.0, 50.0, 500.0, 5000.0}) {
    const double om = omega_of_t(stats, cfg, c, t);
    const double theta = std::asinh(2.0 * om / cfg.lambda);
    const auto [wbar, hbar] = weight_space_point(cfg.lambda, theta);
    CHECK(std::abs(wbar * hbar - om) < 1e-8 * std::max(1.0, std::abs(om)));
  }
}

TEST_CASE("GD conserves the imbalance") {
  const DataStatistics stats(1.0, 1.0);
  const double eta = 1e-5;
  for (double lam : {0.5, 1.0, 2.0, 4.0}) {
    const PathwayConfig cfg = PathwayConfig::from_init(0.1, lam, eta);
    std::vector<double> w{cfg.a0};
    const double h0 = cfg.b0();
    const double lam0 = imbalance(w, h0);
    GdOptions opts;
    GdEndState end;
    opts.record_every = 10000;
    opts.end_state = &end;
    simulate_pathway_gd(stats, w, h0, eta, 10000, opts);
    CHECK(std::abs(imbalance(end.w, end.h) - lam0) < 1e-6 * std::max(1.0, std::abs(lam0)));
  }
}

TEST_CASE("zero initial weights at lambda = 0 stay at the saddle") {
  const DataStatistics stats(1.0, 1.0);
  Trajectory tr = simulate_pathway_gd(stats, {0.0}, 0.0, 1e-3, 1000);
  for (double om : tr.omega) CHECK(om == 0.0);
}

TEST_CASE("GD oracle matches the closed form across a random grid (scale-relative)") {
  Philox rng(11);
  const double eta = 1e-5;
  for (int done = 0; done < 6;) {
    const double s = 0.5 + 104.5 * rng.next_double();
    const double lam = 0.1 + 99.9 * rng.next_double();
    const double a0 = 1e-3 + (0.1 - 1e-3) * rng.next_double();
    if (a0 * std::sqrt(lam + a0 * a0) >= 0.25 * s) continue;
    ++done;
    const DataStatistics stats(s, 1.0);
    const PathwayConfig cfg = PathwayConfig::from_init(a0, lam, eta);
    const DerivedConstants c = derive_constants(stats, cfg);
    const PathwayDynamics dyn(stats, a0, lam, eta);
    const double tstar = dyn.hitting_time(0.01 * s);
    const long steps = static_cast<long>(std::min(tstar, 2e5));
    GdOptions opts;
    opts.record_every = std::max(1L, steps / 32);
    const Trajectory tr = simulate_pathway_gd(stats, {a0}, cfg.b0(), eta, steps, opts);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const double cf = omega_of_t(stats, cfg, c, tr.times[i]);
      CHECK(std::abs(cf - tr.omega[i]) / (s / stats.d) < 1e-3);
    }
  }
}

TEST_CASE("PathwayDynamics logistic branch: closed form vs GD at lambda = 0") {
  const DataStatistics stats(2.0, 1.0);
  const double a0 = 0.05, eta = 1e-4;
  const PathwayDynamics dyn(stats, a0, 0.0, eta);
  CHECK(dyn.logistic_branch());
  CHECK(dyn.omega0() == doctest::Approx(a0 * a0));
  GdOptions opts;
  opts.record_every = 2000;
  const Trajectory tr = simulate_pathway_gd(stats, {a0}, a0, eta, 60000, opts);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    CHECK(std::abs(dyn.omega(tr.times[i]) - tr.omega[i]) / (stats.s / stats.d) < 1e-3);
  }
  // escape/hit round trip on the logistic branch
  const double that = dyn.escaping_time(0.3);
  CHECK(dyn.omega(that) == doctest::Approx(0.3).epsilon(1e-10));
  const double tstar = dyn.hitting_time(0.05);
  CHECK(stats.s / stats.d - dyn.omega(tstar) == doctest::Approx(0.05).epsilon(1e-8));
  CHECK(dyn.escaping_time(5.0) == std::numeric_limits<double>::infinity());
}

TEST_CASE("escaping threshold below omega(0) and unreachable thresholds are errors") {
  const DataStatistics stats(1.0, 1.0);
  const PathwayConfig cfg = PathwayConfig::from_init(0.1, 2.0, 1e-3);
  const DerivedConstants c = derive_constants(stats, cfg);
  Thresholds thr;
  thr.upsilon_escape = 0.5 * cfg.omega0();
  CHECK_THROWS_AS(escaping_time(stats, cfg, c, thr), std::domain_error);
  thr.upsilon_escape = 2.0;  // above s/d = 1: unreachable
  CHECK_THROWS_WITH_AS(escaping_time(stats, cfg, c, thr),
                       doctest::Contains("negative-log-argument"), std::domain_error);
}

TEST_CASE("GD divergence guard triggers on unstable learning rates") {
  const DataStatistics stats(105.0, 1.0);
  CHECK_THROWS_WITH_AS(simulate_pathway_gd(stats, {0.5}, 10.0, 0.5, 10000),
                       doctest::Contains("divergence"), std::domain_error);
}
