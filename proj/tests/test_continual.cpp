#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "specdyn/continual.hpp"

using namespace specdyn;

namespace {

ContinualProtocol quick_protocol() {
  ContinualProtocol pr;
  pr.d = 2000;
  pr.p = 2;
  pr.p_star = 1;
  pr.gamma = 0.5;
  pr.sigma_w = 1e-2;
  pr.eta = 1.0;
  pr.init1 = {0.5, std::numbers::pi / 8};
  pr.init2 = {0.5, std::numbers::pi / 8};
  pr.tau1 = 10.0;
  pr.tau2 = 10.0;
  pr.record_dtau = 2.0;
  pr.seed = 7;
  return pr;
}

}  // namespace

TEST_CASE("entropy measures: frozen examples from the definitions") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd h(2);

  h << 1.0, 0.0;  // one-hot readout
  CHECK(entropy_measures(q, h).h_h == 0.0);

  h << 0.37, 0.37;  // equal magnitudes at any common scale
  CHECK(entropy_measures(q, h).h_h == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Eigen::MatrixXd q2(2, 2);
  q2 << 0.3, 0.0, 0.0, 0.7;
  h << 1.0, 1.0;
  const double expect = -(0.3 * std::log(0.3) + 0.7 * std::log(0.7));  // 0.6109
  CHECK(entropy_measures(q2, h).h_q == doctest::Approx(expect).epsilon(1e-12));
  CHECK(entropy_measures(q2, h).h_q == doctest::Approx(0.6109).epsilon(1e-3));

  // H_m with uniform Q and h reaches log 2; the product weights are used
  // verbatim (not renormalised)
  const EntropyReport uniform = entropy_measures(q, h);
  CHECK(uniform.h_m == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  Eigen::MatrixXd q3(2, 2);
  q3 << 0.6, 0.0, 0.0, 0.4;
  Eigen::VectorXd h3(2);
  h3 << 0.8, 0.2;
  const double m0 = 0.6 * 0.8, m1 = 0.4 * 0.2;
  const double hm = -(m0 * std::log(m0) + m1 * std::log(m1));
  CHECK(entropy_measures(q3, h3).h_m == doctest::Approx(hm).epsilon(1e-12));
}

TEST_CASE("entropy bounds and scale invariance hold on random inputs") {
  Philox rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int p = 2 + static_cast<int>(rng.next_u64() % 3);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd h(p);
    for (int i = 0; i < p; ++i) {
      q(i, i) = rng.next_double() + 1e-12;
      h(i) = standard_normal(rng);
    }
    if (h.cwiseAbs().sum() == 0.0) continue;
    const EntropyReport rep = entropy_measures(q, h);
    CHECK(rep.h_h >= 0.0);
    CHECK(rep.h_h <= std::log(static_cast<double>(p)) + 1e-12);
    CHECK(rep.h_q >= 0.0);
    CHECK(rep.h_q <= std::log(static_cast<double>(p)) + 1e-12);
    CHECK(rep.h_m >= 0.0);

    const double c = 0.1 + 5.0 * rng.next_double();
    const EntropyReport scaled = entropy_measures(c * c * q, (trial % 2 ? -c : c) * h);
    CHECK(scaled.h_h == doctest::Approx(rep.h_h).epsilon(1e-10));
    CHECK(scaled.h_q == doctest::Approx(rep.h_q).epsilon(1e-10));
    CHECK(scaled.h_m == doctest::Approx(rep.h_m).epsilon(1e-10));
  }
}

TEST_CASE("entropy rejects all-zero inputs") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(entropy_measures(q, h), std::invalid_argument);
}

TEST_CASE("polar readout: angle endpoints") {
  const Eigen::VectorXd one_hot = polar_readout({0.7, 0.0}, 2);
  CHECK(one_hot(0) == doctest::Approx(0.7));
  CHECK(one_hot(1) == 0.0);
  const Eigen::VectorXd sym = polar_readout({0.7, std::numbers::pi / 4}, 2);
  CHECK(sym(0) == doctest::Approx(sym(1)).epsilon(1e-12));
  CHECK(sym.norm() == doctest::Approx(0.7).epsilon(1e-12));
  // p > 2 falls back to Gaussian entries of matching scale
  const Eigen::VectorXd big = polar_readout({0.5, 0.0}, 6, 3);
  CHECK(big.size() == 6);
}

TEST_CASE("steps2 = 0 yields zero forgetting") {
  ContinualProtocol pr = quick_protocol();
  pr.tau2 = 0.0;
  const TwoTaskResult res = run_two_task(pr);
  CHECK(forgetting(res) == 0.0);
  CHECK(res.eps1_final == res.eps1_end_task1);
}

TEST_CASE("forced-identical tasks cannot interfere (SGD backend)") {
  ContinualProtocol pr = quick_protocol();
  pr.gamma = 1.0;
  pr.force_identical_teachers = true;
  pr.tau1 = 30.0;
  pr.tau2 = 30.0;
  const TwoTaskResult res = run_two_task(pr);
  CHECK(std::abs(forgetting(res)) < 1e-3);
}

TEST_CASE("forced-identical tasks cannot interfere (ODE backend)") {
  // the residual interference scales with how far task 1 sat from its
  // optimum, so the null needs a well-converged first task
  ContinualProtocol pr = quick_protocol();
  pr.backend = Backend::MeanfieldOde;
  pr.gamma = 1.0;
  pr.force_identical_teachers = true;
  pr.d = 4000;
  pr.tau1 = 300.0;
  pr.tau2 = 40.0;
  pr.record_dtau = 10.0;
  const TwoTaskResult res = run_two_task(pr);
  CHECK(std::abs(forgetting(res)) < 1e-6);
}

TEST_CASE("node norms come from the Q diagonal") {
  OrderParams op;
  op.q = Eigen::MatrixXd::Zero(2, 2);
  op.q(0, 0) = 4.0;
  op.q(1, 1) = 0.25;
  op.t11 = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::VectorXd norms = node_norms(op);
  CHECK(norms(0) == 2.0);
  CHECK(norms(1) == 0.5);
}

TEST_CASE("EWC: xi = 0 reproduces plain SGD exactly") {
  const int d = 500;
  TeacherEnsemble te = generate_teachers(1, d, 0.5, 201);
  Eigen::VectorXd h1(2), h2(2);
  h1 << 0.3, 0.1;
  h2 << 0.2, 0.1;
  StudentNetwork st = make_student(2, d, 0.1, h1, h2, 201);

  OnlineSgdSim plain(st, te, Activation::ScaledErf, 1.0, 201);
  plain.run(2, 400);

  OnlineSgdSim with_ewc(st, te, Activation::ScaledErf, 1.0, 201);
  const MatrixRM anchor = st.w;
  with_ewc.enable_ewc(MatrixRM::Ones(2, d), anchor, 0.0);
  with_ewc.run(2, 400);

  CHECK((plain.student().w - with_ewc.student().w).cwiseAbs().maxCoeff() == 0.0);
  CHECK((plain.student().h2 - with_ewc.student().h2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("EWC: over-regularisation pins the first layer while the free run walks away") {
  const int d = 2000;
  const std::uint64_t seed = 211;
  TeacherEnsemble te = generate_teachers(1, d, 0.5, seed);
  Eigen::VectorXd h1(2), h2(2);
  h1 << 0.5, 0.1;
  h2 << 0.3, 0.3;
  StudentNetwork st = make_student(2, d, 1e-2, h1, h2, seed);
  OnlineSgdSim sim(st, te, Activation::ScaledErf, 1.0, seed);
  sim.run(1, 30 * d);  // converge on task 1
  const double eps1_end = sim.measured_eps(te, 1);
  REQUIRE(eps1_end < 1e-3);

  const StudentNetwork snapshot = sim.student();
  const MatrixRM anchor = snapshot.w;
  const MatrixRM fisher = fisher_diagonal(snapshot, te, 1, 2000, seed);
  REQUIRE(fisher.minCoeff() >= 0.0);
  REQUIRE(fisher.maxCoeff() > 0.0);

  const double eps2_start = sim.measured_eps(te, 2);
  // over-regularised regime: normalised importance, unit contraction rate
  sim.enable_ewc(fisher / fisher.maxCoeff(), anchor, 1.0);
  sim.run(2, 10 * d);
  const double pinned_dist =
      std::sqrt((sim.student().w - anchor).squaredNorm() / anchor.size());
  const double pinned_eps1 = sim.measured_eps(te, 1);
  // pinned W cannot absorb task 2
  CHECK(sim.measured_eps(te, 2) > 0.2 * eps2_start);

  OnlineSgdSim free_sim(snapshot, te, Activation::ScaledErf, 1.0, seed);
  free_sim.run(2, 10 * d);
  const double free_dist =
      std::sqrt((free_sim.student().w - anchor).squaredNorm() / anchor.size());
  const double free_eps1 = free_sim.measured_eps(te, 1);

  CHECK(pinned_dist < 0.05 * free_dist);
  CHECK(pinned_eps1 < 0.01 * free_eps1);  // first task protected
}

TEST_CASE("sweep: a single cell reproduces run_two_task and is deterministic") {
  ContinualProtocol tmpl = quick_protocol();
  SweepOptions opts;
  opts.n_seeds = 1;
  opts.seed = 99;
  opts.jobs = 2;
  const AxisSpec ax1{"gamma", {0.3}};
  const AxisSpec ax2{"r2", {0.4}};
  const SweepGrid grid = sweep(tmpl, ax1, ax2, opts);
  REQUIRE(grid.cells.size() == 1);
  REQUIRE(grid.cells[0].valid);

  ContinualProtocol pr = tmpl;
  pr.gamma = 0.3;
  pr.init2.r = 0.4;
  pr.seed = grid.cells[0].seed;
  const TwoTaskResult direct = run_two_task(pr);
  CHECK(grid.cells[0].forgetting == forgetting(direct));
  CHECK(grid.cells[0].h_m == direct.entropy_task1.h_m);
  CHECK(grid.cells[0].eps2_final == direct.eps2_final);

  const SweepGrid again = sweep(tmpl, ax1, ax2, opts);
  CHECK(again.cells[0].forgetting == grid.cells[0].forgetting);  // bit-identical

  SweepOptions serial = opts;
  serial.jobs = 1;
  const SweepGrid serial_grid = sweep(tmpl, ax1, ax2, serial);
  CHECK(serial_grid.cells[0].forgetting == grid.cells[0].forgetting);
}

TEST_CASE("sweep applies axes and masks failing cells") {
  ContinualProtocol tmpl = quick_protocol();
  tmpl.tau1 = 1.0;
  tmpl.tau2 = 0.0;
  SweepOptions opts;
  opts.n_seeds = 1;
  opts.seed = 5;
  opts.jobs = 2;
  opts.one_task = true;
  const AxisSpec ax1{"log_sigma_w", {-3.0, -1.0}};
  const AxisSpec ax2{"theta1", {0.0, std::numbers::pi / 4}};
  const SweepGrid grid = sweep(tmpl, ax1, ax2, opts);
  CHECK(grid.cells.size() == 4);
  for (const auto& c : grid.cells) CHECK(c.valid);

  ContinualProtocol bad = tmpl;
  const AxisSpec axbad{"gamma", {0.5, 2.0}};  // 2.0 out of range
  const SweepGrid gbad = sweep(bad, axbad, ax2, opts);
  CHECK(gbad.at(0, 0).valid);
  CHECK_FALSE(gbad.at(1, 0).valid);
  CHECK(!gbad.at(1, 0).error.empty());
}

TEST_CASE("unknown sweep axis is rejected") {
  ContinualProtocol pr;
  CHECK_THROWS_AS(apply_axis(pr, "nonsense", 1.0), std::invalid_argument);
}
