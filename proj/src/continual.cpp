#include "specdyn/continual.hpp"

#include <cmath>
#include <stdexcept>

#include "specdyn/parallel.hpp"

namespace specdyn {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

std::uint64_t cell_seed(std::uint64_t seed, std::size_t cell, int replica) {
  return derive_seed(seed, cell, static_cast<std::uint64_t>(replica));
}

}  // namespace

Eigen::VectorXd polar_readout(const PolarReadoutInit& init, int p, std::uint64_t seed) {
  if (!(init.r > 0.0)) throw std::invalid_argument("readout norm r must be > 0");
  if (p == 2) {
    Eigen::VectorXd h(2);
    h << init.r * std::cos(init.theta), init.r * std::sin(init.theta);
    return h;
  }
  Eigen::VectorXd h(p);
  Philox rng(derive_seed(seed, 0x9EADull, static_cast<std::uint64_t>(p)));
  GaussianTable::instance().fill(rng, h.data(), static_cast<std::size_t>(p));
  return h * (init.r / std::sqrt(static_cast<double>(p)));
}

EntropyReport entropy_measures(const Eigen::MatrixXd& q, const Eigen::VectorXd& h) {
  const int p = static_cast<int>(h.size());
  if (q.rows() != p || q.cols() != p)
    throw std::invalid_argument("Q and h dimensions disagree");
  double qsum = 0.0, hsum = 0.0;
  for (int i = 0; i < p; ++i) {
    if (q(i, i) < 0.0) throw std::invalid_argument("Q diagonal must be non-negative");
    qsum += q(i, i);
    hsum += std::abs(h(i));
  }
  if (qsum <= 0.0 || hsum <= 0.0)
    throw std::invalid_argument("all-zero input: entropies undefined");

  EntropyReport rep;
  for (int i = 0; i < p; ++i) {
    const double ht = std::abs(h(i)) / hsum;
    const double qt = q(i, i) / qsum;
    rep.h_h -= xlogx(ht);
    rep.h_q -= xlogx(qt);
    rep.h_m -= xlogx(qt * ht);
  }
  return rep;
}

double forgetting(const TwoTaskResult& result) {
  return result.eps1_final - result.eps1_end_task1;
}

Eigen::VectorXd node_norms(const OrderParams& op) {
  return op.q.diagonal().cwiseMax(0.0).cwiseSqrt();
}

namespace {

TwoTaskResult run_two_task_sgd(const ContinualProtocol& pr, const TeacherEnsemble& teachers,
                               const Eigen::VectorXd& h1, const Eigen::VectorXd& h2) {
  StudentNetwork student = make_student(pr.p, pr.d, pr.sigma_w, h1, h2, pr.seed);
  OnlineSgdSim sim(std::move(student), teachers, pr.activation, pr.eta, pr.seed);

  TwoTaskResult res;
  const long steps1 = std::lround(pr.tau1 * pr.d);
  const long steps2 = std::lround(pr.tau2 * pr.d);
  const long rec = std::max(1L, std::lround(pr.record_dtau * pr.d));
  const double inv_d = 1.0 / static_cast<double>(pr.d);

  auto record = [&](double tau) {
    res.tau.push_back(tau);
    res.eps1.push_back(sim.measured_eps(teachers, 1, pr.eval_samples));
    res.eps2.push_back(sim.measured_eps(teachers, 2, pr.eval_samples));
  };

  record(0.0);
  sim.run(1, steps1, rec, [&](long t) { record(t * inv_d); });

  res.op_end_task1 = order_params_from_weights(sim.student(), teachers);
  res.entropy_task1 = entropy_measures(res.op_end_task1.q, sim.student().h1);
  res.eps1_end_task1 = sim.measured_eps(teachers, 1, pr.eval_samples);

  if (pr.ewc && pr.ewc->xi != 0.0) {
    MatrixRM fisher = fisher_diagonal(sim.student(), teachers, 1, pr.ewc->fisher_samples,
                                      pr.seed, pr.ewc->model_fisher, pr.activation);
    if (pr.ewc->normalise) {
      const double fmax = fisher.maxCoeff();
      if (fmax > 0.0) fisher /= fmax;
    }
    sim.enable_ewc(fisher, sim.student().w, pr.ewc->xi);
  }

  sim.run(2, steps2, rec, [&](long t) { record(pr.tau1 + t * inv_d); });

  res.op_final = order_params_from_weights(sim.student(), teachers);
  res.entropy_task2 = entropy_measures(res.op_final.q, sim.student().h2);
  res.node_norms_final = node_norms(res.op_final);
  res.eps1_final = sim.measured_eps(teachers, 1, pr.eval_samples);
  res.eps2_final = sim.measured_eps(teachers, 2, pr.eval_samples);
  return res;
}

TwoTaskResult run_two_task_ode(const ContinualProtocol& pr, const TeacherEnsemble& teachers,
                               const Eigen::VectorXd& h1, const Eigen::VectorXd& h2) {
  if (pr.activation != Activation::ScaledErf)
    throw std::invalid_argument("mean-field ODE backend supports the scaled-error activation only");
  if (pr.ewc && pr.ewc->xi != 0.0)
    throw std::invalid_argument("EWC requires the finite-d SGD backend");

  OrderParams op0;
  if (pr.ode_sample_init) {
    op0 = order_params_from_weights(make_student(pr.p, pr.d, pr.sigma_w, h1, h2, pr.seed),
                                    teachers);
  } else {
    const double inv_d = 1.0 / static_cast<double>(pr.d);
    op0.q = pr.sigma_w * pr.sigma_w * Eigen::MatrixXd::Identity(pr.p, pr.p);
    op0.r1 = Eigen::MatrixXd::Zero(pr.p, pr.p_star);
    op0.r2 = Eigen::MatrixXd::Zero(pr.p, pr.p_star);
    op0.t11 = teachers.wt1 * teachers.wt1.transpose() * inv_d;
    op0.t12 = teachers.wt1 * teachers.wt2.transpose() * inv_d;
    op0.t22 = teachers.wt2 * teachers.wt2.transpose() * inv_d;
    op0.h1 = h1;
    op0.h2 = h2;
    op0.ht1 = teachers.ht1;
    op0.ht2 = teachers.ht2;
  }

  IntegrateResult first = integrate(op0, {{1, pr.tau1}}, pr.eta, pr.ode_dtau, pr.record_dtau);
  IntegrateResult second =
      integrate(first.final_op, {{2, pr.tau2}}, pr.eta, pr.ode_dtau, pr.record_dtau);

  TwoTaskResult res;
  res.tau = first.tau;
  res.eps1 = first.eps1;
  res.eps2 = first.eps2;
  for (std::size_t i = 1; i < second.tau.size(); ++i) {
    res.tau.push_back(pr.tau1 + second.tau[i]);
    res.eps1.push_back(second.eps1[i]);
    res.eps2.push_back(second.eps2[i]);
  }
  res.op_end_task1 = first.final_op;
  res.op_final = second.final_op;
  res.entropy_task1 = entropy_measures(res.op_end_task1.q, res.op_end_task1.h1);
  res.entropy_task2 = entropy_measures(res.op_final.q, res.op_final.h2);
  res.node_norms_final = node_norms(res.op_final);
  res.eps1_end_task1 = first.eps1.back();
  res.eps1_final = second.eps1.back();
  res.eps2_final = second.eps2.back();
  return res;
}

}  // namespace

TwoTaskResult run_two_task(const ContinualProtocol& pr) {
  if (!(pr.gamma >= 0.0 && pr.gamma <= 1.0))
    throw std::invalid_argument("gamma must lie in [0, 1]");
  if (pr.tau1 < 0.0 || pr.tau2 < 0.0)
    throw std::invalid_argument("training spans must be >= 0");

  TeacherEnsemble teachers = generate_teachers(pr.p_star, pr.d, pr.gamma, pr.seed);
  if (pr.force_identical_teachers) {
    teachers.wt2 = teachers.wt1;
    teachers.ht2 = teachers.ht1;
  }
  const Eigen::VectorXd h1 = polar_readout(pr.init1, pr.p, derive_seed(pr.seed, 0xA1ull));
  const Eigen::VectorXd h2 = polar_readout(pr.init2, pr.p, derive_seed(pr.seed, 0xA2ull));

  return pr.backend == Backend::Sgd ? run_two_task_sgd(pr, teachers, h1, h2)
                                    : run_two_task_ode(pr, teachers, h1, h2);
}

void apply_axis(ContinualProtocol& proto, const std::string& name, double value) {
  if (name == "gamma") {
    proto.gamma = value;
  } else if (name == "sigma_w") {
    proto.sigma_w = value;
  } else if (name == "log_sigma_w") {
    proto.sigma_w = std::pow(10.0, value);
  } else if (name == "r1") {
    proto.init1.r = value;
  } else if (name == "theta1") {
    proto.init1.theta = value;
  } else if (name == "r2") {
    proto.init2.r = value;
  } else if (name == "theta2") {
    proto.init2.theta = value;
  } else if (name == "xi") {
    if (!proto.ewc) proto.ewc = EWCOptions{};
    proto.ewc->xi = value;
  } else if (name == "none") {
    // singleton placeholder axis
  } else {
    throw std::invalid_argument("unknown sweep axis: " + name);
  }
}

SweepGrid sweep(const ContinualProtocol& tmpl, const AxisSpec& axis1, const AxisSpec& axis2,
                const SweepOptions& opts) {
  if (axis1.values.empty() || axis2.values.empty())
    throw std::invalid_argument("sweep axes must be non-empty");
  if (opts.n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");

  SweepGrid grid;
  grid.axis1 = axis1;
  grid.axis2 = axis2;
  const std::size_t n1 = grid.n1(), n2 = grid.n2();
  grid.cells.assign(n1 * n2, SweepCell{});

  parallel_for(static_cast<long>(n1 * n2), opts.jobs, [&](long idx) {
    const std::size_t i1 = static_cast<std::size_t>(idx) / n2;
    const std::size_t i2 = static_cast<std::size_t>(idx) % n2;
    SweepCell& cell = grid.cells[idx];
    cell.seed = cell_seed(opts.seed, static_cast<std::size_t>(idx), 0);
    try {
      for (int rep = 0; rep < opts.n_seeds; ++rep) {
        ContinualProtocol pr = tmpl;
        apply_axis(pr, axis1.name, axis1.values[i1]);
        apply_axis(pr, axis2.name, axis2.values[i2]);
        if (opts.one_task) pr.tau2 = 0.0;
        pr.seed = cell_seed(opts.seed, static_cast<std::size_t>(idx), rep);
        const TwoTaskResult r = run_two_task(pr);
        const EntropyReport& ent =
            opts.entropy_after_task2 ? r.entropy_task2 : r.entropy_task1;
        cell.h_h += ent.h_h;
        cell.h_q += ent.h_q;
        cell.h_m += ent.h_m;
        cell.forgetting += forgetting(r);
        cell.eps1_final += r.eps1_final;
        cell.eps2_final += r.eps2_final;
        cell.node_norm_0 += r.node_norms_final(0);
        if (r.node_norms_final.size() > 1) cell.node_norm_1 += r.node_norms_final(1);
      }
      const double inv = 1.0 / opts.n_seeds;
      cell.h_h *= inv;
      cell.h_q *= inv;
      cell.h_m *= inv;
      cell.forgetting *= inv;
      cell.eps1_final *= inv;
      cell.eps2_final *= inv;
      cell.node_norm_0 *= inv;
      cell.node_norm_1 *= inv;
      cell.valid = true;
    } catch (const std::exception& e) {
      cell.valid = false;
      cell.error = e.what();
    }
  });
  return grid;
}

}  // namespace specdyn
