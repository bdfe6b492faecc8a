#include "specdyn/meanfield.hpp"

#include <cmath>
#include <stdexcept>

namespace specdyn {

namespace {

void fill_gaussian(MatrixRM& m, Philox& rng) {
  GaussianTable::instance().fill(rng, m.data(), static_cast<std::size_t>(m.size()));
}

void fill_gaussian(Eigen::VectorXd& v, Philox& rng) {
  GaussianTable::instance().fill(rng, v.data(), static_cast<std::size_t>(v.size()));
}

/// Indices and signed readout coefficients of the units entering the task-t
/// residual Delta = h.phi(lambda) - hT.phi(rho^t), as positions into the
/// joint covariance ordering (lambda, rho^1, rho^2).
struct ResidualUnits {
  std::vector<int> idx;
  std::vector<double> coef;
};

ResidualUnits residual_units(const OrderParams& op, int task) {
  const int p = op.p(), ps = op.p_star();
  const Eigen::VectorXd& h = task == 1 ? op.h1 : op.h2;
  const Eigen::VectorXd& ht = task == 1 ? op.ht1 : op.ht2;
  const int rho_off = task == 1 ? p : p + ps;
  ResidualUnits u;
  u.idx.reserve(p + ps);
  u.coef.reserve(p + ps);
  for (int i = 0; i < p; ++i) {
    u.idx.push_back(i);
    u.coef.push_back(h(i));
  }
  for (int n = 0; n < ps; ++n) {
    u.idx.push_back(rho_off + n);
    u.coef.push_back(-ht(n));
  }
  return u;
}

Eigen::Matrix2d sub2(const Eigen::MatrixXd& m, int a, int b) {
  Eigen::Matrix2d s;
  s << m(a, a), m(a, b), m(b, a), m(b, b);
  return s;
}

Eigen::Matrix3d sub3(const Eigen::MatrixXd& m, int a, int b, int c) {
  Eigen::Matrix3d s;
  s << m(a, a), m(a, b), m(a, c), m(b, a), m(b, b), m(b, c), m(c, a), m(c, b), m(c, c);
  return s;
}

Eigen::Matrix4d sub4(const Eigen::MatrixXd& m, int a, int b, int c, int e) {
  Eigen::Matrix4d s;
  s << m(a, a), m(a, b), m(a, c), m(a, e),
       m(b, a), m(b, b), m(b, c), m(b, e),
       m(c, a), m(c, b), m(c, c), m(c, e),
       m(e, a), m(e, b), m(e, c), m(e, e);
  return s;
}

void check_task(int task) {
  if (task != 1 && task != 2) throw std::invalid_argument("task must be 1 or 2");
}

}  // namespace

TeacherEnsemble generate_teachers(int p_star, int d, double gamma, std::uint64_t seed) {
  if (p_star < 1 || d < 1) throw std::invalid_argument("p_star and d must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma must lie in [0, 1]");

  TeacherEnsemble ens;
  ens.gamma = gamma;
  ens.wt1.resize(p_star, d);
  ens.ht1.resize(p_star);
  ens.ht2.resize(p_star);
  MatrixRM waux(p_star, d);

  Philox g1 = Philox::stream(seed, kTeacherW1);
  Philox g2 = Philox::stream(seed, kTeacherWAux);
  Philox g3 = Philox::stream(seed, kTeacherH1);
  Philox g4 = Philox::stream(seed, kTeacherH2);
  fill_gaussian(ens.wt1, g1);
  fill_gaussian(waux, g2);
  fill_gaussian(ens.ht1, g3);
  fill_gaussian(ens.ht2, g4);

  ens.wt2 = gamma * ens.wt1 + std::sqrt(1.0 - gamma * gamma) * waux;
  return ens;
}

StudentNetwork make_student(int p, int d, double sigma_w, const Eigen::VectorXd& h1_init,
                            const Eigen::VectorXd& h2_init, std::uint64_t seed) {
  if (p < 1 || d < 1) throw std::invalid_argument("p and d must be >= 1");
  if (h1_init.size() != p || h2_init.size() != p)
    throw std::invalid_argument("readout inits must have length p");
  StudentNetwork st;
  st.sigma_w = sigma_w;
  st.w.resize(p, d);
  Philox g = Philox::stream(seed, kStudentW);
  fill_gaussian(st.w, g);
  st.w *= sigma_w;
  st.h1 = h1_init;
  st.h2 = h2_init;
  return st;
}

Eigen::MatrixXd OrderParams::joint_covariance() const {
  const int p_ = p(), ps = p_star();
  const int m = p_ + 2 * ps;
  Eigen::MatrixXd cov(m, m);
  cov.topLeftCorner(p_, p_) = q;
  cov.block(0, p_, p_, ps) = r1;
  cov.block(p_, 0, ps, p_) = r1.transpose();
  cov.block(0, p_ + ps, p_, ps) = r2;
  cov.block(p_ + ps, 0, ps, p_) = r2.transpose();
  cov.block(p_, p_, ps, ps) = t11;
  cov.block(p_, p_ + ps, ps, ps) = t12;
  cov.block(p_ + ps, p_, ps, ps) = t12.transpose();
  cov.block(p_ + ps, p_ + ps, ps, ps) = t22;
  return cov;
}

Eigen::MatrixXd OrderParams::stacked_overlap(int task) const {
  check_task(task);
  const int p_ = p(), ps = p_star();
  Eigen::MatrixXd m(p_ + ps, p_ + ps);
  const Eigen::MatrixXd& r = task == 1 ? r1 : r2;
  const Eigen::MatrixXd& t = task == 1 ? t11 : t22;
  m.topLeftCorner(p_, p_) = q;
  m.topRightCorner(p_, ps) = r;
  m.bottomLeftCorner(ps, p_) = r.transpose();
  m.bottomRightCorner(ps, ps) = t;
  return m;
}

OrderParams order_params_from_weights(const StudentNetwork& st, const TeacherEnsemble& te) {
  if (st.w.cols() != te.wt1.cols())
    throw std::invalid_argument("dimension mismatch between student and teachers");
  const double inv_d = 1.0 / static_cast<double>(st.d());
  OrderParams op;
  op.q = st.w * st.w.transpose() * inv_d;
  op.r1 = st.w * te.wt1.transpose() * inv_d;
  op.r2 = st.w * te.wt2.transpose() * inv_d;
  op.t11 = te.wt1 * te.wt1.transpose() * inv_d;
  op.t12 = te.wt1 * te.wt2.transpose() * inv_d;
  op.t22 = te.wt2 * te.wt2.transpose() * inv_d;
  op.h1 = st.h1;
  op.h2 = st.h2;
  op.ht1 = te.ht1;
  op.ht2 = te.ht2;
  return op;
}

double generalisation_error(const OrderParams& op, int task) {
  check_task(task);
  const Eigen::MatrixXd cov = op.joint_covariance();
  const ResidualUnits u = residual_units(op, task);
  const int n = static_cast<int>(u.idx.size());
  double total = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      total += u.coef[a] * u.coef[b] * avg_phi_phi(sub2(cov, u.idx[a], u.idx[b]));
  return 0.5 * total;
}

OrderParamsRate ode_rhs(const OrderParams& op, int task, double eta) {
  check_task(task);
  const int p = op.p(), ps = op.p_star();
  const Eigen::MatrixXd cov = op.joint_covariance();
  const ResidualUnits u = residual_units(op, task);
  const int nu = static_cast<int>(u.idx.size());
  const Eigen::VectorXd& h = task == 1 ? op.h1 : op.h2;

  OrderParamsRate rate;
  rate.dq = Eigen::MatrixXd::Zero(p, p);
  rate.dr1 = Eigen::MatrixXd::Zero(p, ps);
  rate.dr2 = Eigen::MatrixXd::Zero(p, ps);
  rate.dh = Eigen::VectorXd::Zero(p);

  // <phi'(lambda_i) Delta x> assembled per (i, x) pair on demand
  auto first_order = [&](int i, int x_idx) {
    double acc = 0.0;
    for (int a = 0; a < nu; ++a)
      acc += u.coef[a] * avg_phiprime_x_phi(sub3(cov, i, x_idx, u.idx[a]));
    return acc;
  };

  for (int i = 0; i < p; ++i) {
    double acc = 0.0;
    for (int a = 0; a < nu; ++a)
      acc += u.coef[a] * avg_phi_phi(sub2(cov, u.idx[a], i));
    rate.dh(i) = -eta * acc;
  }

  for (int tprime = 1; tprime <= 2; ++tprime) {
    Eigen::MatrixXd& dr = tprime == 1 ? rate.dr1 : rate.dr2;
    const int off = tprime == 1 ? p : p + ps;
    for (int i = 0; i < p; ++i)
      for (int n = 0; n < ps; ++n) dr(i, n) = -eta * h(i) * first_order(i, off + n);
  }

  for (int i = 0; i < p; ++i) {
    for (int k = i; k < p; ++k) {
      double second = 0.0;
      for (int a = 0; a < nu; ++a)
        for (int b = 0; b < nu; ++b)
          second += u.coef[a] * u.coef[b] *
                    avg_4point(sub4(cov, i, k, u.idx[a], u.idx[b]));
      const double v = -eta * h(i) * first_order(i, k) - eta * h(k) * first_order(k, i) +
                       eta * eta * h(i) * h(k) * second;
      rate.dq(i, k) = v;
      rate.dq(k, i) = v;
    }
  }
  return rate;
}

IntegrateResult integrate(const OrderParams& op0, const std::vector<TaskSegment>& schedule,
                          double eta, double dtau, double record_dtau) {
  if (!(dtau > 0.0)) throw std::invalid_argument("dtau must be > 0");
  const long rec_every = std::max(1L, std::lround(record_dtau / dtau));

  IntegrateResult res;
  OrderParams op = op0;
  double tau = 0.0;
  auto record = [&]() {
    res.tau.push_back(tau);
    res.eps1.push_back(generalisation_error(op, 1));
    res.eps2.push_back(generalisation_error(op, 2));
  };
  record();

  for (const TaskSegment& seg : schedule) {
    check_task(seg.task);
    const long n = std::lround(seg.tau_len / dtau);
    for (long it = 0; it < n; ++it) {
      const OrderParamsRate r = ode_rhs(op, seg.task, eta);
      op.q += dtau * r.dq;
      op.r1 += dtau * r.dr1;
      op.r2 += dtau * r.dr2;
      (seg.task == 1 ? op.h1 : op.h2) += dtau * r.dh;
      tau += dtau;
      if (op.q.diagonal().cwiseAbs().maxCoeff() > 1e6)
        throw std::runtime_error("instability: |Q_ii| exceeded 1e6");
      if ((it + 1) % rec_every == 0 || it + 1 == n) record();
    }
    res.segment_end_ops.push_back(op);
  }
  res.final_op = op;
  return res;
}

namespace {

double dot_row(const double* w, const double* x, int d) {
  return Eigen::Map<const Eigen::VectorXd>(w, d).dot(Eigen::Map<const Eigen::VectorXd>(x, d));
}

/// Reference SGD update kernel in double precision; the simulation loop in
/// OnlineSgdSim mirrors it in single precision and is tested against it.
void sgd_step_impl(StudentNetwork& st, const TeacherEnsemble& te, int task,
                   const double* x, double eta, Activation act) {
  const int p = st.p(), d = st.d();
  const MatrixRM& wt = task == 1 ? te.wt1 : te.wt2;
  const Eigen::VectorXd& ht = task == 1 ? te.ht1 : te.ht2;
  Eigen::VectorXd& h = task == 1 ? st.h1 : st.h2;
  const int ps = static_cast<int>(wt.rows());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  double lam[64], rho[64];
  if (p > 64 || ps > 64) throw std::invalid_argument("p, p* must be <= 64");

  for (int i = 0; i < p; ++i) lam[i] = dot_row(st.w.row(i).data(), x, d) * inv_sqrt_d;
  for (int n = 0; n < ps; ++n) rho[n] = dot_row(wt.row(n).data(), x, d) * inv_sqrt_d;

  double yhat = 0.0, y = 0.0;
  for (int i = 0; i < p; ++i) yhat += h(i) * activation(act, lam[i]);
  for (int n = 0; n < ps; ++n) y += ht(n) * activation(act, rho[n]);
  const double delta = yhat - y;

  for (int i = 0; i < p; ++i) {
    const double g = eta * inv_sqrt_d * delta * h(i) * activation_prime(act, lam[i]);
    if (g != 0.0)
      Eigen::Map<Eigen::VectorXd>(st.w.row(i).data(), d) -=
          g * Eigen::Map<const Eigen::VectorXd>(x, d);
  }
  const double hscale = eta / static_cast<double>(d) * delta;
  for (int i = 0; i < p; ++i) h(i) -= hscale * activation(act, lam[i]);
}

}  // namespace

void sgd_step(StudentNetwork& st, const TeacherEnsemble& te, int task,
              const Eigen::VectorXd& x, double eta, Activation act) {
  check_task(task);
  if (x.size() != st.d() || te.wt1.cols() != st.d())
    throw std::invalid_argument("dimension mismatch in sgd_step");
  sgd_step_impl(st, te, task, x.data(), eta, act);
}

double mc_generalisation_error(const StudentNetwork& st, const TeacherEnsemble& te, int task,
                               int n_samples, std::uint64_t seed, Activation act) {
  check_task(task);
  const int p = st.p(), d = st.d();
  const MatrixRM& wt = task == 1 ? te.wt1 : te.wt2;
  const Eigen::VectorXd& ht = task == 1 ? te.ht1 : te.ht2;
  const Eigen::VectorXd& h = task == 1 ? st.h1 : st.h2;
  const int ps = static_cast<int>(wt.rows());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  Philox rng = Philox::stream(seed, kEvalData);
  Eigen::VectorXd x(d);
  double acc = 0.0;
  for (int n = 0; n < n_samples; ++n) {
    GaussianTable::instance().fill(rng, x.data(), static_cast<std::size_t>(d));
    double yhat = 0.0, y = 0.0;
    for (int i = 0; i < p; ++i)
      yhat += h(i) * activation(act, dot_row(st.w.row(i).data(), x.data(), d) * inv_sqrt_d);
    for (int m = 0; m < ps; ++m)
      y += ht(m) * activation(act, dot_row(wt.row(m).data(), x.data(), d) * inv_sqrt_d);
    acc += 0.5 * (yhat - y) * (yhat - y);
  }
  return acc / n_samples;
}

MatrixRM fisher_diagonal(const StudentNetwork& st, const TeacherEnsemble& te, int task,
                         int n_samples, std::uint64_t seed, bool model_fisher, Activation act) {
  check_task(task);
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  const int p = st.p(), d = st.d();
  const MatrixRM& wt = task == 1 ? te.wt1 : te.wt2;
  const Eigen::VectorXd& ht = task == 1 ? te.ht1 : te.ht2;
  const Eigen::VectorXd& h = task == 1 ? st.h1 : st.h2;
  const int ps = static_cast<int>(wt.rows());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  Philox rng(derive_seed(seed, 0xF15Eull));
  Eigen::VectorXd x(d), x2(d);
  MatrixRM fisher = MatrixRM::Zero(p, d);

  for (int n = 0; n < n_samples; ++n) {
    GaussianTable::instance().fill(rng, x.data(), static_cast<std::size_t>(d));
    x2 = x.cwiseProduct(x);
    double lam[64], y = 0.0, yhat = 0.0;
    for (int i = 0; i < p; ++i) {
      lam[i] = dot_row(st.w.row(i).data(), x.data(), d) * inv_sqrt_d;
      yhat += h(i) * activation(act, lam[i]);
    }
    for (int m = 0; m < ps; ++m)
      y += ht(m) * activation(act, dot_row(wt.row(m).data(), x.data(), d) * inv_sqrt_d);
    const double delta = yhat - y;
    for (int i = 0; i < p; ++i) {
      const double c = (model_fisher ? 1.0 : delta) * h(i) *
                       activation_prime(act, lam[i]) * inv_sqrt_d;
      Eigen::Map<Eigen::VectorXd>(fisher.row(i).data(), d) += (c * c) * x2;
    }
  }
  fisher /= static_cast<double>(n_samples);
  return fisher;
}

namespace {

float dot_rowf(const float* w, const float* x, int d) {
  return Eigen::Map<const Eigen::VectorXf>(w, d).dot(Eigen::Map<const Eigen::VectorXf>(x, d));
}

}  // namespace

OnlineSgdSim::OnlineSgdSim(StudentNetwork student, const TeacherEnsemble& teachers,
                           Activation act, double eta, std::uint64_t seed)
    : student_(std::move(student)),
      teachers_(teachers),
      act_(act),
      eta_(eta),
      data_rng_(derive_seed(seed, kTrainData)),
      eval_seed_(seed),
      xbuf_(student_.d()) {
  wf_ = student_.w.cast<float>();
  wtf1_ = teachers.wt1.cast<float>();
  wtf2_ = teachers.wt2.cast<float>();
}

void OnlineSgdSim::sync() { student_.w = wf_.cast<double>(); }

const StudentNetwork& OnlineSgdSim::student() {
  sync();
  return student_;
}

void OnlineSgdSim::enable_ewc(const MatrixRM& fisher, const MatrixRM& anchor, double xi) {
  if (fisher.rows() != student_.w.rows() || fisher.cols() != student_.w.cols() ||
      anchor.rows() != student_.w.rows() || anchor.cols() != student_.w.cols())
    throw std::invalid_argument("EWC fisher/anchor must match W's shape");
  fisher_f_ = fisher.cast<float>();
  anchor_f_ = anchor.cast<float>();
  xi_ = xi;
  ewc_on_ = true;
}

void OnlineSgdSim::disable_ewc() { ewc_on_ = false; }

void OnlineSgdSim::run(int task, long steps, long hook_every,
                       const std::function<void(long)>& hook) {
  check_task(task);
  const int p = student_.p(), d = student_.d();
  const MatrixRMf& wtf = task == 1 ? wtf1_ : wtf2_;
  const Eigen::VectorXd& ht = task == 1 ? teachers_.ht1 : teachers_.ht2;
  Eigen::VectorXd& h = task == 1 ? student_.h1 : student_.h2;
  const int ps = static_cast<int>(wtf.rows());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const float exi = static_cast<float>(eta_ * xi_);
  const float* x = xbuf_.data();
  double lam[64], rho[64];
  if (p > 64 || ps > 64) throw std::invalid_argument("p, p* must be <= 64");

  for (long t = 1; t <= steps; ++t) {
    data_rng_.fill(xbuf_.data(), static_cast<std::size_t>(xbuf_.size()));
    for (int i = 0; i < p; ++i)
      lam[i] = static_cast<double>(dot_rowf(wf_.row(i).data(), x, d)) * inv_sqrt_d;
    for (int n = 0; n < ps; ++n)
      rho[n] = static_cast<double>(dot_rowf(wtf.row(n).data(), x, d)) * inv_sqrt_d;

    double yhat = 0.0, y = 0.0;
    for (int i = 0; i < p; ++i) yhat += h(i) * activation(act_, lam[i]);
    for (int n = 0; n < ps; ++n) y += ht(n) * activation(act_, rho[n]);
    const double delta = yhat - y;

    for (int i = 0; i < p; ++i) {
      const float g = static_cast<float>(eta_ * inv_sqrt_d * delta * h(i) *
                                         activation_prime(act_, lam[i]));
      if (g != 0.0f)
        Eigen::Map<Eigen::VectorXf>(wf_.row(i).data(), d) -=
            g * Eigen::Map<const Eigen::VectorXf>(x, d);
    }
    const double hscale = eta_ / static_cast<double>(d) * delta;
    for (int i = 0; i < p; ++i) h(i) -= hscale * activation(act_, lam[i]);

    if (ewc_on_ && exi != 0.0f)
      wf_.array() -= exi * fisher_f_.array() * (wf_.array() - anchor_f_.array());
    if (hook && hook_every > 0 && (t % hook_every == 0 || t == steps)) {
      sync();
      hook(t);
    }
  }
  sync();
}

double OnlineSgdSim::measured_eps(const TeacherEnsemble& teachers, int task, int eval_samples) {
  sync();
  if (act_ == Activation::ScaledErf)
    return generalisation_error(order_params_from_weights(student_, teachers), task);
  return mc_generalisation_error(student_, teachers, task, eval_samples, eval_seed_, act_);
}

}  // namespace specdyn
