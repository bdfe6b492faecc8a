#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "specdyn/gaussian_integrals.hpp"
#include "specdyn/rng.hpp"

namespace specdyn {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sub-stream roles under one protocol seed; streams are keyed by
/// derive_seed(seed, role) so every stochastic ingredient is independently
/// reproducible.
enum StreamRole : std::uint64_t {
  kTeacherW1 = 1,
  kTeacherWAux = 2,
  kTeacherH1 = 3,
  kTeacherH2 = 4,
  kStudentW = 5,
  kTrainData = 6,
  kEvalData = 7,
};

/// Two teachers with first layers correlated through gamma:
/// wt2 = gamma * wt1 + sqrt(1 - gamma^2) * w_aux, all entries i.i.d. N(0,1).
struct TeacherEnsemble {
  MatrixRM wt1, wt2;         // p* x d
  Eigen::VectorXd ht1, ht2;  // p*
  double gamma = 0.0;
};

/// Deterministic in (p_star, d, seed); gamma only mixes fixed draws, so the
/// same seed yields a smooth family of ensembles across gamma.
TeacherEnsemble generate_teachers(int p_star, int d, double gamma, std::uint64_t seed);

struct StudentNetwork {
  MatrixRM w;                // p x d, shared first layer
  Eigen::VectorXd h1, h2;    // task-specific readouts
  double sigma_w = 1e-3;

  int p() const { return static_cast<int>(w.rows()); }
  int d() const { return static_cast<int>(w.cols()); }
};

StudentNetwork make_student(int p, int d, double sigma_w, const Eigen::VectorXd& h1_init,
                            const Eigen::VectorXd& h2_init, std::uint64_t seed);

/// Macroscopic state: overlaps Q = WW^T/d, R^(t) = W WT^(t)T/d,
/// T^(t,t') = WT^(t) WT^(t')T/d plus both readouts. Fully determines the
/// generalisation errors and the mean-field flow.
struct OrderParams {
  Eigen::MatrixXd q;          // p x p
  Eigen::MatrixXd r1, r2;     // p x p*
  Eigen::MatrixXd t11, t12, t22;  // p* x p*
  Eigen::VectorXd h1, h2;     // p
  Eigen::VectorXd ht1, ht2;   // p*

  int p() const { return static_cast<int>(q.rows()); }
  int p_star() const { return static_cast<int>(t11.rows()); }

  /// Joint covariance of (lambda_1..lambda_p, rho^1_1..rho^1_p*, rho^2_...).
  Eigen::MatrixXd joint_covariance() const;
  /// Stacked overlap block matrix [[Q, R],[R^T, T]] for the given task.
  Eigen::MatrixXd stacked_overlap(int task) const;
};

OrderParams order_params_from_weights(const StudentNetwork& student,
                                      const TeacherEnsemble& teachers);

/// eps^(t) = 1/2 E[(Delta^(t))^2] expanded over pairwise phi-phi averages.
double generalisation_error(const OrderParams& op, int task);

struct OrderParamsRate {
  Eigen::MatrixXd dq, dr1, dr2;
  Eigen::VectorXd dh;  // rate of the active task's readout
};

/// Mean-field flow of (Q, R, h) when training on `task`; teacher blocks and
/// readout teachers are constants of the motion, as is the inactive head.
OrderParamsRate ode_rhs(const OrderParams& op, int task, double eta);

struct TaskSegment {
  int task = 1;
  double tau_len = 0.0;
};

struct IntegrateResult {
  std::vector<double> tau, eps1, eps2;
  std::vector<OrderParams> segment_end_ops;
  OrderParams final_op;
};

/// Explicit Euler on ode_rhs across the task schedule; records both errors
/// every record_dtau tau-units (and at every segment boundary).
IntegrateResult integrate(const OrderParams& op0, const std::vector<TaskSegment>& schedule,
                          double eta, double dtau, double record_dtau);

/// One online SGD update (Eqs. for W and the active head) on caller-supplied
/// input x; the reference implementation behind OnlineSgdSim.
void sgd_step(StudentNetwork& student, const TeacherEnsemble& teachers, int task,
              const Eigen::VectorXd& x, double eta, Activation act = Activation::ScaledErf);

/// Monte-Carlo generalisation error on fresh inputs; the measurement path
/// for activations without analytic averages.
double mc_generalisation_error(const StudentNetwork& student, const TeacherEnsemble& teachers,
                               int task, int n_samples, std::uint64_t seed,
                               Activation act);

/// Diagonal Fisher-importance estimate over first-layer weights from fresh
/// task inputs. Default: empirical squared gradient of the half-squared
/// error; model_fisher uses the output-model gradient (residual dropped).
MatrixRM fisher_diagonal(const StudentNetwork& student, const TeacherEnsemble& teachers,
                         int task, int n_samples, std::uint64_t seed,
                         bool model_fisher = false, Activation act = Activation::ScaledErf);

/**
 * Buffered online-SGD loop at finite d. Input vectors are drawn from a
 * dedicated Philox stream in single precision (the weights stay double);
 * an optional quadratic anchor penalty on W implements EWC training.
 */
class OnlineSgdSim {
 public:
  OnlineSgdSim(StudentNetwork student, const TeacherEnsemble& teachers, Activation act,
               double eta, std::uint64_t seed);

  void enable_ewc(const MatrixRM& fisher, const MatrixRM& anchor, double xi);
  void disable_ewc();

  /// Runs `steps` updates on `task`, invoking hook(step_done) after every
  /// `hook_every` steps (and once at the end) when provided.
  void run(int task, long steps, long hook_every = 0,
           const std::function<void(long)>& hook = {});

  /// The student with weights synchronised back to double precision.
  const StudentNetwork& student();

  /// Generalisation error of the current student: analytic for ScaledErf,
  /// Monte-Carlo (eval_samples, deterministic eval stream) for Relu.
  double measured_eps(const TeacherEnsemble& teachers, int task, int eval_samples = 4096);

 private:
  using MatrixRMf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  void sync();

  // W runs in single precision inside the loop (the update noise floor sits
  // far below the SGD noise); the double copy in student_ is refreshed at
  // every hook and run boundary.
  StudentNetwork student_;
  MatrixRMf wf_, wtf1_, wtf2_;
  const TeacherEnsemble& teachers_;
  Activation act_;
  double eta_;
  NormalFiller data_rng_;
  std::uint64_t eval_seed_;
  // Eigen-allocated so the buffer alignment (and hence the vectorised
  // reduction split) is identical across instances
  Eigen::VectorXf xbuf_;
  bool ewc_on_ = false;
  double xi_ = 0.0;
  MatrixRMf fisher_f_, anchor_f_;
};

}  // namespace specdyn
