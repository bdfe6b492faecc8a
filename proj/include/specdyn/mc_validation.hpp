#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace specdyn {

/// One analytic-vs-Monte-Carlo comparison cell of the Gaussian-average
/// validation suite.
struct McCheck {
  std::string integral;   // "phi_phi" | "phiprime_x_phi" | "four_point"
  Eigen::MatrixXd sigma;
  double analytic = 0.0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  double deviation_se = 0.0;  // |analytic - mc_mean| / mc_stderr
  bool pass = false;          // within 3 standard errors
};

/// Random covariance A A^T / dim with i.i.d. standard Gaussian A.
Eigen::MatrixXd random_covariance(int dim, std::uint64_t seed);

/// Runs n_covariances random-covariance cells per integral at n_samples
/// Monte-Carlo draws each, in parallel over cells. Every cell must land
/// within 3 standard errors of its closed form.
std::vector<McCheck> validate_gaussian_averages(int n_covariances, long n_samples,
                                                std::uint64_t seed, int jobs);

}  // namespace specdyn
