#include "specdyn/mc_validation.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "specdyn/gaussian_integrals.hpp"
#include "specdyn/parallel.hpp"
#include "specdyn/rng.hpp"

namespace specdyn {

namespace {

template <typename F>
void estimate(const Eigen::MatrixXd& sigma, long n, std::uint64_t seed, F&& f, double& mean,
              double& se) {
  const int dim = static_cast<int>(sigma.rows());
  const Eigen::MatrixXd chol =
      Eigen::LLT<Eigen::MatrixXd>(sigma + 1e-12 * Eigen::MatrixXd::Identity(dim, dim))
          .matrixL();
  Philox rng(derive_seed(seed, 0x3cull));
  Eigen::VectorXd g(dim), z(dim);
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) g(k) = standard_normal(rng);
    z.noalias() = chol * g;
    const double v = f(z);
    sum += v;
    sum2 += v * v;
  }
  mean = sum / n;
  se = std::sqrt(std::max(sum2 / n - mean * mean, 0.0) / n);
}

McCheck run_check(const std::string& kind, const Eigen::MatrixXd& sigma, long n,
                  std::uint64_t seed) {
  McCheck c;
  c.integral = kind;
  c.sigma = sigma;
  if (kind == "phi_phi") {
    c.analytic = avg_phi_phi(sigma.topLeftCorner<2, 2>());
    estimate(sigma, n, seed,
             [](const Eigen::VectorXd& z) { return phi(z(0)) * phi(z(1)); }, c.mc_mean,
             c.mc_stderr);
  } else if (kind == "phiprime_x_phi") {
    c.analytic = avg_phiprime_x_phi(sigma.topLeftCorner<3, 3>());
    estimate(sigma, n, seed,
             [](const Eigen::VectorXd& z) { return phi_prime(z(0)) * z(1) * phi(z(2)); },
             c.mc_mean, c.mc_stderr);
  } else {
    c.analytic = avg_4point(sigma.topLeftCorner<4, 4>());
    estimate(sigma, n, seed,
             [](const Eigen::VectorXd& z) {
               return phi_prime(z(0)) * phi_prime(z(1)) * phi(z(2)) * phi(z(3));
             },
             c.mc_mean, c.mc_stderr);
  }
  c.deviation_se = std::abs(c.analytic - c.mc_mean) / c.mc_stderr;
  c.pass = c.deviation_se <= 3.0;
  return c;
}

}  // namespace

Eigen::MatrixXd random_covariance(int dim, std::uint64_t seed) {
  Philox rng(derive_seed(seed, 0xc0ull));
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = standard_normal(rng);
  return a * a.transpose() / dim;
}

std::vector<McCheck> validate_gaussian_averages(int n_covariances, long n_samples,
                                                std::uint64_t seed, int jobs) {
  const char* kinds[3] = {"phi_phi", "phiprime_x_phi", "four_point"};
  const int dims[3] = {2, 3, 4};
  std::vector<McCheck> checks(static_cast<std::size_t>(3 * n_covariances));
  parallel_for(static_cast<long>(checks.size()), jobs, [&](long idx) {
    const int kind = static_cast<int>(idx) / n_covariances;
    const int cell = static_cast<int>(idx) % n_covariances;
    const std::uint64_t cell_seed = derive_seed(seed, idx);
    const Eigen::MatrixXd sigma = random_covariance(dims[kind], cell_seed);
    checks[idx] = run_check(kinds[kind], sigma, n_samples, cell_seed);
  });
  return checks;
}

}  // namespace specdyn
