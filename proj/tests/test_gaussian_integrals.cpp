#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mc_oracle.hpp"
#include "specdyn/gaussian_integrals.hpp"

using namespace specdyn;

TEST_CASE("phi basics") {
  CHECK(phi(0.0) == 0.0);
  CHECK(phi(50.0) == doctest::Approx(1.0));
  CHECK(phi(-50.0) == doctest::Approx(-1.0));
  CHECK(phi(1.3) == doctest::Approx(-phi(-1.3)).epsilon(1e-15));
}

TEST_CASE("phi_prime matches a central finite difference of phi") {
  const double h = 1e-6;
  for (double z = -5.0; z <= 5.0; z += 0.25) {
    const double fd = (phi(z + h) - phi(z - h)) / (2.0 * h);
    CHECK(std::abs(phi_prime(z) - fd) < 1e-8);
  }
}

TEST_CASE("relu variant") {
  CHECK(relu(-2.0) == 0.0);
  CHECK(relu(3.5) == 3.5);
  CHECK(relu_prime(-1.0) == 0.0);
  CHECK(relu_prime(1.0) == 1.0);
  CHECK(activation(Activation::Relu, 2.0) == 2.0);
  CHECK(activation(Activation::ScaledErf, 2.0) == phi(2.0));
}

TEST_CASE("avg_phi_phi trivial values") {
  Eigen::Matrix2d s;
  s << 1.0, 0.0, 0.0, 1.0;
  CHECK(avg_phi_phi(s) == 0.0);

  // q on the diagonal and off-diagonal: odd in the sign of the covariance
  s << 0.7, 0.3, 0.3, 0.7;
  const double plus = avg_phi_phi(s);
  s(0, 1) = s(1, 0) = -0.3;
  CHECK(avg_phi_phi(s) == doctest::Approx(-plus).epsilon(1e-15));

  // perfectly correlated unit field: E[phi(b)^2] = (2/pi) asin(1/2) = 1/3
  s << 1.0, 1.0, 1.0, 1.0;
  CHECK(avg_phi_phi(s) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("avg_phiprime_x_phi trivial zeros") {
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  CHECK(avg_phiprime_x_phi(s) == 0.0);  // independence and odd beta
  s << 0.8, 0.1, 0.0, 0.1, 0.9, 0.0, 0.0, 0.0, 0.5;
  CHECK(avg_phiprime_x_phi(s) == doctest::Approx(0.0));  // Sigma23 = Sigma13 = 0
}

TEST_CASE("avg_4point trivial values and symmetry") {
  Eigen::Matrix4d s = Eigen::Matrix4d::Identity();
  CHECK(avg_4point(s) == 0.0);

  // swapping (zeta, iota) together with (beta, gamma) relabels Sigma only
  Eigen::Matrix4d base = mc::random_psd(4, 77);
  Eigen::Matrix4d swapped;
  const int perm[4] = {1, 0, 3, 2};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) swapped(i, j) = base(perm[i], perm[j]);
  CHECK(avg_4point(base) == doctest::Approx(avg_4point(swapped)).epsilon(1e-13));
}

TEST_CASE("analytic averages match Monte Carlo on random covariances") {
  const long n = 400000;  // quick version; the acceptance suite runs 1e7 x 50
  for (int trial = 0; trial < 4; ++trial) {
    {
      const Eigen::MatrixXd s = mc::random_psd(2, 100 + trial);
      const auto est = mc::gaussian_expectation(
          s, n, 500 + trial, [](const Eigen::VectorXd& z) { return phi(z(0)) * phi(z(1)); });
      CHECK(std::abs(avg_phi_phi(s) - est.mean) < 3.5 * est.stderr_);
    }
    {
      const Eigen::MatrixXd s = mc::random_psd(3, 200 + trial);
      const auto est = mc::gaussian_expectation(s, n, 600 + trial, [](const Eigen::VectorXd& z) {
        return phi_prime(z(0)) * z(1) * phi(z(2));
      });
      CHECK(std::abs(avg_phiprime_x_phi(s) - est.mean) < 3.5 * est.stderr_);
    }
    {
      const Eigen::MatrixXd s = mc::random_psd(4, 300 + trial);
      const auto est = mc::gaussian_expectation(s, n, 700 + trial, [](const Eigen::VectorXd& z) {
        return phi_prime(z(0)) * phi_prime(z(1)) * phi(z(2)) * phi(z(3));
      });
      CHECK(std::abs(avg_4point(s) - est.mean) < 3.5 * est.stderr_);
    }
  }
}

TEST_CASE("domain guards") {
  Eigen::Matrix2d bad;
  bad << 1.0, 2.5, 2.5, 1.0;  // asin argument > 1
  CHECK_THROWS_AS(avg_phi_phi(bad), std::domain_error);
}
