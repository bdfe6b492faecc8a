#include "specdyn/gaussian_integrals.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace specdyn {

namespace {

constexpr double kAsinSlack = 1e-12;
constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

double checked_asin(double arg, const char* where) {
  if (std::abs(arg) > 1.0 + kAsinSlack)
    throw std::domain_error(std::string("domain: asin argument out of range in ") + where);
  return std::asin(std::clamp(arg, -1.0, 1.0));
}

}  // namespace

double phi(double z) { return std::erf(z * std::numbers::sqrt2 / 2.0); }

double phi_prime(double z) {
  return std::sqrt(kTwoOverPi) * std::exp(-0.5 * z * z);
}

double relu(double z) { return z > 0.0 ? z : 0.0; }
double relu_prime(double z) { return z > 0.0 ? 1.0 : 0.0; }

double activation(Activation a, double z) { return a == Activation::ScaledErf ? phi(z) : relu(z); }
double activation_prime(Activation a, double z) {
  return a == Activation::ScaledErf ? phi_prime(z) : relu_prime(z);
}

double avg_phi_phi(const Eigen::Matrix2d& s) {
  const double arg = s(0, 1) / std::sqrt((1.0 + s(0, 0)) * (1.0 + s(1, 1)));
  return kTwoOverPi * checked_asin(arg, "avg_phi_phi");
}

double avg_phiprime_x_phi(const Eigen::Matrix3d& s) {
  const double lambda3 = (1.0 + s(0, 0)) * (1.0 + s(2, 2)) - s(0, 2) * s(0, 2);
  if (lambda3 <= 0.0) throw std::domain_error("domain: Lambda3 <= 0 in avg_phiprime_x_phi");
  return kTwoOverPi * (s(1, 2) * (1.0 + s(0, 0)) - s(0, 1) * s(0, 2)) /
         ((1.0 + s(0, 0)) * std::sqrt(lambda3));
}

double avg_4point(const Eigen::Matrix4d& s) {
  const double lambda4 = (1.0 + s(0, 0)) * (1.0 + s(1, 1)) - s(0, 1) * s(0, 1);
  if (lambda4 <= 0.0) throw std::domain_error("domain: Lambda4 <= 0 in avg_4point");
  const double lambda0 = lambda4 * s(2, 3) - s(1, 2) * s(1, 3) * (1.0 + s(0, 0)) -
                         s(0, 2) * s(0, 3) * (1.0 + s(1, 1)) + s(0, 1) * s(0, 2) * s(1, 3) +
                         s(0, 1) * s(0, 3) * s(1, 2);
  const double lambda1 = lambda4 * (1.0 + s(2, 2)) - s(1, 2) * s(1, 2) * (1.0 + s(0, 0)) -
                         s(0, 2) * s(0, 2) * (1.0 + s(1, 1)) + 2.0 * s(0, 1) * s(0, 2) * s(1, 2);
  const double lambda2 = lambda4 * (1.0 + s(3, 3)) - s(1, 3) * s(1, 3) * (1.0 + s(0, 0)) -
                         s(0, 3) * s(0, 3) * (1.0 + s(1, 1)) + 2.0 * s(0, 1) * s(0, 3) * s(1, 3);
  const double prod = lambda1 * lambda2;
  if (prod <= 0.0) throw std::domain_error("domain: Lambda1 * Lambda2 <= 0 in avg_4point");
  return 4.0 / (std::numbers::pi * std::numbers::pi * std::sqrt(lambda4)) *
         checked_asin(lambda0 / std::sqrt(prod), "avg_4point");
}

}  // namespace specdyn
