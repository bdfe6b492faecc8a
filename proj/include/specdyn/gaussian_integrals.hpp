#pragma once

#include <Eigen/Dense>

namespace specdyn {

enum class Activation { ScaledErf, Relu };

/// phi(z) = erf(z / sqrt(2)).
double phi(double z);
/// phi'(z) = sqrt(2/pi) exp(-z^2 / 2).
double phi_prime(double z);

double relu(double z);
double relu_prime(double z);

double activation(Activation a, double z);
double activation_prime(Activation a, double z);

/**
 * Analytic Gaussian averages for phi(z) = erf(z/sqrt(2)) over centered
 * Gaussian pre-activations with covariance Sigma (Saad-Solla style). The
 * index conventions follow the argument order of the integrand.
 */

/// <phi(b) phi(c)> for (b, c) ~ N(0, Sigma), Sigma 2x2.
double avg_phi_phi(const Eigen::Matrix2d& sigma);

/// <phi'(z) b phi(c)> with ordering (z, b, c) -> (0, 1, 2), Sigma 3x3.
double avg_phiprime_x_phi(const Eigen::Matrix3d& sigma);

/// <phi'(z) phi'(i) phi(b) phi(c)> with ordering (z, i, b, c), Sigma 4x4.
double avg_4point(const Eigen::Matrix4d& sigma);

}  // namespace specdyn
