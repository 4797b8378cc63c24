#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ntkes {

/// R(eps) = sqrt((1/n) sum_i min(lambda_i, eps^2)).
///
/// `n` is the sample size, not the length of `eigenvalues`: a truncated
/// population sequence is passed the same way as an empirical spectrum.
double kernel_complexity(const Eigen::VectorXd& eigenvalues, std::size_t n, double eps);

/// The positive r solving sigma0 * R(sqrt(r)) = r (the critical radius
/// squared), by bisection in log(r) to relative tolerance 1e-10.
/// Throws DomainError when no eigenvalue is positive.
double fixed_point(const Eigen::VectorXd& eigenvalues, std::size_t n, double sigma0);

struct StoppingTime {
  std::size_t steps = 0;  // T_hat
  bool saturated = false; // condition never triggered within the horizon
};

/// T_hat = min{t >= 1 : R(sqrt(1/(eta t))) > 1/(sigma0 eta t)} - 1, by forward
/// scan over t = 1..horizon. Returns {horizon, true} if it never triggers.
StoppingTime stopping_time(const Eigen::VectorXd& eigenvalues, std::size_t n, double sigma0, double eta,
                           std::size_t horizon);

/// Horizon guaranteed to contain T_hat: T_hat <= 1/(eta * eps_sq).
std::size_t stopping_time_horizon(double fixed_point_sq, double eta);

/// OLS slope of log(value) against log(n).
double rate_slope(const std::vector<std::pair<double, double>>& pairs);

struct ComplexityProfile {
  Eigen::VectorXd eigenvalues;
  std::size_t n = 0;
  double sigma0 = 0.0;
  double eta = 0.0;
  double fixed_point_sq = 0.0;
  StoppingTime stopping;
};

/// Fixed point and stopping time for one spectrum.
ComplexityProfile complexity_profile(Eigen::VectorXd eigenvalues, std::size_t n, double sigma0, double eta);

/// Truncated population sequence lambda_j = scale * j^{-exponent}.
struct PopulationSpectrum {
  Eigen::VectorXd eigenvalues;
  double fixed_point_sq = 0.0;
  std::size_t truncation = 0;
};

/// Solves the population fixed point for lambda(j), j = 1, 2, ...
///
/// The sequence is truncated where lambda_j < 1e-3 * r_lo, with r_lo a lower
/// bound on the fixed point obtained from a shorter prefix (adding terms can
/// only raise the fixed point). `lambda` must be nonincreasing.
PopulationSpectrum population_fixed_point(const std::function<double(std::size_t)>& lambda, std::size_t n,
                                          double sigma0, std::size_t max_terms = 50'000'000);

}  // namespace ntkes
