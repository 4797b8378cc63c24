#include "ntkes/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ntkes/errors.hpp"
#include "ntkes/stats.hpp"

namespace ntkes {

namespace {

// (1/n) sum_i min(lambda_i, r) = R(sqrt(r))^2.
double complexity_sq(const Eigen::VectorXd& eigenvalues, std::size_t n, double r) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) s += std::min(eigenvalues[i], r);
  return s / static_cast<double>(n);
}

void check_spectrum(const Eigen::VectorXd& eigenvalues, std::size_t n) {
  if (n == 0) throw DomainError("kernel complexity: sample size must be positive");
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (!(eigenvalues[i] >= 0.0)) {
      throw DomainError("kernel complexity: eigenvalue " + std::to_string(i) + " is negative or NaN");
    }
  }
}

}  // namespace

double kernel_complexity(const Eigen::VectorXd& eigenvalues, std::size_t n, double eps) {
  if (!(eps >= 0.0)) throw DomainError("kernel_complexity: eps must be nonnegative");
  check_spectrum(eigenvalues, n);
  return std::sqrt(complexity_sq(eigenvalues, n, eps * eps));
}

double fixed_point(const Eigen::VectorXd& eigenvalues, std::size_t n, double sigma0) {
  if (!(sigma0 > 0.0)) throw DomainError("fixed_point: sigma0 must be positive");
  check_spectrum(eigenvalues, n);
  const double top = eigenvalues.size() > 0 ? eigenvalues.maxCoeff() : 0.0;
  if (!(top > 0.0)) throw DomainError("fixed_point: spectrum is identically zero, no positive fixed point");

  // psi(r) = sigma0 R(sqrt r) is sub-root, so psi(r) - r changes sign once.
  auto above = [&](double r) { return sigma0 * std::sqrt(complexity_sq(eigenvalues, n, r)) > r; };
  double lo = 1e-15;
  while (!above(lo)) {
    lo *= 1e-3;
    if (lo < 1e-300) throw DomainError("fixed_point: fixed point below representable range");
  }
  double hi = 2.0 * std::max(top, sigma0 * sigma0);
  if (!std::isfinite(hi)) throw NumericalFailure("fixed_point: bracket overflows double range", hi);
  while (above(hi)) {
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalFailure("fixed_point: fixed point overflows double range", hi);
  }

  for (int iter = 0; hi - lo > 1e-10 * lo && iter < 4096; ++iter) {
    const double mid = std::sqrt(lo * hi);
    const double next = (mid > lo && mid < hi) ? mid : 0.5 * (lo + hi);
    if (above(next)) {
      lo = next;
    } else {
      hi = next;
    }
  }
  return 0.5 * (lo + hi);
}

StoppingTime stopping_time(const Eigen::VectorXd& eigenvalues, std::size_t n, double sigma0, double eta,
                           std::size_t horizon) {
  if (!(eta > 0.0)) throw DomainError("stopping_time: eta must be positive");
  if (!(sigma0 > 0.0)) throw DomainError("stopping_time: sigma0 must be positive");
  if (horizon < 1) throw DomainError("stopping_time: horizon must be at least 1");
  check_spectrum(eigenvalues, n);
  for (std::size_t t = 1; t <= horizon; ++t) {
    const double eta_t = eta * static_cast<double>(t);
    const double r = 1.0 / eta_t;
    if (std::sqrt(complexity_sq(eigenvalues, n, r)) > 1.0 / (sigma0 * eta_t)) {
      return {t - 1, false};
    }
  }
  return {horizon, true};
}

std::size_t stopping_time_horizon(double fixed_point_sq, double eta) {
  if (!(fixed_point_sq > 0.0) || !(eta > 0.0)) throw DomainError("stopping_time_horizon: need positive inputs");
  return static_cast<std::size_t>(std::ceil(1.01 / (eta * fixed_point_sq))) + 2;
}

double rate_slope(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw DomainError("rate_slope: need at least three (n, value) pairs");
  std::vector<double> lx, ly;
  for (const auto& [n, v] : pairs) {
    if (!(n > 0.0) || !(v > 0.0)) throw DomainError("rate_slope: entries must be positive");
    lx.push_back(std::log(n));
    ly.push_back(std::log(v));
  }
  return ols_slope(lx, ly);
}

ComplexityProfile complexity_profile(Eigen::VectorXd eigenvalues, std::size_t n, double sigma0, double eta) {
  ComplexityProfile p;
  p.n = n;
  p.sigma0 = sigma0;
  p.eta = eta;
  p.fixed_point_sq = fixed_point(eigenvalues, n, sigma0);
  p.stopping = stopping_time(eigenvalues, n, sigma0, eta, stopping_time_horizon(p.fixed_point_sq, eta));
  p.eigenvalues = std::move(eigenvalues);
  return p;
}

PopulationSpectrum population_fixed_point(const std::function<double(std::size_t)>& lambda, std::size_t n,
                                          double sigma0, std::size_t max_terms) {
  std::vector<double> values;
  auto grow_to = [&](std::size_t len) {
    while (values.size() < len) {
      const double v = lambda(values.size() + 1);
      if (!(v >= 0.0)) throw DomainError("population_fixed_point: lambda_j must be nonnegative");
      if (!values.empty() && v > values.back()) {
        throw DomainError("population_fixed_point: sequence must be nonincreasing");
      }
      values.push_back(v);
    }
  };
  auto as_vector = [&] { return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())); };

  grow_to(std::min<std::size_t>(1024, max_terms));
  const double r_lo = fixed_point(as_vector(), n, sigma0);
  const double cutoff = 1e-3 * r_lo;
  while (values.back() >= cutoff) {
    if (values.size() >= max_terms) {
      throw NumericalFailure("population_fixed_point: truncation exceeds max_terms", values.back() / r_lo);
    }
    grow_to(std::min(max_terms, 2 * values.size()));
  }
  // Trim to the first index below the cutoff.
  const auto first_below = std::find_if(values.begin(), values.end(), [&](double v) { return v < cutoff; });
  values.erase(first_below + 1, values.end());

  PopulationSpectrum out;
  out.eigenvalues = as_vector();
  out.truncation = values.size();
  out.fixed_point_sq = fixed_point(out.eigenvalues, n, sigma0);
  return out;
}

}  // namespace ntkes
