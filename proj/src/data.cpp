#include "ntkes/data.hpp"

#include <cmath>

#include "ntkes/errors.hpp"

namespace ntkes {

Eigen::VectorXd Target::operator()(const Eigen::MatrixXd& points) const {
  if (static_cast<std::size_t>(points.cols()) != input_dim()) {
    throw DimensionError("target: points have the wrong dimension");
  }
  if (const auto* lin = linear()) return points * lin->direction;
  const auto& r = *rkhs();
  return cross_kernel(points, r.centers, r.mode) * r.coefficients;
}

std::size_t Target::input_dim() const {
  if (const auto* lin = linear()) return static_cast<std::size_t>(lin->direction.size());
  return static_cast<std::size_t>(rkhs()->centers.cols());
}

std::optional<double> Target::mu0() const {
  if (const auto* r = rkhs()) return r->mu0;
  return std::nullopt;
}

Target make_linear_target(Eigen::VectorXd direction) {
  if (direction.size() == 0) throw DimensionError("linear target: empty direction");
  if (!direction.allFinite()) throw DomainError("linear target: direction is not finite");
  return Target(LinearTarget{std::move(direction)});
}

Target make_rkhs_target(Eigen::MatrixXd centers, Eigen::VectorXd coefficients, BiasMode mode) {
  if (centers.rows() != coefficients.size()) {
    throw DimensionError("rkhs target: one coefficient per center required");
  }
  const GramSpectrum kzz = gram_matrix(centers, mode);
  const double norm_sq = coefficients.dot(kzz.gram * coefficients);
  if (norm_sq < -1e-10 * std::max(1.0, coefficients.squaredNorm())) {
    throw NumericalFailure("rkhs target: c^T K c is negative", norm_sq);
  }
  RkhsTarget t{std::move(centers), std::move(coefficients), mode, std::sqrt(std::max(norm_sq, 0.0))};
  return Target(std::move(t));
}

Eigen::MatrixXd sample_sphere(std::size_t n, std::size_t d, const Stream& stream) {
  if (d < 2) throw ConfigError("sample_sphere: dimension must be at least 2");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = stream.normal(i * d + k);
    }
    x.row(static_cast<Eigen::Index>(i)).normalize();
  }
  return x;
}

Eigen::MatrixXd sample_sphere(std::size_t n, std::size_t d, std::uint64_t seed) {
  return sample_sphere(n, d, Stream::root(seed).child("sphere"));
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& clean, double sigma0, const Stream& stream) {
  if (sigma0 < 0.0) throw DomainError("add_noise: sigma0 must be nonnegative");
  Eigen::VectorXd out = clean;
  if (sigma0 == 0.0) return out;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] += sigma0 * stream.normal(static_cast<std::uint64_t>(i));
  }
  return out;
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& clean, double sigma0, std::uint64_t seed) {
  return add_noise(clean, sigma0, Stream::root(seed).child("noise"));
}

TrainingSet make_training_set(Eigen::MatrixXd covariates, const Target& target, double sigma0,
                              const Stream& noise_stream) {
  TrainingSet s;
  s.clean_targets = target(covariates);
  s.responses = add_noise(s.clean_targets, sigma0, noise_stream);
  s.covariates = std::move(covariates);
  s.sigma0 = sigma0;
  s.target = target;
  return s;
}

RiskEstimate estimate_risk(const BatchFunction& f, const BatchFunction& target,
                           std::size_t samples, std::size_t d, const Stream& stream) {
  if (samples == 0) throw ConfigError("estimate_risk: need at least one sample");
  const Eigen::MatrixXd x = sample_sphere(samples, d, stream);
  const Eigen::VectorXd sq = (f(x) - target(x)).array().square();
  RiskEstimate r;
  const double m = static_cast<double>(samples);
  r.mean = sq.mean();
  if (samples > 1) {
    const double var = (sq.array() - r.mean).square().sum() / (m - 1.0);
    r.std_error = std::sqrt(var / m);
  }
  return r;
}

RiskEstimate estimate_risk(const BatchFunction& f, const BatchFunction& target,
                           std::size_t samples, std::size_t d, std::uint64_t seed) {
  return estimate_risk(f, target, samples, d, Stream::root(seed).child("risk"));
}

}  // namespace ntkes
