#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "ntkes/ntk_kernel.hpp"
#include "ntkes/rng.hpp"

namespace ntkes {

/// f*(x) = s^T x.
struct LinearTarget {
  Eigen::VectorXd direction;
};

/// f*(x) = sum_i c_i K(x, z_i), with RKHS norm mu0 = sqrt(c^T K_ZZ c).
struct RkhsTarget {
  Eigen::MatrixXd centers;  // rows z_i
  Eigen::VectorXd coefficients;
  BiasMode mode = BiasMode::biased;
  double mu0 = 0.0;
};

class Target {
 public:
  explicit Target(LinearTarget t) : impl_(std::move(t)) {}
  explicit Target(RkhsTarget t) : impl_(std::move(t)) {}

  /// Evaluates f* at every row of `points`.
  Eigen::VectorXd operator()(const Eigen::MatrixXd& points) const;

  std::size_t input_dim() const;
  /// RKHS norm; only known for kernel-expansion targets.
  std::optional<double> mu0() const;

  const LinearTarget* linear() const { return std::get_if<LinearTarget>(&impl_); }
  const RkhsTarget* rkhs() const { return std::get_if<RkhsTarget>(&impl_); }

 private:
  std::variant<LinearTarget, RkhsTarget> impl_;
};

Target make_linear_target(Eigen::VectorXd direction);
/// Throws InvalidDataset on coincident centers.
Target make_rkhs_target(Eigen::MatrixXd centers, Eigen::VectorXd coefficients, BiasMode mode);

/// Training sample (S, y) together with the clean targets it was built from.
struct TrainingSet {
  Eigen::MatrixXd covariates;  // n x d
  Eigen::VectorXd responses;   // y = f*(S) + noise
  Eigen::VectorXd clean_targets;
  double sigma0 = 0.0;
  std::optional<Target> target;

  std::size_t size() const { return static_cast<std::size_t>(covariates.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(covariates.cols()); }
};

/// n i.i.d. points uniform on S^{d-1}: point i is the normalised Gaussian
/// vector built from draws [i*d, (i+1)*d) of `stream`, so samples of
/// different sizes from one stream are nested.
Eigen::MatrixXd sample_sphere(std::size_t n, std::size_t d, const Stream& stream);
Eigen::MatrixXd sample_sphere(std::size_t n, std::size_t d, std::uint64_t seed);

/// clean + sigma0 * N(0, 1), draw i from counter i.
Eigen::VectorXd add_noise(const Eigen::VectorXd& clean, double sigma0, const Stream& stream);
Eigen::VectorXd add_noise(const Eigen::VectorXd& clean, double sigma0, std::uint64_t seed);

TrainingSet make_training_set(Eigen::MatrixXd covariates, const Target& target, double sigma0,
                              const Stream& noise_stream);

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

using BatchFunction = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Monte-Carlo estimate of E[(f - f*)^2] over `samples` fresh sphere points.
RiskEstimate estimate_risk(const BatchFunction& f, const BatchFunction& target,
                           std::size_t samples, std::size_t d, const Stream& stream);
RiskEstimate estimate_risk(const BatchFunction& f, const BatchFunction& target,
                           std::size_t samples, std::size_t d, std::uint64_t seed);

}  // namespace ntkes
