#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace ntkes {

/// Whether inputs get a constant 1 appended before entering the first layer.
enum class BiasMode { biased, bias_free };

/// Input vector as seen by the first layer: [x; 1] when biased, x otherwise.
struct AugmentedPoint {
  Eigen::VectorXd coords;
};

AugmentedPoint augment(std::span<const double> x, BiasMode mode);
AugmentedPoint augment(const Eigen::VectorXd& x, BiasMode mode);

/// Augments every row of `points` (k x d); returns the (d+1) x k (or d x k)
/// matrix whose columns are the augmented points.
Eigen::MatrixXd augment_columns(const Eigen::MatrixXd& points, BiasMode mode);

/// Closed-form neural tangent kernel of the two-layer ReLU network:
///   <u~, v~> / (2 pi) * (pi - arccos(<u~/|u~|, v~/|v~|>)).
double ntk_eval(std::span<const double> u, std::span<const double> v, BiasMode mode);
double ntk_eval(const Eigen::VectorXd& u, const Eigen::VectorXd& v, BiasMode mode);

/// Kernel between the rows of `a` (k x d) and the rows of `b` (l x d).
Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, BiasMode mode);

/// Max over rows of |x~|.
double max_augmented_norm(const Eigen::MatrixXd& points, BiasMode mode);

/// Gram matrix of the NTK and its spectrum.
struct GramSpectrum {
  Eigen::MatrixXd gram;          // K
  Eigen::MatrixXd normalized;    // K / n
  Eigen::VectorXd eigenvalues;   // of K / n, nonincreasing, clamped at 0
  Eigen::MatrixXd eigenvectors;  // columns match `eigenvalues`
  std::size_t n = 0;
  /// Smallest eigenvalue before clamping.
  double min_raw_eigenvalue = 0.0;
  /// Set when min_raw_eigenvalue < -1e-8 * largest eigenvalue.
  bool negative_eigenvalue_warning = false;

  bool has_spectrum() const noexcept { return eigenvalues.size() == static_cast<Eigen::Index>(n); }

  /// Wraps an arbitrary symmetric matrix as a gram (used for synthetic spectra).
  static GramSpectrum from_gram(Eigen::MatrixXd gram);
};

/// Assembles K over the rows of `covariates` (n x d).
/// Throws InvalidDataset if two rows are bitwise identical.
GramSpectrum gram_matrix(const Eigen::MatrixXd& covariates, BiasMode mode);

/// Fills the spectrum of `g.normalized`.
GramSpectrum eigendecompose(GramSpectrum g);

/// OLS slope of log(lambda_j) against log(j) for 1-based j in [j_lo, j_hi].
double edr_slope(const Eigen::VectorXd& eigenvalues, std::size_t j_lo, std::size_t j_hi);

}  // namespace ntkes
