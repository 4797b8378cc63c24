#include "ntkes/ntk_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "ntkes/errors.hpp"
#include "ntkes/parallel.hpp"
#include "ntkes/stats.hpp"

namespace ntkes {

namespace {

double dot(const double* u, const double* v, Eigen::Index p) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) s += u[k] * v[k];
  return s;
}

// uu and vv are the squared norms; sqrt(uu * vv) rather than |u||v| keeps the
// cosine at exactly 1 when u == v.
double ntk_from_augmented(const double* u, const double* v, Eigen::Index p, double uu, double vv) {
  const double inner = dot(u, v, p);
  const double cosine = std::clamp(inner / std::sqrt(uu * vv), -1.0, 1.0);
  return inner * (std::numbers::pi - std::acos(cosine)) / (2.0 * std::numbers::pi);
}

void require_nonzero(double squared_norm, BiasMode mode) {
  if (mode == BiasMode::bias_free && !(squared_norm > 0.0)) {
    throw DomainError("ntk_eval: bias-free kernel is undefined at the zero vector");
  }
}

}  // namespace

AugmentedPoint augment(std::span<const double> x, BiasMode mode) {
  if (x.empty()) throw DimensionError("augment: input vector is empty");
  const auto d = static_cast<Eigen::Index>(x.size());
  AugmentedPoint out;
  out.coords.resize(mode == BiasMode::biased ? d + 1 : d);
  for (Eigen::Index k = 0; k < d; ++k) out.coords[k] = x[static_cast<std::size_t>(k)];
  if (mode == BiasMode::biased) out.coords[d] = 1.0;
  return out;
}

AugmentedPoint augment(const Eigen::VectorXd& x, BiasMode mode) {
  return augment(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), mode);
}

Eigen::MatrixXd augment_columns(const Eigen::MatrixXd& points, BiasMode mode) {
  if (points.cols() == 0) throw DimensionError("augment_columns: zero-dimensional points");
  const Eigen::Index d = points.cols();
  Eigen::MatrixXd out(mode == BiasMode::biased ? d + 1 : d, points.rows());
  out.topRows(d) = points.transpose();
  if (mode == BiasMode::biased) out.row(d).setOnes();
  return out;
}

double ntk_eval(std::span<const double> u, std::span<const double> v, BiasMode mode) {
  if (u.size() != v.size()) throw DimensionError("ntk_eval: arguments differ in dimension");
  const AugmentedPoint au = augment(u, mode);
  const AugmentedPoint av = augment(v, mode);
  const Eigen::Index p = au.coords.size();
  const double uu = dot(au.coords.data(), au.coords.data(), p);
  const double vv = dot(av.coords.data(), av.coords.data(), p);
  require_nonzero(uu, mode);
  require_nonzero(vv, mode);
  return ntk_from_augmented(au.coords.data(), av.coords.data(), p, uu, vv);
}

double ntk_eval(const Eigen::VectorXd& u, const Eigen::VectorXd& v, BiasMode mode) {
  return ntk_eval(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                  std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), mode);
}

Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, BiasMode mode) {
  if (a.cols() != b.cols()) throw DimensionError("cross_kernel: point sets differ in dimension");
  const Eigen::MatrixXd aa = augment_columns(a, mode);
  const Eigen::MatrixXd bb = augment_columns(b, mode);
  const Eigen::Index p = aa.rows();
  std::vector<double> a_sq(static_cast<std::size_t>(a.rows()));
  std::vector<double> b_sq(static_cast<std::size_t>(b.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    a_sq[i] = dot(aa.col(i).data(), aa.col(i).data(), p);
    require_nonzero(a_sq[i], mode);
  }
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    b_sq[j] = dot(bb.col(j).data(), bb.col(j).data(), p);
    require_nonzero(b_sq[j], mode);
  }
  Eigen::MatrixXd out(a.rows(), b.rows());
  parallel_for(static_cast<std::size_t>(a.rows()), [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      out(ii, j) = ntk_from_augmented(aa.col(ii).data(), bb.col(j).data(), p, a_sq[i], b_sq[j]);
    }
  });
  return out;
}

double max_augmented_norm(const Eigen::MatrixXd& points, BiasMode mode) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double sq = points.row(i).squaredNorm();
    if (mode == BiasMode::biased) sq += 1.0;
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

GramSpectrum GramSpectrum::from_gram(Eigen::MatrixXd gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) {
    throw DimensionError("GramSpectrum: gram must be square and nonempty");
  }
  GramSpectrum g;
  g.n = static_cast<std::size_t>(gram.rows());
  g.normalized = gram / static_cast<double>(g.n);
  g.gram = std::move(gram);
  return g;
}

GramSpectrum gram_matrix(const Eigen::MatrixXd& covariates, BiasMode mode) {
  const Eigen::Index n = covariates.rows();
  if (n == 0) throw InvalidDataset("gram_matrix: empty training set");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto row_less = [&](Eigen::Index i, Eigen::Index j) {
    for (Eigen::Index k = 0; k < covariates.cols(); ++k) {
      if (covariates(i, k) != covariates(j, k)) return covariates(i, k) < covariates(j, k);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (!row_less(order[k - 1], order[k]) && !row_less(order[k], order[k - 1])) {
      throw InvalidDataset("gram_matrix: training covariates " + std::to_string(order[k - 1]) +
                           " and " + std::to_string(order[k]) + " coincide");
    }
  }

  const Eigen::MatrixXd aug = augment_columns(covariates, mode);
  const Eigen::Index p = aug.rows();
  std::vector<double> sq(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    sq[i] = dot(aug.col(i).data(), aug.col(i).data(), p);
    require_nonzero(sq[i], mode);
  }

  Eigen::MatrixXd gram(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t task) {
    const auto i = static_cast<Eigen::Index>(task);
    for (Eigen::Index j = i; j < n; ++j) {
      const double k = ntk_from_augmented(aug.col(i).data(), aug.col(j).data(), p, sq[i], sq[j]);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  });
  return GramSpectrum::from_gram(std::move(gram));
}

GramSpectrum eigendecompose(GramSpectrum g) {
  if (g.normalized.rows() == 0) throw DimensionError("eigendecompose: gram not assembled");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g.normalized);
  const Eigen::Index n = g.normalized.rows();
  if (solver.info() != Eigen::Success) {
    double residual = std::numeric_limits<double>::infinity();
    if (solver.eigenvalues().allFinite() && solver.eigenvectors().allFinite()) {
      residual = (solver.eigenvectors() * solver.eigenvalues().asDiagonal() *
                      solver.eigenvectors().transpose() -
                  g.normalized)
                     .cwiseAbs()
                     .maxCoeff();
    }
    throw NumericalFailure("eigendecompose: symmetric eigensolver did not converge", residual);
  }
  // Solver returns ascending order.
  g.eigenvalues = solver.eigenvalues().reverse();
  g.eigenvectors = solver.eigenvectors().rowwise().reverse();
  g.min_raw_eigenvalue = g.eigenvalues[n - 1];
  const double top = std::max(g.eigenvalues[0], 0.0);
  g.negative_eigenvalue_warning = g.min_raw_eigenvalue < -1e-8 * top;
  g.eigenvalues = g.eigenvalues.cwiseMax(0.0);
  return g;
}

double edr_slope(const Eigen::VectorXd& eigenvalues, std::size_t j_lo, std::size_t j_hi) {
  const auto n = static_cast<std::size_t>(eigenvalues.size());
  if (j_lo < 1 || j_lo >= j_hi || j_hi > n) {
    throw DomainError("edr_slope: need 1 <= j_lo < j_hi <= n");
  }
  std::vector<double> lx, ly;
  for (std::size_t j = j_lo; j <= j_hi; ++j) {
    const double lambda = eigenvalues[static_cast<Eigen::Index>(j - 1)];
    if (!(lambda > 0.0)) {
      throw DomainError("edr_slope: eigenvalue " + std::to_string(j) + " is not positive");
    }
    lx.push_back(std::log(static_cast<double>(j)));
    ly.push_back(std::log(lambda));
  }
  return ols_slope(lx, ly);
}

}  // namespace ntkes
