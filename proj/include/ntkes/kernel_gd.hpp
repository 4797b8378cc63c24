#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "ntkes/ntk_kernel.hpp"
#include "ntkes/network.hpp"

namespace ntkes {

/// Kernel regression trained by GD on the NTK: the infinite-width comparator.
///
/// alpha(t) = (I - eta K_n)^t y is built one matrix-vector product per step;
/// the fitted function after t steps is
///   f_t(x) = eta/n * sum_{t' < t} sum_i K(x, x_i) alpha_i(t').
class KernelGD {
 public:
  /// `spectrum` must be the gram of `covariates`; its eigenpairs are optional.
  KernelGD(GramSpectrum spectrum, Eigen::MatrixXd covariates, Eigen::VectorXd responses, double eta,
           BiasMode mode = BiasMode::biased);

  const GramSpectrum& spectrum() const { return spectrum_; }
  double eta() const { return eta_; }
  std::size_t size() const { return spectrum_.n; }

  const Eigen::VectorXd& alpha(std::size_t t);
  /// -(I - eta K_n)^t y, the training residual after t steps.
  Eigen::VectorXd residual_iterate(std::size_t t);
  /// sum_{t' < t} alpha(t').
  const Eigen::VectorXd& alpha_sum(std::size_t t);

  /// f_t at the rows of `queries` (k x d); zeros at t = 0.
  Eigen::VectorXd predict(std::size_t t, const Eigen::MatrixXd& queries);
  /// f_t at the training points: (I - (I - eta K_n)^t) y.
  Eigen::VectorXd fitted(std::size_t t);

  std::size_t history_length() const { return alpha_history_.size(); }

 private:
  void extend_to(std::size_t t);

  GramSpectrum spectrum_;
  Eigen::MatrixXd covariates_;
  Eigen::VectorXd responses_;
  double eta_;
  BiasMode mode_;
  std::vector<Eigen::VectorXd> alpha_history_;
  std::vector<Eigen::VectorXd> alpha_sums_;  // alpha_sums_[t] = sum_{t' < t} alpha(t')
};

/// h_t(x) = -eta/n * sum_{t' < t} sum_j K(x, x_j) u_j(t'), the RKHS part of a
/// trained network built from its recorded residuals.
Eigen::VectorXd h_component(const TrainingTrace& trace, const Eigen::MatrixXd& covariates, BiasMode mode,
                            double eta, std::size_t t, const Eigen::MatrixXd& queries);

/// max_i |network_out[i] - h_out[i]|: sup-norm estimate of the remainder e_t.
double decomposition_sup_error(const Eigen::VectorXd& network_out, const Eigen::VectorXd& h_out);

}  // namespace ntkes
