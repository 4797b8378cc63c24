#include "ntkes/kernel_gd.hpp"

#include <string>

#include "ntkes/errors.hpp"

namespace ntkes {

KernelGD::KernelGD(GramSpectrum spectrum, Eigen::MatrixXd covariates, Eigen::VectorXd responses, double eta,
                   BiasMode mode)
    : spectrum_(std::move(spectrum)),
      covariates_(std::move(covariates)),
      responses_(std::move(responses)),
      eta_(eta),
      mode_(mode) {
  const auto n = static_cast<Eigen::Index>(spectrum_.n);
  if (spectrum_.normalized.rows() != n || responses_.size() != n) {
    throw DimensionError("KernelGD: gram and responses disagree on n");
  }
  if (covariates_.size() != 0 && covariates_.rows() != n) {
    throw DimensionError("KernelGD: covariates and gram disagree on n");
  }
  if (!(eta_ > 0.0)) throw ConfigError("KernelGD: eta must be positive");
  alpha_history_.push_back(responses_);
  alpha_sums_.push_back(Eigen::VectorXd::Zero(n));
}

void KernelGD::extend_to(std::size_t t) {
  while (alpha_history_.size() <= t) {
    const Eigen::VectorXd& last = alpha_history_.back();
    Eigen::VectorXd next = last - eta_ * (spectrum_.normalized * last);
    alpha_sums_.push_back(alpha_sums_.back() + last);
    alpha_history_.push_back(std::move(next));
  }
}

const Eigen::VectorXd& KernelGD::alpha(std::size_t t) {
  extend_to(t);
  return alpha_history_[t];
}

Eigen::VectorXd KernelGD::residual_iterate(std::size_t t) { return -alpha(t); }

const Eigen::VectorXd& KernelGD::alpha_sum(std::size_t t) {
  extend_to(t);
  return alpha_sums_[t];
}

Eigen::VectorXd KernelGD::predict(std::size_t t, const Eigen::MatrixXd& queries) {
  if (t == 0) return Eigen::VectorXd::Zero(queries.rows());
  if (covariates_.size() == 0) throw DimensionError("KernelGD::predict: covariates were not supplied");
  const double scale = eta_ / static_cast<double>(spectrum_.n);
  return scale * (cross_kernel(queries, covariates_, mode_) * alpha_sum(t));
}

Eigen::VectorXd KernelGD::fitted(std::size_t t) {
  return eta_ * (spectrum_.normalized * alpha_sum(t));
}

Eigen::VectorXd h_component(const TrainingTrace& trace, const Eigen::MatrixXd& covariates, BiasMode mode,
                            double eta, std::size_t t, const Eigen::MatrixXd& queries) {
  if (trace.residuals.size() < t) {
    throw DimensionError("h_component: trace holds " + std::to_string(trace.residuals.size()) +
                         " residuals, need " + std::to_string(t));
  }
  if (t == 0) return Eigen::VectorXd::Zero(queries.rows());
  Eigen::VectorXd total = Eigen::VectorXd::Zero(covariates.rows());
  for (std::size_t s = 0; s < t; ++s) {
    if (trace.residuals[s].size() != covariates.rows()) {
      throw DimensionError("h_component: residual length differs from n");
    }
    total += trace.residuals[s];
  }
  const double scale = -eta / static_cast<double>(covariates.rows());
  return scale * (cross_kernel(queries, covariates, mode) * total);
}

double decomposition_sup_error(const Eigen::VectorXd& network_out, const Eigen::VectorXd& h_out) {
  if (network_out.size() != h_out.size()) throw DimensionError("decomposition_sup_error: length mismatch");
  if (network_out.size() == 0) return 0.0;
  return (network_out - h_out).cwiseAbs().maxCoeff();
}

}  // namespace ntkes
