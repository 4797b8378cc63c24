#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ntkes/data.hpp"
#include "ntkes/ntk_kernel.hpp"
#include "ntkes/rng.hpp"

namespace ntkes {

/// Two-layer ReLU network f(W, x) = m^{-1/2} sum_r a_r relu(w_r^T x~).
/// Only the first layer is trainable.
struct NetworkParams {
  Eigen::MatrixXd weights;        // m x p, row r is w_r
  Eigen::VectorXd signs;          // a_r in {-1, +1}
  Eigen::MatrixXd init_snapshot;  // W(0)
  double init_scale = 1.0;        // kappa
  BiasMode mode = BiasMode::biased;

  std::size_t width() const { return static_cast<std::size_t>(weights.rows()); }
  /// Dimension of the raw inputs (p - 1 when biased).
  std::size_t input_dim() const;
};

/// Symmetric initialisation: for every pair (2k, 2k+1) the weight rows are
/// one N(0, kappa^2 I) draw and the signs are opposite, so f(W(0), .) == 0.
/// Draws come from the "init" child of `seed`'s root stream.
NetworkParams init_symmetric(std::size_t m, std::size_t d, double kappa, std::uint64_t seed,
                             BiasMode mode = BiasMode::biased);
NetworkParams init_symmetric(std::size_t m, std::size_t d, double kappa, const Stream& stream,
                             BiasMode mode = BiasMode::biased);

/// Network output at every row of `points` (k x d).
Eigen::VectorXd forward_batch(const NetworkParams& p, const Eigen::MatrixXd& points);
/// Same, for points already augmented into the columns of `augmented` (p x k).
Eigen::VectorXd forward_augmented(const NetworkParams& p, const Eigen::MatrixXd& augmented);

struct GDConfig {
  double eta = 0.1;
  std::size_t max_steps = 0;
  std::uint64_t seed = 0;
};

/// Per-step record of a training run; index t is the state after t steps.
struct TrainingTrace {
  std::vector<Eigen::VectorXd> residuals;  // u(t) = yhat(t) - y
  std::vector<double> losses;              // |u(t)|^2 / (2n)
  std::vector<double> max_drift;           // max_r |w_r(t) - w_r(0)|
};

/// One full-batch GD step on the quadratic loss. Returns u(t), the residual
/// at the weights before the update.
Eigen::VectorXd gd_step(NetworkParams& p, const TrainingSet& s, double eta);

/// Called after the state at step t has been recorded, before step t+1.
using StepObserver = std::function<void(std::size_t step, const NetworkParams&)>;

/// Runs exactly cfg.max_steps GD steps. Requires eta < 2 / u0^2.
/// Throws ConfigError for an unstable step size and DivergenceError when the
/// loss stops being finite.
TrainingTrace train(NetworkParams& p, const TrainingSet& s, const GDConfig& cfg,
                    const StepObserver& observer = {});

/// max_r |w_r - w_r(0)|_2.
double weight_drift(const NetworkParams& p);

}  // namespace ntkes
