#include "ntkes/network.hpp"

#include <cmath>
#include <string>

#include "ntkes/errors.hpp"
#include "ntkes/parallel.hpp"

namespace ntkes {

namespace {

// Neurons are processed in fixed blocks so every reduction has the same
// shape whatever the thread count. Even, so symmetric pairs never straddle.
constexpr Eigen::Index kChunk = 64;

Eigen::Index chunk_count(Eigen::Index m) { return (m + kChunk - 1) / kChunk; }

// In-place pairwise tree sum over the columns of `parts`; result in column 0.
void tree_reduce_columns(Eigen::MatrixXd& parts) {
  Eigen::Index live = parts.cols();
  while (live > 1) {
    const Eigen::Index half = live / 2;
    for (Eigen::Index i = 0; i < half; ++i) parts.col(i) = parts.col(2 * i) + parts.col(2 * i + 1);
    if (live % 2 == 1) parts.col(half) = parts.col(live - 1);
    live = half + live % 2;
  }
}

void check_layout(const NetworkParams& p, Eigen::Index rows) {
  if (p.weights.rows() == 0) throw DimensionError("network: zero width");
  if (p.signs.size() != p.weights.rows()) throw DimensionError("network: one sign per neuron required");
  if (rows != p.weights.cols()) throw DimensionError("network: input dimension mismatch");
}

// Output of one neuron block at every point: sum over neurons of
// a_r relu(pre(j, r)), accumulated pair by pair so that symmetric pairs
// cancel exactly. `pre` is k x b, column r holds w_r^T x~_j over j.
void block_output(const Eigen::MatrixXd& pre, const Eigen::Ref<const Eigen::VectorXd>& signs,
                  Eigen::Ref<Eigen::VectorXd> out) {
  out.setZero();
  const Eigen::Index b = pre.cols();
  Eigen::Index r = 0;
  for (; r + 1 < b; r += 2) {
    out.array() += signs[r] * pre.col(r).array().max(0.0) + signs[r + 1] * pre.col(r + 1).array().max(0.0);
  }
  if (r < b) out.array() += signs[r] * pre.col(r).array().max(0.0);
}

// Forward over augmented points given as rows of `points_t` (k x p).
Eigen::VectorXd forward_rows(const NetworkParams& p, const Eigen::MatrixXd& points_t) {
  const Eigen::Index m = p.weights.rows();
  const Eigen::Index k = points_t.rows();
  const Eigen::Index chunks = chunk_count(m);
  Eigen::MatrixXd parts(k, chunks);
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t task) {
    thread_local Eigen::MatrixXd pre;
    const auto c = static_cast<Eigen::Index>(task);
    const Eigen::Index r0 = c * kChunk;
    const Eigen::Index b = std::min(kChunk, m - r0);
    pre.resize(k, b);
    pre.noalias() = points_t * p.weights.middleRows(r0, b).transpose();
    block_output(pre, p.signs.segment(r0, b), parts.col(c));
  });
  tree_reduce_columns(parts);
  return parts.col(0) / std::sqrt(static_cast<double>(m));
}

// W <- W - eta/(n sqrt(m)) * diag(a) * 1{W X~ >= 0} * diag(u) * X~^T.
void apply_gradient(NetworkParams& p, const Eigen::MatrixXd& points_t, const Eigen::VectorXd& residual,
                    double eta) {
  const Eigen::Index m = p.weights.rows();
  const Eigen::Index n = points_t.rows();
  const Eigen::Index chunks = chunk_count(m);
  const Eigen::MatrixXd weighted = residual.asDiagonal() * points_t;  // n x p
  const double scale = eta / (static_cast<double>(n) * std::sqrt(static_cast<double>(m)));
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t task) {
    thread_local Eigen::MatrixXd pre;
    thread_local Eigen::MatrixXd grad;
    const auto c = static_cast<Eigen::Index>(task);
    const Eigen::Index r0 = c * kChunk;
    const Eigen::Index b = std::min(kChunk, m - r0);
    pre.resize(n, b);
    pre.noalias() = points_t * p.weights.middleRows(r0, b).transpose();
    pre = (pre.array() >= 0.0).cast<double>();
    grad.resize(b, points_t.cols());
    grad.noalias() = pre.transpose() * weighted;
    p.weights.middleRows(r0, b) -= scale * (p.signs.segment(r0, b).asDiagonal() * grad);
  });
}

Eigen::VectorXd residual_at(const NetworkParams& p, const Eigen::MatrixXd& points_t, const TrainingSet& s) {
  return forward_rows(p, points_t) - s.responses;
}

Eigen::MatrixXd augmented_rows(const NetworkParams& p, const Eigen::MatrixXd& points) {
  if (static_cast<std::size_t>(points.cols()) != p.input_dim()) {
    throw DimensionError("network: points have dimension " + std::to_string(points.cols()) +
                         ", expected " + std::to_string(p.input_dim()));
  }
  return augment_columns(points, p.mode).transpose();
}

}  // namespace

std::size_t NetworkParams::input_dim() const {
  const auto cols = static_cast<std::size_t>(weights.cols());
  return mode == BiasMode::biased ? cols - 1 : cols;
}

NetworkParams init_symmetric(std::size_t m, std::size_t d, double kappa, const Stream& stream,
                             BiasMode mode) {
  if (m < 2 || m % 2 != 0) {
    throw ConfigError("init_symmetric: width m must be even and >= 2 (got " + std::to_string(m) + ")");
  }
  if (d < 1) throw ConfigError("init_symmetric: input dimension must be >= 1");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("init_symmetric: kappa must lie in (0, 1]");

  const std::size_t p = mode == BiasMode::biased ? d + 1 : d;
  const Stream weight_stream = stream.child("weights");
  const Stream sign_stream = stream.child("signs");
  NetworkParams net;
  net.weights.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  net.signs.resize(static_cast<Eigen::Index>(m));
  for (std::size_t pair = 0; pair < m / 2; ++pair) {
    const auto lo = static_cast<Eigen::Index>(2 * pair);
    for (std::size_t k = 0; k < p; ++k) {
      const double w = kappa * weight_stream.normal(pair * p + k);
      net.weights(lo, static_cast<Eigen::Index>(k)) = w;
      net.weights(lo + 1, static_cast<Eigen::Index>(k)) = w;
    }
    const double a = sign_stream.sign(pair);
    net.signs[lo + 1] = a;
    net.signs[lo] = -a;
  }
  net.init_snapshot = net.weights;
  net.init_scale = kappa;
  net.mode = mode;
  return net;
}

NetworkParams init_symmetric(std::size_t m, std::size_t d, double kappa, std::uint64_t seed,
                             BiasMode mode) {
  return init_symmetric(m, d, kappa, Stream::root(seed).child("init"), mode);
}

Eigen::VectorXd forward_batch(const NetworkParams& p, const Eigen::MatrixXd& points) {
  const Eigen::MatrixXd rows = augmented_rows(p, points);
  check_layout(p, rows.cols());
  return forward_rows(p, rows);
}

Eigen::VectorXd forward_augmented(const NetworkParams& p, const Eigen::MatrixXd& augmented) {
  check_layout(p, augmented.rows());
  return forward_rows(p, augmented.transpose());
}

Eigen::VectorXd gd_step(NetworkParams& p, const TrainingSet& s, double eta) {
  if (!(eta >= 0.0)) throw ConfigError("gd_step: eta must be nonnegative");
  const Eigen::MatrixXd rows = augmented_rows(p, s.covariates);
  check_layout(p, rows.cols());
  if (s.responses.size() != rows.rows()) throw DimensionError("gd_step: one response per covariate required");
  Eigen::VectorXd u = residual_at(p, rows, s);
  if (eta > 0.0) apply_gradient(p, rows, u, eta);
  return u;
}

TrainingTrace train(NetworkParams& p, const TrainingSet& s, const GDConfig& cfg,
                    const StepObserver& observer) {
  if (p.width() % 2 != 0) throw ConfigError("train: width m must be even");
  if (!(cfg.eta > 0.0)) throw ConfigError("train: eta must be positive");
  const Eigen::MatrixXd rows = augmented_rows(p, s.covariates);
  check_layout(p, rows.cols());
  if (s.responses.size() != rows.rows()) throw DimensionError("train: one response per covariate required");

  const double u0 = max_augmented_norm(s.covariates, p.mode);
  if (!(cfg.eta < 2.0 / (u0 * u0))) {
    throw ConfigError("train: eta = " + std::to_string(cfg.eta) + " violates eta < 2/u0^2 = " +
                      std::to_string(2.0 / (u0 * u0)));
  }

  const double two_n = 2.0 * static_cast<double>(s.size());
  TrainingTrace trace;
  trace.residuals.reserve(cfg.max_steps + 1);
  trace.losses.reserve(cfg.max_steps + 1);
  trace.max_drift.reserve(cfg.max_steps + 1);
  for (std::size_t t = 0;; ++t) {
    Eigen::VectorXd u = residual_at(p, rows, s);
    const double loss = u.squaredNorm() / two_n;
    if (!std::isfinite(loss)) {
      throw DivergenceError("train: loss is not finite at step " + std::to_string(t), t);
    }
    trace.losses.push_back(loss);
    trace.max_drift.push_back(weight_drift(p));
    trace.residuals.push_back(u);
    if (observer) observer(t, p);
    if (t == cfg.max_steps) break;
    apply_gradient(p, rows, trace.residuals.back(), cfg.eta);
  }
  return trace;
}

double weight_drift(const NetworkParams& p) {
  if (p.init_snapshot.rows() != p.weights.rows() || p.init_snapshot.cols() != p.weights.cols()) {
    throw DimensionError("weight_drift: snapshot shape differs from weights");
  }
  return (p.weights - p.init_snapshot).rowwise().norm().maxCoeff();
}

}  // namespace ntkes
