#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ntkes/network.hpp"

namespace ntkes {

/// Finite-width estimate of the NTK from the initial weights:
///   (1/m) sum_r u~^T v~ 1{w_r(0)^T u~ >= 0} 1{w_r(0)^T v~ >= 0}.
double hat_h(const NetworkParams& p, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Fraction of initial neurons with |w_r(0)^T u~| <= radius.
double hat_v_R(const NetworkParams& p, const Eigen::VectorXd& u, double radius);

struct DeviationScan {
  std::vector<std::size_t> widths;
  std::vector<double> sup_devs;  // max over the probe grid of |K - hat_h|
  std::size_t grid_size = 0;
  std::uint64_t seed = 0;
};

/// For each width, draws one W(0) (keyed by seed and width) and records the
/// largest |ntk_eval(u, v) - hat_h(u, v)| over a probe grid of sphere pairs
/// shared by all widths.
DeviationScan sup_deviation_scan(const std::vector<std::size_t>& widths, std::size_t grid_size, std::size_t d,
                                 double kappa, std::uint64_t seed, BiasMode mode = BiasMode::biased);

/// Same scan over caller-supplied probe pairs (rows of `us` and `vs`).
DeviationScan sup_deviation_scan(const std::vector<std::size_t>& widths, const Eigen::MatrixXd& us,
                                 const Eigen::MatrixXd& vs, double kappa, std::uint64_t seed,
                                 BiasMode mode = BiasMode::biased);

}  // namespace ntkes
