#include "ntkes/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ntkes/data.hpp"
#include "ntkes/errors.hpp"
#include "ntkes/parallel.hpp"
#include "ntkes/rng.hpp"

namespace ntkes {

namespace {

Eigen::VectorXd augmented_for(const NetworkParams& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd a = augment(x, p.mode).coords;
  if (a.size() != p.init_snapshot.cols()) throw DimensionError("input dimension does not match the network");
  return a;
}

constexpr Eigen::Index kRowBlock = 4096;

}  // namespace

double hat_h(const NetworkParams& p, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const Eigen::VectorXd ua = augmented_for(p, u);
  const Eigen::VectorXd va = augmented_for(p, v);
  const Eigen::VectorXd pu = p.init_snapshot * ua;
  const Eigen::VectorXd pv = p.init_snapshot * va;
  std::size_t both = 0;
  for (Eigen::Index r = 0; r < pu.size(); ++r) both += (pu[r] >= 0.0 && pv[r] >= 0.0) ? 1 : 0;
  return ua.dot(va) * static_cast<double>(both) / static_cast<double>(pu.size());
}

double hat_v_R(const NetworkParams& p, const Eigen::VectorXd& u, double radius) {
  if (!(radius >= 0.0)) throw DomainError("hat_v_R: radius must be nonnegative");
  const Eigen::VectorXd pu = p.init_snapshot * augmented_for(p, u);
  std::size_t inside = 0;
  for (Eigen::Index r = 0; r < pu.size(); ++r) inside += std::abs(pu[r]) <= radius ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(pu.size());
}

DeviationScan sup_deviation_scan(const std::vector<std::size_t>& widths, const Eigen::MatrixXd& us,
                                 const Eigen::MatrixXd& vs, double kappa, std::uint64_t seed, BiasMode mode) {
  if (widths.size() < 2) throw ConfigError("sup_deviation_scan: need at least two widths");
  for (std::size_t m : widths) {
    if (m < 2 || m % 2 != 0) throw ConfigError("sup_deviation_scan: width " + std::to_string(m) + " is not even");
  }
  if (us.rows() != vs.rows() || us.cols() != vs.cols()) throw DimensionError("sup_deviation_scan: probe shapes differ");
  const auto grid = static_cast<std::size_t>(us.rows());
  if (grid < 10) throw ConfigError("sup_deviation_scan: grid_size must be at least 10");

  const Eigen::MatrixXd ua = augment_columns(us, mode);
  const Eigen::MatrixXd va = augment_columns(vs, mode);
  std::vector<double> exact(grid), inner(grid);
  for (std::size_t g = 0; g < grid; ++g) {
    const auto gi = static_cast<Eigen::Index>(g);
    exact[g] = ntk_eval(Eigen::VectorXd(us.row(gi).transpose()), Eigen::VectorXd(vs.row(gi).transpose()), mode);
    inner[g] = ua.col(gi).dot(va.col(gi));
  }

  DeviationScan scan;
  scan.widths = widths;
  scan.grid_size = grid;
  scan.seed = seed;
  scan.sup_devs.assign(widths.size(), 0.0);
  const Stream base = Stream::root(seed).child("scan");
  const auto d = static_cast<std::size_t>(us.cols());

  parallel_for(widths.size(), [&](std::size_t w) {
    const std::size_t m = widths[w];
    const NetworkParams p = init_symmetric(m, d, kappa, base.child(static_cast<std::uint64_t>(m)), mode);
    std::vector<std::size_t> both(grid, 0);
    for (Eigen::Index r0 = 0; r0 < p.init_snapshot.rows(); r0 += kRowBlock) {
      const Eigen::Index rows = std::min<Eigen::Index>(kRowBlock, p.init_snapshot.rows() - r0);
      const Eigen::MatrixXd pu = p.init_snapshot.middleRows(r0, rows) * ua;
      const Eigen::MatrixXd pv = p.init_snapshot.middleRows(r0, rows) * va;
      for (std::size_t g = 0; g < grid; ++g) {
        const auto gi = static_cast<Eigen::Index>(g);
        for (Eigen::Index r = 0; r < rows; ++r) both[g] += (pu(r, gi) >= 0.0 && pv(r, gi) >= 0.0) ? 1 : 0;
      }
    }
    double sup = 0.0;
    for (std::size_t g = 0; g < grid; ++g) {
      const double est = inner[g] * static_cast<double>(both[g]) / static_cast<double>(m);
      sup = std::max(sup, std::abs(exact[g] - est));
    }
    scan.sup_devs[w] = sup;
  });
  return scan;
}

DeviationScan sup_deviation_scan(const std::vector<std::size_t>& widths, std::size_t grid_size, std::size_t d,
                                 double kappa, std::uint64_t seed, BiasMode mode) {
  if (grid_size < 10) throw ConfigError("sup_deviation_scan: grid_size must be at least 10");
  const Stream probes = Stream::root(seed).child("probe-grid");
  const Eigen::MatrixXd us = sample_sphere(grid_size, d, probes.child("u"));
  const Eigen::MatrixXd vs = sample_sphere(grid_size, d, probes.child("v"));
  return sup_deviation_scan(widths, us, vs, kappa, seed, mode);
}

}  // namespace ntkes
