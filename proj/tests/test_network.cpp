#include <doctest.h>

#include <cmath>

#include "ntkes/data.hpp"
#include "ntkes/errors.hpp"
#include "ntkes/network.hpp"
#include "ntkes/parallel.hpp"
#include "oracles.hpp"

using namespace ntkes;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

NetworkParams manual(MatrixXd w, VectorXd a) {
  NetworkParams p;
  p.weights = std::move(w);
  p.init_snapshot = p.weights;
  p.signs = std::move(a);
  return p;
}

TrainingSet dataset(std::size_t n, std::size_t d, std::uint64_t seed, double sigma0 = 0.0) {
  const Stream root = Stream::root(seed);
  VectorXd s = sample_sphere(1, d, root.child("s")).row(0).transpose();
  return make_training_set(sample_sphere(n, d, root.child("x")), make_linear_target(s), sigma0, root.child("w"));
}

}  // namespace

TEST_CASE("symmetric initialisation") {
  const NetworkParams p = init_symmetric(2, 4, 1.0, 3);
  CHECK(p.weights.row(0) == p.weights.row(1));
  CHECK(p.signs[0] == -p.signs[1]);
  CHECK(std::abs(p.signs[0]) == 1.0);
  CHECK(p.weights.cols() == 5);
  CHECK(p.init_snapshot == p.weights);

  const NetworkParams q = init_symmetric(64, 3, 0.5, 9);
  for (Eigen::Index k = 0; k < 32; ++k) {
    CHECK(q.weights.row(2 * k) == q.weights.row(2 * k + 1));
    CHECK(q.signs[2 * k] == -q.signs[2 * k + 1]);
  }
  const NetworkParams again = init_symmetric(64, 3, 0.5, 9);
  CHECK(again.weights == q.weights);
  CHECK(again.signs == q.signs);
  CHECK(init_symmetric(64, 3, 0.5, 9, BiasMode::bias_free).weights.cols() == 3);

  CHECK_THROWS_AS(init_symmetric(3, 3, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(init_symmetric(0, 3, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(init_symmetric(4, 3, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(init_symmetric(4, 3, 1.5, 1), ConfigError);
}

TEST_CASE("initial weights have the requested scale") {
  const NetworkParams p = init_symmetric(20000, 4, 0.5, 1);
  const double var = p.weights.array().square().mean();
  CHECK(var == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("network output vanishes at initialisation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NetworkParams p = init_symmetric(2 * (1 + seed * 37), 6, 1.0, seed);
    const VectorXd f = forward_batch(p, 3.0 * sample_sphere(1000, 6, seed + 100));
    CHECK(f.cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("single-neuron forward values") {
  MatrixXd w = MatrixXd::Zero(1, 4);
  w(0, 0) = 1.0;
  MatrixXd x = MatrixXd::Zero(1, 3);
  x(0, 0) = 1.0;
  CHECK(forward_batch(manual(w, VectorXd::Ones(1)), x)[0] == 1.0);
  w(0, 0) = -1.0;
  CHECK(forward_batch(manual(w, VectorXd::Ones(1)), x)[0] == 0.0);
  CHECK_THROWS_AS(forward_batch(manual(w, VectorXd::Ones(1)), MatrixXd::Zero(1, 2)), DimensionError);
}

TEST_CASE("forward agrees with the per-neuron oracle") {
  const Stream s = Stream::root(4);
  const Eigen::Index m = 301, p = 5;
  MatrixXd w(m, p);
  VectorXd a(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    a[r] = s.child("a").sign(static_cast<std::uint64_t>(r));
    for (Eigen::Index k = 0; k < p; ++k) w(r, k) = s.child("w").normal(static_cast<std::uint64_t>(r * p + k));
  }
  const NetworkParams net = manual(w, a);
  const MatrixXd x = sample_sphere(40, 4, 8);
  const VectorXd f = forward_batch(net, x);
  for (Eigen::Index i = 0; i < 40; ++i) CHECK(f[i] == doctest::Approx(oracle::forward(w, a, x.row(i).transpose())).epsilon(1e-12));
}

TEST_CASE("forward is bit-identical across thread counts") {
  NetworkParams p = init_symmetric(1000, 5, 1.0, 6);
  p.weights.array() += 0.01;
  const MatrixXd x = sample_sphere(77, 5, 1);
  set_thread_count(1);
  const VectorXd a = forward_batch(p, x);
  set_thread_count(4);
  const VectorXd b = forward_batch(p, x);
  set_thread_count(1);
  CHECK(a == b);
}

TEST_CASE("gd_step edge cases") {
  const TrainingSet s = dataset(5, 3, 2);
  NetworkParams p = init_symmetric(8, 3, 1.0, 2);
  const MatrixXd before = p.weights;
  const VectorXd u = gd_step(p, s, 0.0);
  CHECK(p.weights == before);
  CHECK(u == VectorXd(-s.responses));
  CHECK_THROWS_AS(gd_step(p, s, -0.1), ConfigError);
}

TEST_CASE("one step on a single point matches the hand gradient") {
  // n = 1, m = 2, x = e1: dL/dw_r = a_r / sqrt(2) * 1{w_r.x~ >= 0} * (f - y) * x~.
  NetworkParams p = init_symmetric(2, 3, 1.0, 5);
  TrainingSet s;
  s.covariates = MatrixXd::Zero(1, 3);
  s.covariates(0, 0) = 1.0;
  s.responses = VectorXd::Constant(1, 0.7);
  s.clean_targets = s.responses;
  const VectorXd xt = (VectorXd(4) << 1, 0, 0, 1).finished();
  const double eta = 0.3;
  const MatrixXd w0 = p.weights;
  const double f0 = oracle::forward(w0, p.signs, s.covariates.row(0).transpose());
  CHECK(f0 == 0.0);
  gd_step(p, s, eta);
  for (Eigen::Index r = 0; r < 2; ++r) {
    const bool active = w0.row(r).dot(xt) >= 0.0;
    const VectorXd expected = w0.row(r).transpose() - eta * p.signs[r] / std::sqrt(2.0) * (active ? 1.0 : 0.0) *
                                                          (f0 - 0.7) * xt;
    CHECK((p.weights.row(r).transpose() - expected).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("gradient matches central finite differences") {
  int checked = 0;
  for (std::uint64_t trial = 0; checked < 10 && trial < 200; ++trial) {
    const Stream s = Stream::root(1000 + trial);
    const std::size_t d = 1 + trial % 3;
    const std::size_t n = 1 + trial % 4;
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(trial % 8);
    const Eigen::Index p = static_cast<Eigen::Index>(d) + 1;
    MatrixXd w(m, p);
    VectorXd a(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      a[r] = s.child("a").sign(static_cast<std::uint64_t>(r));
      for (Eigen::Index k = 0; k < p; ++k) w(r, k) = s.child("w").normal(static_cast<std::uint64_t>(r * p + k));
    }
    MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = s.child("x").normal(static_cast<std::uint64_t>(i * 8 + k));
    TrainingSet ts;
    ts.covariates = x;
    ts.responses = VectorXd(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < ts.responses.size(); ++i) ts.responses[i] = s.child("y").normal(static_cast<std::uint64_t>(i));
    ts.clean_targets = ts.responses;

    const MatrixXd pre = w * augment_columns(x, BiasMode::biased);
    if (pre.cwiseAbs().minCoeff() < 1e-3) continue;  // too close to a kink for finite differences

    NetworkParams net = manual(w, a);
    const double eta = 1.0;
    gd_step(net, ts, eta);
    const MatrixXd analytic = (w - net.weights) / eta;

    const double h = 1e-6;
    MatrixXd numeric(m, p);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index k = 0; k < p; ++k) {
        MatrixXd wp = w, wm = w;
        wp(r, k) += h;
        wm(r, k) -= h;
        numeric(r, k) = (oracle::loss(wp, a, x, ts.responses) - oracle::loss(wm, a, x, ts.responses)) / (2 * h);
      }
    }
    const double scale = std::max(numeric.norm(), 1e-12);
    CHECK((analytic - numeric).norm() / scale <= 1e-5);
    ++checked;
  }
  CHECK(checked == 10);
}

TEST_CASE("a small step lowers the loss") {
  const TrainingSet s = dataset(20, 4, 3, 0.1);
  NetworkParams p = init_symmetric(512, 4, 1.0, 3);
  const VectorXd u0 = gd_step(p, s, 1e-3);
  const VectorXd u1 = gd_step(p, s, 0.0);
  CHECK(u1.squaredNorm() < u0.squaredNorm());
}

TEST_CASE("training trace contract") {
  const TrainingSet s = dataset(30, 3, 4, 0.2);
  NetworkParams p0 = init_symmetric(256, 3, 1.0, 4);
  const TrainingTrace empty = train(p0, s, GDConfig{0.5, 0, 0});
  CHECK(empty.residuals.size() == 1);
  CHECK(empty.residuals[0] == VectorXd(-s.responses));

  NetworkParams p = init_symmetric(256, 3, 1.0, 4);
  const std::size_t T = 40;
  std::size_t observed = 0;
  const TrainingTrace tr = train(p, s, GDConfig{0.5, T, 0}, [&](std::size_t t, const NetworkParams&) {
    CHECK(t == observed);
    ++observed;
  });
  CHECK(observed == T + 1);
  CHECK(tr.residuals.size() == T + 1);
  CHECK(tr.losses.size() == T + 1);
  CHECK(tr.max_drift.size() == T + 1);
  CHECK(tr.residuals[0] == VectorXd(-s.responses));
  double max_u = 0.0;
  for (std::size_t t = 0; t <= T; ++t) {
    CHECK(2.0 * 30.0 * tr.losses[t] == doctest::Approx(tr.residuals[t].squaredNorm()).epsilon(1e-14));
    max_u = std::max(max_u, tr.residuals[t].norm());
  }
  CHECK(tr.max_drift[0] == 0.0);
  CHECK(tr.max_drift[T] == weight_drift(p));
  const double u0 = max_augmented_norm(s.covariates, BiasMode::biased);
  CHECK(tr.max_drift[T] <= 0.5 * u0 * static_cast<double>(T) * max_u / std::sqrt(30.0 * 256.0));
  CHECK(p.signs == p0.signs);
}

TEST_CASE("training rejects unstable or invalid settings") {
  const TrainingSet s = dataset(10, 3, 5);
  NetworkParams p = init_symmetric(16, 3, 1.0, 5);
  CHECK_THROWS_AS(train(p, s, GDConfig{1.0, 5, 0}), ConfigError);  // u0^2 = 2
  CHECK_THROWS_AS(train(p, s, GDConfig{0.0, 5, 0}), ConfigError);

  TrainingSet huge = s;
  huge.responses.setConstant(1e300);
  try {
    train(p, huge, GDConfig{0.5, 5, 0});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 0);
  }

  NetworkParams odd = init_symmetric(16, 3, 1.0, 5);
  odd.weights.conservativeResize(15, Eigen::NoChange);
  odd.signs.conservativeResize(15);
  CHECK_THROWS_AS(train(odd, s, GDConfig{0.5, 5, 0}), ConfigError);
}

TEST_CASE("training is bit-identical across thread counts") {
  const TrainingSet s = dataset(25, 3, 6, 0.1);
  NetworkParams a = init_symmetric(640, 3, 1.0, 6);
  NetworkParams b = a;
  set_thread_count(1);
  train(a, s, GDConfig{0.5, 10, 0});
  set_thread_count(3);
  train(b, s, GDConfig{0.5, 10, 0});
  set_thread_count(1);
  CHECK(a.weights == b.weights);
}

TEST_CASE("wide network fits a noiseless linear target") {
  const TrainingSet s = dataset(50, 5, 7);
  NetworkParams p = init_symmetric(1 << 16, 5, 1.0, 7);
  const TrainingTrace tr = train(p, s, GDConfig{0.5, 200, 0});
  CHECK(tr.losses.back() < tr.losses.front() / 10.0);
}
