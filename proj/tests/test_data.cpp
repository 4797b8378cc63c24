#include <doctest.h>

#include <cmath>

#include "ntkes/data.hpp"
#include "ntkes/errors.hpp"
#include "oracles.hpp"

using namespace ntkes;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("sphere samples have unit rows and are reproducible") {
  const MatrixXd x = sample_sphere(500, 5, 17);
  for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(std::abs(x.row(i).norm() - 1.0) <= 1e-12);
  CHECK(x == sample_sphere(500, 5, 17));
  CHECK(x != sample_sphere(500, 5, 18));
  CHECK(sample_sphere(200, 5, 17) == x.topRows(200));
  CHECK_THROWS_AS(sample_sphere(10, 1, 1), ConfigError);
}

TEST_CASE("sphere sample coordinates are centred") {
  const std::size_t n = 100000;
  const MatrixXd x = sample_sphere(n, 5, 2024);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  for (Eigen::Index k = 0; k < 5; ++k) CHECK(std::abs(mean[k]) <= 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("linear target") {
  VectorXd s(3);
  s << 1, -2, 0.5;
  const Target t = make_linear_target(s);
  MatrixXd x(2, 3);
  x << 1, 0, 0, 0.2, 0.3, 0.4;
  const VectorXd v = t(x);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == doctest::Approx(0.2 - 0.6 + 0.2));
  CHECK_FALSE(t.mu0().has_value());
  CHECK(t.input_dim() == 3);
}

TEST_CASE("rkhs target norm and reproducing identity") {
  MatrixXd z(1, 3);
  z << 0, 1, 0;
  const Target single = make_rkhs_target(z, VectorXd::Ones(1), BiasMode::biased);
  CHECK(*single.mu0() == doctest::Approx(1.0).epsilon(1e-14));

  const Target zero = make_rkhs_target(sample_sphere(5, 3, 1), VectorXd::Zero(5), BiasMode::biased);
  CHECK(*zero.mu0() == 0.0);
  CHECK(zero(sample_sphere(10, 3, 2)).cwiseAbs().maxCoeff() == 0.0);

  const MatrixXd centers = sample_sphere(30, 4, 9);
  VectorXd c(30);
  const Stream cs = Stream::root(4);
  for (Eigen::Index i = 0; i < 30; ++i) c[i] = cs.normal(static_cast<std::uint64_t>(i));
  const Target f = make_rkhs_target(centers, c, BiasMode::biased);
  const VectorXd at_centers = f(centers);
  MatrixXd kzz(30, 30);
  for (Eigen::Index i = 0; i < 30; ++i)
    for (Eigen::Index j = 0; j < 30; ++j) kzz(i, j) = oracle::ntk(centers.row(i).transpose(), centers.row(j).transpose());
  CHECK((at_centers - kzz * c).cwiseAbs().maxCoeff() <= 1e-10);
  const double mu0 = *f.mu0();
  CHECK(c.dot(at_centers) == doctest::Approx(mu0 * mu0).epsilon(1e-8));
  CHECK(mu0 * mu0 >= -1e-10);

  MatrixXd dup(2, 3);
  dup << 1, 0, 0, 1, 0, 0;
  CHECK_THROWS(make_rkhs_target(dup, VectorXd::Ones(2), BiasMode::biased));
}

TEST_CASE("noise") {
  VectorXd clean(4);
  clean << 1.0, -0.0, 3.5, -2.0;
  const VectorXd same = add_noise(clean, 0.0, 5);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::signbit(same[i]) == std::signbit(clean[i]));
  CHECK(same == clean);
  CHECK_THROWS_AS(add_noise(clean, -1.0, 5), DomainError);

  const std::size_t n = 100000;
  const double sigma0 = 0.7;
  const VectorXd w = add_noise(VectorXd::Zero(static_cast<Eigen::Index>(n)), sigma0, 12);
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / static_cast<double>(n - 1);
  CHECK(std::abs(var / (sigma0 * sigma0) - 1.0) < 0.05);
  CHECK(w == add_noise(VectorXd::Zero(static_cast<Eigen::Index>(n)), sigma0, 12));
}

TEST_CASE("seed streams do not interact") {
  // Consuming more of one stream must not change another.
  const Stream root = Stream::root(77);
  const MatrixXd data_small = sample_sphere(10, 3, root.child("data"));
  const VectorXd noise_a = add_noise(VectorXd::Zero(10), 1.0, root.child("noise"));
  const MatrixXd data_big = sample_sphere(1000, 3, root.child("data"));
  const VectorXd noise_b = add_noise(VectorXd::Zero(500), 1.0, root.child("noise"));
  CHECK(data_big.topRows(10) == data_small);
  CHECK(noise_b.head(10) == noise_a);
  CHECK(sample_sphere(10, 3, root.child("init")) != data_small);
}

TEST_CASE("training set assembly") {
  const MatrixXd x = sample_sphere(50, 3, 3);
  VectorXd s(3);
  s << 1, 1, 1;
  const Target t = make_linear_target(s);
  const TrainingSet ts = make_training_set(x, t, 0.5, Stream::root(3).child("noise"));
  CHECK(ts.size() == 50);
  CHECK(ts.dim() == 3);
  CHECK(ts.clean_targets == t(x));
  CHECK(ts.responses == add_noise(ts.clean_targets, 0.5, Stream::root(3).child("noise")));
}

TEST_CASE("risk estimation") {
  VectorXd s(4);
  s << 0.5, -1, 2, 0;
  const Target t = make_linear_target(s);
  const BatchFunction target = [&](const MatrixXd& x) { return t(x); };
  const RiskEstimate exact = estimate_risk(target, target, 1000, 4, 1);
  CHECK(exact.mean == 0.0);
  CHECK(exact.std_error == 0.0);

  const double delta = 0.25;
  const BatchFunction offset = [&](const MatrixXd& x) { return VectorXd(t(x).array() + delta); };
  CHECK(estimate_risk(offset, target, 100, 4, 1).mean == doctest::Approx(delta * delta).epsilon(1e-12));

  const BatchFunction zero = [](const MatrixXd& x) { return VectorXd::Zero(x.rows()); };
  const RiskEstimate small = estimate_risk(zero, target, 100, 4, 3);
  const RiskEstimate large = estimate_risk(zero, target, 10000, 4, 3);
  const double ratio = large.std_error / small.std_error;
  CHECK(ratio >= 0.05);
  CHECK(ratio <= 0.2);

  // Unbiasedness for a noisy-offset estimator.
  const BatchFunction wobble = [&](const MatrixXd& x) {
    VectorXd v = t(x);
    v.array() += delta + 0.1 * x.col(0).array();
    return v;
  };
  double sum = 0.0, sq = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const double m = estimate_risk(wobble, target, 200, 4, Stream::root(500).child(static_cast<std::uint64_t>(r))).mean;
    sum += m;
    sq += m * m;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sq / reps - mean * mean) / (reps - 1));
  // E[(delta + 0.1 x_1)^2] = delta^2 + 0.01 / d on the sphere.
  CHECK(std::abs(mean - (delta * delta + 0.01 / 4.0)) <= 3.0 * se);
}
