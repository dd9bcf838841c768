#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hemq/optimizers.hpp"
#include "test_util.hpp"

using namespace hemq;
using testutil::col;
using testutil::vec1;

TEST_CASE("normal_quantile reference values") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.25) == doctest::Approx(-0.6744897501960817)
                                     .epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054)
                                      .epsilon(1e-12));
  CHECK(normal_quantile(0.1) == -normal_quantile(0.9));
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
  // round trip through the normal CDF
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    const double x = normal_quantile(p);
    const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
    CHECK(cdf == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("exact_quantile_1d") {
  const auto uniform_q = exact_quantile_1d([](double p) { return p; }, 4);
  CHECK(uniform_q.points()(0, 0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(uniform_q.points()(1, 0) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(uniform_q.points()(2, 0) == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(uniform_q.points()(3, 0) == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(uniform_q.weights()(0) == doctest::Approx(0.25));

  const auto norm2 = exact_quantile_1d(normal_quantile, 2);
  CHECK(norm2.points()(0, 0) == doctest::Approx(-0.6744897501960817));
  CHECK(norm2.points()(1, 0) == doctest::Approx(0.6744897501960817));

  const auto med = exact_quantile_1d(normal_quantile, 1);
  CHECK(med.points()(0, 0) == 0.0);

  CHECK_THROWS_AS(exact_quantile_1d([](double p) { return -p; }, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(exact_quantile_1d(normal_quantile, 0),
                  std::invalid_argument);
}

TEST_CASE("exact quantiles are locally optimal for the analytic loss") {
  const int J = 8;
  const auto q = exact_quantile_1d(normal_quantile, J);
  const Vector mean = Vector::Zero(1);
  const double base = analytic_loss_energy_gaussian(q, mean, 1.0);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 0.01);
  auto qq = q;
  for (int t = 0; t < 200; ++t) {
    Matrix pts = q.points();
    for (int j = 0; j < J; ++j) pts(j, 0) += gauss(rng);
    qq.set_points(pts);
    CHECK(analytic_loss_energy_gaussian(qq, mean, 1.0) >= base - 1e-12);
  }
}

TEST_CASE("shemq: determinism and trajectory structure") {
  const auto target = TargetMeasure::gaussian(Vector::Zero(2), 1.0);
  OptimizerConfig cfg;
  cfg.seed = 42;
  cfg.max_iterations = 150;
  cfg.batch_size = 16;
  const auto a = shemq(KernelSpec::energy(), target, 4, cfg);
  const auto b = shemq(KernelSpec::energy(), target, 4, cfg);
  CHECK(a.final_points == b.final_points);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  CHECK(a.trajectory.size() <= 150);
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(a.trajectory[i].loss == b.trajectory[i].loss);
    CHECK(std::isfinite(a.trajectory[i].loss));
  }
  cfg.seed = 43;
  const auto c = shemq(KernelSpec::energy(), target, 4, cfg);
  CHECK(a.final_points != c.final_points);
}

TEST_CASE("shemq: single-atom target collapses to the atom") {
  const auto target = TargetMeasure::atomic(DiscreteMeasure::dirac(vec1(2.5)));
  OptimizerConfig cfg;
  cfg.seed = 1;
  cfg.max_iterations = 2000;
  cfg.batch_size = 8;
  const auto rec = shemq(KernelSpec::huber_energy(1.0, 1e-6), target, 1, cfg);
  CHECK(std::abs(rec.final_points(0, 0) - 2.5) <= 1e-3);
}

TEST_CASE("shemq: two-atom empirical target recovers both atoms") {
  const auto target = TargetMeasure::empirical(col({0.0, 1.0}));
  OptimizerConfig cfg;
  cfg.seed = 3;
  cfg.max_iterations = 1200;
  cfg.batch_size = 64;
  const auto rec = shemq(KernelSpec::huber_energy(1.0, 1e-6), target, 2, cfg);
  std::vector<double> pts = {rec.final_points(0, 0), rec.final_points(1, 0)};
  std::sort(pts.begin(), pts.end());
  CHECK(std::abs(pts[0] - 0.0) <= 0.05);
  CHECK(std::abs(pts[1] - 1.0) <= 0.05);
  CHECK(rec.final_weights(0) == doctest::Approx(0.5));
}

TEST_CASE("shemq: corrected loss changes reported value, not trajectory") {
  const auto target = TargetMeasure::gaussian(Vector::Zero(1), 1.0);
  OptimizerConfig cfg;
  cfg.seed = 10;
  cfg.max_iterations = 100;
  cfg.batch_size = 16;
  auto raw = shemq(KernelSpec::energy(), target, 3, cfg);
  cfg.blue_corrected_loss = true;
  auto corrected = shemq(KernelSpec::energy(), target, 3, cfg);
  CHECK(raw.final_points == corrected.final_points);
  CHECK(raw.trajectory.front().loss > corrected.trajectory.front().loss);
}

TEST_CASE("gradient_flow: stationary start stays put") {
  // Q=1 at the Gaussian mean is the energy-kernel optimum
  OptimizerConfig cfg;
  cfg.flow_total_time = 0.5;
  const auto rec = gradient_flow(DiscreteMeasure::dirac(vec1(0)),
                                 Vector::Zero(1), 1.0, cfg);
  CHECK(std::abs(rec.final_points(0, 0)) <= 1e-6);
  CHECK(rec.trajectory.back().loss ==
        doctest::Approx(rec.trajectory.front().loss).epsilon(1e-6));
}

TEST_CASE("gradient_flow: exponential decay with slope -1") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix X0(10, 2);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 2; ++j) X0(i, j) = 2.5 * gauss(rng);
  OptimizerConfig cfg;
  cfg.flow_total_time = 1.0;
  cfg.record_every = 5;
  const auto rec =
      gradient_flow(DiscreteMeasure::uniform(X0), Vector::Zero(2), 1.0, cfg);

  const double dt = std::min(1e-3, cfg.flow_total_time / 2000.0);
  // least-squares slope of log L against time
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& s : rec.trajectory) {
    const double t = s.iteration * dt;
    const double y = std::log(s.loss);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(rec.trajectory.back().loss / rec.trajectory.front().loss ==
        doctest::Approx(std::exp(-1.0)).epsilon(0.1));
  CHECK_THROWS_AS(gradient_flow(DiscreteMeasure::dirac(vec1(0)),
                                Vector::Zero(1), 1.0,
                                [] {
                                  OptimizerConfig c;
                                  c.flow_total_time = 0.0;
                                  return c;
                                }()),
                  std::invalid_argument);
}

TEST_CASE("differential_evolution: exact two-atom representation") {
  const auto target = TargetMeasure::atomic(
      DiscreteMeasure::uniform(col({0.0, 1.0})));
  OptimizerConfig cfg;
  cfg.seed = 4;
  cfg.max_iterations = 300;
  cfg.weight_mode = WeightMode::OptimizeNonnegative;
  cfg.record_every = 50;
  const auto rec = differential_evolution(KernelSpec::energy(), target, 2, cfg,
                                          1.0);
  CHECK(rec.trajectory.back().loss <= 1e-6);
  std::vector<int> order = {0, 1};
  if (rec.final_points(0, 0) > rec.final_points(1, 0)) std::swap(order[0],
                                                                 order[1]);
  CHECK(std::abs(rec.final_points(order[0], 0) - 0.0) <= 1e-2);
  CHECK(std::abs(rec.final_points(order[1], 0) - 1.0) <= 1e-2);
  CHECK(rec.final_weights(order[0]) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(rec.final_weights.sum() == doctest::Approx(1.0).epsilon(1e-9));

  const auto rec2 = differential_evolution(KernelSpec::energy(), target, 2,
                                           cfg, 1.0);
  CHECK(rec.final_points == rec2.final_points);
}

TEST_CASE("differential_evolution: input validation") {
  OptimizerConfig cfg;
  cfg.weight_mode = WeightMode::OptimizeNonnegative;
  const auto gauss_target = TargetMeasure::gaussian(Vector::Zero(1), 1.0);
  CHECK_THROWS_AS(
      differential_evolution(KernelSpec::energy(), gauss_target, 2, cfg, 1.0),
      std::invalid_argument);
  const auto atomic_t = TargetMeasure::atomic(DiscreteMeasure::dirac(vec1(0)));
  CHECK_THROWS_AS(
      differential_evolution(KernelSpec::energy(), atomic_t, 1, cfg, 0.0),
      std::invalid_argument);
  cfg.weight_mode = WeightMode::FixedUniform;
  CHECK_THROWS_AS(
      differential_evolution(KernelSpec::energy(), atomic_t, 1, cfg, 1.0),
      std::invalid_argument);
}

TEST_CASE("solve_weights: exact recovery and simple oracles") {
  const auto k = KernelSpec::energy();
  const auto target = DiscreteMeasure::uniform(col({0.0, 1.0, 2.0}));

  const auto exact =
      solve_weights(k, target.points(), target, WeightConstraint::Simplex);
  for (int i = 0; i < 3; ++i)
    CHECK(exact.weights(i) == doctest::Approx(1.0 / 3).epsilon(1e-6));
  CHECK_FALSE(exact.degenerate);

  // points {0, 10}, target delta_0: all mass on the first point
  const auto d0 = DiscreteMeasure::dirac(vec1(0));
  const auto w =
      solve_weights(k, col({0.0, 10.0}), d0, WeightConstraint::Unconstrained);
  CHECK(w.weights(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(w.weights(1) == doctest::Approx(0.0).epsilon(1e-8));

  CHECK_THROWS_AS(solve_weights(k, col({0.0}),
                                DiscreteMeasure(col({0.0}), vec1(2.0)),
                                WeightConstraint::Simplex),
                  std::invalid_argument);
}

TEST_CASE("solve_weights: Simplex KKT conditions") {
  std::mt19937_64 rng(23);
  const auto k = KernelSpec::huber_energy(1.0, 0.1);
  const auto target =
      DiscreteMeasure::uniform(testutil::rand_mat(5, 2, rng));
  const Matrix points = testutil::rand_mat(4, 2, rng);
  const auto sol =
      solve_weights(k, points, target, WeightConstraint::Simplex);
  CHECK(sol.weights.sum() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.weights.minCoeff() >= -1e-12);

  // gradient of the quadratic objective at the solution
  const Vector z0 = target.points().row(0).transpose();
  Matrix G(4, 4);
  Vector c = Vector::Zero(4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j)
      G(i, j) = k_from_h(k, z0, points.row(i).transpose(),
                         points.row(j).transpose());
    for (int m = 0; m < 5; ++m)
      c(i) += target.weights()(m) *
              k_from_h(k, z0, points.row(i).transpose(),
                       target.points().row(m).transpose());
  }
  const Vector g = 2.0 * (G * sol.weights - c);
  double mu = 0.0;
  int active = 0;
  for (int i = 0; i < 4; ++i)
    if (sol.weights(i) > 1e-10) {
      mu += g(i);
      ++active;
    }
  mu /= active;
  for (int i = 0; i < 4; ++i) {
    if (sol.weights(i) > 1e-10)
      CHECK(std::abs(g(i) - mu) <= 1e-6);
    else
      CHECK(g(i) >= mu - 1e-6);
  }
}

TEST_CASE("nonconvexity witness of the two-point loss") {
  const auto k = KernelSpec::energy();
  const auto f = [&](double x, double y) {
    Matrix pts(2, 1);
    pts << x, y;
    Vector w(2);
    w << 0.5, 0.5;
    return squared_distance_atomic(k, DiscreteMeasure(pts, w, true),
                                   DiscreteMeasure::dirac(vec1(0)))
        .total;
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const double x = u(rng), y = u(rng);
    const double formula =
        (2.0 * std::abs(x) + 2.0 * std::abs(y) - std::abs(x - y)) / 4.0;
    CHECK(f(x, y) == doctest::Approx(formula).epsilon(1e-12));
  }
  // midpoint convexity fails between (1,0) and (0,1)
  CHECK(f(0.5, 0.5) > 0.5 * (f(1.0, 0.0) + f(0.0, 1.0)) + 0.2);
}
