#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hemq/estimators.hpp"
#include "test_util.hpp"

using namespace hemq;
using testutil::col;
using testutil::vec1;

namespace {

struct Mc {
  double mean = 0.0, se = 0.0, var = 0.0;
};

template <typename F>
Mc monte_carlo(int trials, F&& draw) {
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double v = draw(t);
    sum += v;
    sumsq += v * v;
  }
  Mc out;
  out.mean = sum / trials;
  out.var = sumsq / trials - out.mean * out.mean;
  out.se = std::sqrt(out.var / trials);
  return out;
}

}  // namespace

TEST_CASE("blue_two_sample exact cases") {
  const auto k = KernelSpec::energy();
  const Matrix zeros = Matrix::Zero(3, 1);
  CHECK(blue_two_sample(k, zeros, zeros).value == 0.0);

  const Matrix ones = Matrix::Ones(4, 1);
  const auto est = blue_two_sample(k, zeros, ones);
  CHECK(est.value == doctest::Approx(1.0));
  CHECK(est.q_samples == 3);
  CHECK(est.j_samples == 4);
  CHECK(est.kind == EstimatorKind::BlueTwoSample);

  CHECK_THROWS_AS(blue_two_sample(k, Matrix::Zero(1, 1), ones),
                  std::invalid_argument);
  CHECK_THROWS_AS(blue_two_sample(k, zeros, Matrix::Zero(1, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(blue_two_sample(k, Matrix::Zero(2, 1), Matrix::Zero(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("blue_one_sample exact cases") {
  const auto k = KernelSpec::energy();
  const auto nu = DiscreteMeasure::dirac(vec1(0));
  CHECK(blue_one_sample(k, nu, Matrix::Zero(4, 1)).value == 0.0);
  CHECK(blue_one_sample(k, nu, Matrix::Ones(2, 1)).value ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(blue_one_sample(k, nu, Matrix::Zero(1, 1)),
                  std::invalid_argument);
  const DiscreteMeasure signed_nu(col({0.0}), vec1(2.0));
  CHECK_THROWS_AS(blue_one_sample(k, signed_nu, Matrix::Zero(2, 1)),
                  std::invalid_argument);
}

TEST_CASE("v_statistic exact cases") {
  const auto k = KernelSpec::energy();
  const Matrix s = col({0.0, 1.0, 2.0});
  CHECK(v_statistic(k, s, s).value == doctest::Approx(0.0));
  CHECK(v_statistic(k, col({0.0}), col({1.0})).value == doctest::Approx(1.0));
  CHECK(v_statistic(k, col({0.0}), col({1.0})).kind ==
        EstimatorKind::VStatistic);
}

TEST_CASE("permutation invariance") {
  std::mt19937_64 rng(10);
  const auto k = KernelSpec::huber_energy(1.0, 0.3);
  const Matrix xs = testutil::rand_mat(5, 2, rng);
  const Matrix ys = testutil::rand_mat(6, 2, rng);
  Matrix xs_p = xs, ys_p = ys;
  xs_p.row(0).swap(xs_p.row(4));
  ys_p.row(1).swap(ys_p.row(5));
  CHECK(blue_two_sample(k, xs, ys).value ==
        doctest::Approx(blue_two_sample(k, xs_p, ys_p).value).epsilon(1e-14));
  CHECK(v_statistic(k, xs, ys).value ==
        doctest::Approx(v_statistic(k, xs_p, ys_p).value).epsilon(1e-14));
}

TEST_CASE("Monte Carlo unbiasedness of both BLUE estimators") {
  const auto k = KernelSpec::energy();
  // nu uniform on {0,1}, mu = delta_0: exact d^2 = 1/2 - 1/4 = 0.25
  const auto nu = DiscreteMeasure::uniform(col({0.0, 1.0}));
  const auto nu_t = TargetMeasure::atomic(nu);
  const double exact2 =
      squared_distance_atomic(k, nu, DiscreteMeasure::dirac(vec1(0))).total;
  CHECK(exact2 == doctest::Approx(0.25));

  std::mt19937_64 rng(321);
  const auto mc2 = monte_carlo(20000, [&](int) {
    const Matrix xs = nu_t.sample(4, rng);
    const Matrix ys = Matrix::Zero(4, 1);
    return blue_two_sample(k, xs, ys).value;
  });
  CHECK(std::abs(mc2.mean - exact2) <= 3.0 * mc2.se);

  // nu = delta_0, mu uniform on {-1,1}: exact d^2 = 1 - 1/2 = 0.5
  const auto mu = TargetMeasure::atomic(
      DiscreteMeasure::uniform(col({-1.0, 1.0})));
  const auto nu1 = DiscreteMeasure::dirac(vec1(0));
  const auto mc1 = monte_carlo(20000, [&](int) {
    return blue_one_sample(k, nu1, mu.sample(8, rng)).value;
  });
  CHECK(std::abs(mc1.mean - 0.5) <= 3.0 * mc1.se);
}

TEST_CASE("v_statistic bias vs blue on identical laws") {
  const auto k = KernelSpec::energy();
  const auto law = TargetMeasure::atomic(
      DiscreteMeasure::uniform(col({0.0, 1.0})));
  std::mt19937_64 rng(55);
  const auto mc_v = monte_carlo(20000, [&](int) {
    return v_statistic(k, law.sample(8, rng), law.sample(8, rng)).value;
  });
  const auto mc_b = monte_carlo(20000, [&](int) {
    return blue_two_sample(k, law.sample(8, rng), law.sample(8, rng)).value;
  });
  CHECK(mc_v.mean > 5.0 * mc_v.se);           // positively biased
  CHECK(std::abs(mc_b.mean) <= 3.0 * mc_b.se);  // unbiased around 0
}

TEST_CASE("legacy cross denominator differs as documented") {
  std::mt19937_64 rng(9);
  const auto k = KernelSpec::energy();
  const Matrix xs = testutil::rand_mat(4, 1, rng);
  const Matrix ys = testutil::rand_mat(5, 1, rng);
  const double std_v = blue_two_sample(k, xs, ys, false).value;
  const double legacy_v = blue_two_sample(k, xs, ys, true).value;
  double cross = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j)
      cross += std::abs(xs(i, 0) - ys(j, 0));
  CHECK(legacy_v - std_v ==
        doctest::Approx(cross * (1.0 / 12.0 - 1.0 / 20.0)).epsilon(1e-12));
}

TEST_CASE("linear_estimator reproduces the BLUE weighting") {
  std::mt19937_64 rng(14);
  const auto k = KernelSpec::energy();
  const int Q = 4, J = 5;
  const Matrix xs = testutil::rand_mat(Q, 2, rng);
  const Matrix ys = testutil::rand_mat(J, 2, rng);

  Matrix w = Matrix::Zero(Q + J, Q + J);
  for (int i = 0; i < Q; ++i)
    for (int j = 0; j < Q; ++j)
      if (i != j) w(i, j) = -1.0 / (2.0 * Q * (Q - 1));
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < J; ++j)
      if (i != j) w(Q + i, Q + j) = -1.0 / (2.0 * J * (J - 1));
  for (int i = 0; i < Q; ++i)
    for (int j = 0; j < J; ++j) {
      w(i, Q + j) = 0.5 / (Q * J);
      w(Q + j, i) = 0.5 / (Q * J);
    }

  // unbiasedness block sums: cross 1, within-x -1/2, within-y -1/2
  double cross_sum = 0.0, wx_sum = 0.0, wy_sum = 0.0;
  for (int a = 0; a < Q + J; ++a)
    for (int b = 0; b < Q + J; ++b) {
      if (a < Q && b < Q) wx_sum += w(a, b);
      else if (a >= Q && b >= Q) wy_sum += w(a, b);
      else cross_sum += w(a, b);
    }
  CHECK(cross_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(wx_sum == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(wy_sum == doctest::Approx(-0.5).epsilon(1e-12));

  CHECK(linear_estimator(k, xs, ys, w) ==
        doctest::Approx(blue_two_sample(k, xs, ys).value).epsilon(1e-12));
  CHECK_THROWS_AS(linear_estimator(k, xs, ys, Matrix::Zero(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("blue variance no worse than a random unbiased weighting") {
  const auto k = KernelSpec::energy();
  const auto nu = TargetMeasure::atomic(
      DiscreteMeasure::uniform(col({0.0, 1.0})));
  const auto mu = TargetMeasure::atomic(DiscreteMeasure::dirac(vec1(0.5)));
  const int Q = 4, J = 4, trials = 20000;

  // random weighting satisfying the block-sum unbiasedness constraints
  std::mt19937_64 wrng(2);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Matrix alt = Matrix::Zero(Q + J, Q + J);
  double wx = 0.0, wy = 0.0, cx = 0.0;
  for (int i = 0; i < Q + J; ++i)
    for (int j = 0; j < Q + J; ++j) {
      if (i == j) continue;
      alt(i, j) = u(wrng);
      if (i < Q && j < Q) wx += alt(i, j);
      else if (i >= Q && j >= Q) wy += alt(i, j);
      else cx += alt(i, j);
    }
  for (int i = 0; i < Q + J; ++i)
    for (int j = 0; j < Q + J; ++j) {
      if (i == j) continue;
      if (i < Q && j < Q) alt(i, j) *= -0.5 / wx;
      else if (i >= Q && j >= Q) alt(i, j) *= -0.5 / wy;
      else alt(i, j) /= cx;
    }

  std::mt19937_64 rng(77);
  double b_sum = 0, b_sq = 0, a_sum = 0, a_sq = 0;
  for (int t = 0; t < trials; ++t) {
    const Matrix xs = nu.sample(Q, rng);
    const Matrix ys = mu.sample(J, rng);
    const double b = blue_two_sample(k, xs, ys).value;
    const double a = linear_estimator(k, xs, ys, alt);
    b_sum += b;
    b_sq += b * b;
    a_sum += a;
    a_sq += a * a;
  }
  const double b_mean = b_sum / trials, a_mean = a_sum / trials;
  const double b_var = b_sq / trials - b_mean * b_mean;
  const double a_var = a_sq / trials - a_mean * a_mean;
  // both unbiased for d^2 = 0.25
  CHECK(std::abs(b_mean - 0.25) <= 4.0 * std::sqrt(b_var / trials));
  CHECK(std::abs(a_mean - 0.25) <= 4.0 * std::sqrt(a_var / trials));
  CHECK(b_var <= 1.05 * a_var);
}
