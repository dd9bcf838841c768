#include "hemq/estimators.hpp"

#include <cmath>

namespace hemq {

namespace {

double pair_sum(const KernelSpec& kernel, const Eigen::Ref<const Matrix>& xs,
                const Eigen::Ref<const Matrix>& ys) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < xs.rows(); ++i)
    for (Eigen::Index j = 0; j < ys.rows(); ++j)
      acc += kernel.h_from_sq((xs.row(i) - ys.row(j)).squaredNorm());
  return acc;
}

double within_sum(const KernelSpec& kernel,
                  const Eigen::Ref<const Matrix>& xs) {
  // sum over ordered pairs i != j
  double acc = 0.0;
  for (Eigen::Index i = 0; i < xs.rows(); ++i)
    for (Eigen::Index j = 0; j < xs.rows(); ++j) {
      if (i == j) continue;
      acc += kernel.h_from_sq((xs.row(i) - xs.row(j)).squaredNorm());
    }
  return acc;
}

}  // namespace

DistanceEstimate blue_two_sample(const KernelSpec& kernel,
                                 const Eigen::Ref<const Matrix>& xs,
                                 const Eigen::Ref<const Matrix>& ys,
                                 bool legacy_cross_denominator) {
  kernel.validate();
  const double Q = static_cast<double>(xs.rows());
  const double J = static_cast<double>(ys.rows());
  if (xs.rows() < 2 || ys.rows() < 2)
    throw std::invalid_argument("blue_two_sample needs Q >= 2 and J >= 2");
  if (xs.cols() != ys.cols())
    throw std::invalid_argument("blue_two_sample: dimension mismatch");

  const double cross_den = legacy_cross_denominator ? (Q - 1) * (J - 1) : Q * J;
  DistanceEstimate est;
  est.kind = EstimatorKind::BlueTwoSample;
  est.q_samples = static_cast<int>(xs.rows());
  est.j_samples = static_cast<int>(ys.rows());
  est.value = pair_sum(kernel, xs, ys) / cross_den -
              within_sum(kernel, xs) / (2.0 * Q * (Q - 1.0)) -
              within_sum(kernel, ys) / (2.0 * J * (J - 1.0));
  return est;
}

DistanceEstimate blue_one_sample(const KernelSpec& kernel,
                                 const DiscreteMeasure& nu,
                                 const Eigen::Ref<const Matrix>& zs) {
  kernel.validate();
  if (zs.rows() < 2)
    throw std::invalid_argument("blue_one_sample needs J >= 2");
  if (!nu.probability_mode())
    throw std::invalid_argument("blue_one_sample: nu must be a probability");
  const double J = static_cast<double>(zs.rows());
  const auto plug_in =
      squared_distance_atomic(kernel, nu, DiscreteMeasure::uniform(zs));
  DistanceEstimate est;
  est.kind = EstimatorKind::BlueOneSample;
  est.q_samples = static_cast<int>(nu.size());
  est.j_samples = static_cast<int>(zs.rows());
  est.value = plug_in.total - within_sum(kernel, zs) / (2.0 * J * J * (J - 1.0));
  return est;
}

DistanceEstimate v_statistic(const KernelSpec& kernel,
                             const Eigen::Ref<const Matrix>& xs,
                             const Eigen::Ref<const Matrix>& ys) {
  if (xs.rows() < 1 || ys.rows() < 1)
    throw std::invalid_argument("v_statistic needs nonempty samples");
  const auto d = squared_distance_atomic(kernel, DiscreteMeasure::uniform(xs),
                                         DiscreteMeasure::uniform(ys));
  DistanceEstimate est;
  est.kind = EstimatorKind::VStatistic;
  est.q_samples = static_cast<int>(xs.rows());
  est.j_samples = static_cast<int>(ys.rows());
  est.value = d.total;
  return est;
}

double linear_estimator(const KernelSpec& kernel,
                        const Eigen::Ref<const Matrix>& xs,
                        const Eigen::Ref<const Matrix>& ys,
                        const Eigen::Ref<const Matrix>& w) {
  const auto Q = xs.rows(), J = ys.rows();
  if (w.rows() != Q + J || w.cols() != Q + J)
    throw std::invalid_argument("linear_estimator: weight matrix must be "
                                "(Q+J)x(Q+J)");
  Matrix all(Q + J, xs.cols());
  all.topRows(Q) = xs;
  all.bottomRows(J) = ys;
  double acc = 0.0;
  for (Eigen::Index a = 0; a < Q + J; ++a)
    for (Eigen::Index b = 0; b < Q + J; ++b) {
      if (a == b) continue;
      acc += w(a, b) *
             kernel.h_from_sq((all.row(a) - all.row(b)).squaredNorm());
    }
  return acc;
}

}  // namespace hemq
