#pragma once

#include <cstdint>

#include "hemq/distance.hpp"

namespace hemq {

enum class EstimatorKind { BlueTwoSample, BlueOneSample, VStatistic };

struct DistanceEstimate {
  double value = 0.0;
  EstimatorKind kind = EstimatorKind::VStatistic;
  int q_samples = 0;
  int j_samples = 0;
  std::uint64_t seed = 0;
};

/// Minimal-variance unbiased estimator of d^2(nu, mu) from i.i.d. samples
/// xs ~ nu (Q rows) and ys ~ mu (J rows):
///   cross/(Q J) - within-x/(2 Q (Q-1)) - within-y/(2 J (J-1)).
/// With legacy_cross_denominator the cross term is divided by (Q-1)(J-1)
/// instead, which is biased; kept for side-by-side comparison.
DistanceEstimate blue_two_sample(const KernelSpec& kernel,
                                 const Eigen::Ref<const Matrix>& xs,
                                 const Eigen::Ref<const Matrix>& ys,
                                 bool legacy_cross_denominator = false);

/// Unbiased estimator of d^2(nu, mu) when nu is known atomic and only mu is
/// sampled: the plug-in distance to the empirical batch minus the batch
/// self-correction sum_{j != j'} h(z_j,z_j') / (2 J^2 (J-1)).
DistanceEstimate blue_one_sample(const KernelSpec& kernel,
                                 const DiscreteMeasure& nu,
                                 const Eigen::Ref<const Matrix>& zs);

/// Biased plug-in baseline: the distance between the two uniform empirical
/// measures.
DistanceEstimate v_statistic(const KernelSpec& kernel,
                             const Eigen::Ref<const Matrix>& xs,
                             const Eigen::Ref<const Matrix>& ys);

/// Linear estimator sum_{a,b} w_ab h(X_a, X_b) over the stacked sample
/// [xs; ys]; used by the variance-optimality checks against alternative
/// unbiased weightings.
double linear_estimator(const KernelSpec& kernel,
                        const Eigen::Ref<const Matrix>& xs,
                        const Eigen::Ref<const Matrix>& ys,
                        const Eigen::Ref<const Matrix>& w);

}  // namespace hemq
