#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "hemq/kernels.hpp"

namespace hemq {

/// Weighted sum of Dirac masses. Weights are arbitrary reals; construct in
/// probability mode to enforce nonnegative weights summing to one.
class DiscreteMeasure {
 public:
  DiscreteMeasure(Matrix points, Vector weights, bool probability_mode = false);

  static DiscreteMeasure uniform(Matrix points);
  static DiscreteMeasure dirac(Vector point);

  const Matrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  bool probability_mode() const { return probability_mode_; }

  double weight_sum() const { return weights_.sum(); }
  bool has_negative_weight() const { return (weights_.array() < 0.0).any(); }

  void set_points(const Matrix& p);
  void set_weights(const Vector& w);

 private:
  Matrix points_;
  Vector weights_;
  bool probability_mode_;
};

struct GaussianComponent {
  Vector mean;
  double sigma;          // isotropic: covariance sigma^2 * I
  double mixture_weight;
};

struct EmpiricalTarget {
  Matrix data;                               // M x N
  std::optional<std::vector<int>> labels;    // length M when present
};

struct GaussianMixtureTarget {
  std::vector<GaussianComponent> components;
};

struct AtomicTarget {
  DiscreteMeasure measure;
};

/// Sampleable / enumerable target measure.
class TargetMeasure {
 public:
  explicit TargetMeasure(EmpiricalTarget e);
  explicit TargetMeasure(GaussianMixtureTarget g);
  explicit TargetMeasure(AtomicTarget a);

  static TargetMeasure empirical(Matrix data,
                                 std::optional<std::vector<int>> labels = {});
  static TargetMeasure gaussian(Vector mean, double sigma);
  static TargetMeasure mixture(std::vector<GaussianComponent> comps);
  static TargetMeasure atomic(DiscreteMeasure m);

  Eigen::Index dim() const;
  bool is_empirical() const;
  bool is_mixture() const;
  bool is_atomic() const;
  const EmpiricalTarget& as_empirical() const;
  const GaussianMixtureTarget& as_mixture() const;
  const AtomicTarget& as_atomic() const;

  /// i.i.d. draws, n x N; deterministic given seed.
  Matrix sample(int n, std::uint64_t seed) const;
  Matrix sample(int n, std::mt19937_64& rng) const;

 private:
  std::variant<EmpiricalTarget, GaussianMixtureTarget, AtomicTarget> value_;
};

/// Scaled cumulative sum: path_0 = 0, path_j = (sum_{i<=j} x_i)/sqrt(N).
/// Standard-normal increments yield a standard Brownian path on [0,1]
/// sampled at the grid j/N.
Vector brownian_path(const Eigen::Ref<const Vector>& increments);

}  // namespace hemq
