#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hemq/distance.hpp"
#include "hemq/estimators.hpp"

namespace hemq {

enum class OptimizerMethod {
  Shemq,
  GradientFlow,
  DifferentialEvolution,
  ExactQuantile1D
};

enum class WeightMode { FixedUniform, FixedGiven, OptimizeNonnegative };

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::Shemq;
  int batch_size = 64;
  double learning_rate = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_iterations = 5000;
  double flow_total_time = 1.75;
  double flow_step = 0.0;       // <= 0: use min(1e-3, T/2000)
  double eps_tol = 1e-14;
  std::uint64_t seed = 0;
  WeightMode weight_mode = WeightMode::FixedUniform;
  /// Fraction of trailing iterates averaged into the reported quantizer
  /// (Polyak-style); 0 keeps the raw last iterate.
  double average_tail_fraction = 0.2;
  /// Apply the one-sample batch self-correction to the reported loss.
  bool blue_corrected_loss = false;
  int record_every = 1;
  // DE parameters
  double de_weight_f = 0.8;
  double de_crossover = 0.9;
  int de_population_multiplier = 15;
};

struct IterationStat {
  int iteration = 0;
  double loss = 0.0;
  double wall_ms = 0.0;
};

struct RunRecord {
  std::vector<IterationStat> trajectory;
  Matrix final_points;
  Vector final_weights;
  OptimizerConfig config;

  DiscreteMeasure final_quantizer(bool probability_mode = true) const {
    return DiscreteMeasure(final_points, final_weights, probability_mode);
  }
};

/// Stochastic measure quantization: fresh batch per iteration, exact batch
/// loss, Adam point updates. Points are initialized by i.i.d. target draws.
RunRecord shemq(const KernelSpec& kernel, const TargetMeasure& target, int Q,
                const OptimizerConfig& config);

/// Normalized gradient flow dX/dt = -L gradL / (|gradL|^2 + eps_tol)
/// on the analytic energy-kernel loss against N(mean, sigma^2 I),
/// integrated by RK4; log L decays with slope -1 away from stationarity.
RunRecord gradient_flow(const DiscreteMeasure& quantizer0,
                        const Eigen::Ref<const Vector>& mean, double sigma,
                        const OptimizerConfig& config);

/// DE/rand/1/bin over the joint vector of Q*N coordinates and Q weights;
/// weights kept feasible (>= 0, sum = mass) by clamp-and-rescale projection.
/// The target must be enumerable (empirical or atomic) so the loss is exact.
RunRecord differential_evolution(const KernelSpec& kernel,
                                 const TargetMeasure& target, int Q,
                                 const OptimizerConfig& config, double mass);

enum class WeightConstraint { Unconstrained, Nonnegative, Simplex };

struct WeightSolution {
  Vector weights;
  bool degenerate = false;  // singular Gram; least-norm solution returned
};

/// Optimal weights for fixed points against an atomic target: minimizes the
/// quadratic d^2(delta_{alpha,X}, target) subject to sum(alpha) = target
/// mass, optionally alpha >= 0 (Nonnegative) or probability weights
/// (Simplex, requires target mass 1).
WeightSolution solve_weights(const KernelSpec& kernel,
                             const Eigen::Ref<const Matrix>& points,
                             const DiscreteMeasure& target,
                             WeightConstraint constraint);

/// Quantile quantizer for 1D absolutely continuous targets under the energy
/// kernel: atoms at F^{-1}((j-1/2)/J) with uniform weights.
DiscreteMeasure exact_quantile_1d(
    const std::function<double(double)>& cdf_inverse, int J);

/// Inverse standard normal CDF (Wichura's AS 241, double precision).
double normal_quantile(double p);

}  // namespace hemq
