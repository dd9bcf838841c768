#pragma once

#include "hemq/kernels.hpp"
#include "hemq/measures.hpp"

namespace hemq {

struct LossBreakdown {
  double cross_term = 0.0;
  double self_term_quantizer = 0.0;
  double self_term_target = 0.0;
  double total = 0.0;
};

/// Exact squared kernel distance between two atomic measures with equal mass:
///   d^2 = sum_ij w1_i w2_j h(x_i,y_j)
///       - 1/2 sum_ii' w1 w1 h - 1/2 sum_jj' w2 w2 h.
LossBreakdown squared_distance_atomic(const KernelSpec& kernel,
                                      const DiscreteMeasure& m1,
                                      const DiscreteMeasure& m2);

/// Distance between the quantizer and the uniform empirical measure of a
/// batch; this is the per-iteration stochastic loss.
LossBreakdown batch_loss(const KernelSpec& kernel,
                         const DiscreteMeasure& quantizer,
                         const Eigen::Ref<const Matrix>& batch);

/// Gradient of batch_loss().total with respect to the quantizer points.
Matrix batch_loss_grad(const KernelSpec& kernel,
                       const DiscreteMeasure& quantizer,
                       const Eigen::Ref<const Matrix>& batch);

/// E_{Y ~ N(mean, sigma^2 I)} |Y - x|  (energy-kernel one-point distance
/// to an isotropic Gaussian; mean of a noncentral chi law).
double g_energy_gaussian(const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Vector>& mean, double sigma);

/// d/dx of g_energy_gaussian.
Vector g_energy_gaussian_grad(const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& mean,
                              double sigma);

/// Full analytic squared distance from a weighted quantizer to
/// N(mean, sigma^2 I) under the energy kernel (self-term of the Gaussian
/// included, so the value is a nonnegative distance squared).
double analytic_loss_energy_gaussian(const DiscreteMeasure& quantizer,
                                     const Eigen::Ref<const Vector>& mean,
                                     double sigma);

/// Gradient of the analytic loss with respect to the quantizer points.
Matrix analytic_loss_energy_gaussian_grad(const DiscreteMeasure& quantizer,
                                          const Eigen::Ref<const Vector>& mean,
                                          double sigma);

/// Kummer confluent hypergeometric M(a,b,z) for the parameter ranges used
/// here (b > 0, z <= 0): direct series for moderate |z|, asymptotic
/// expansion for large negative z.
double kummer_m(double a, double b, double z);

}  // namespace hemq
