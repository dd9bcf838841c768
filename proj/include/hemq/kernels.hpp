#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace hemq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class KernelFamily { HuberEnergy, Gaussian, PenalizedMean };

/// Negative-definite squared-distance function h between Dirac masses.
/// HuberEnergy:   h(x,y) = (a^2 + |x-y|^2)^{r/2} - a^r, 0<r<2, a>=0
/// Gaussian:      h(x,y) = 1 - exp(-|x-y|^2 / (2 sigma^2))
/// PenalizedMean: Huber-energy base plus lambda * |x-y|^2
struct KernelSpec {
  KernelFamily family = KernelFamily::HuberEnergy;
  double r = 1.0;
  double a = 0.0;
  double sigma = 1.0;   // Gaussian only
  double lambda = 0.0;  // PenalizedMean only

  static KernelSpec huber_energy(double r, double a) {
    KernelSpec k;
    k.family = KernelFamily::HuberEnergy;
    k.r = r;
    k.a = a;
    k.validate();
    return k;
  }
  static KernelSpec energy() { return huber_energy(1.0, 0.0); }
  static KernelSpec gaussian(double sigma) {
    KernelSpec k;
    k.family = KernelFamily::Gaussian;
    k.sigma = sigma;
    k.validate();
    return k;
  }
  static KernelSpec penalized_mean(double r, double a, double lambda) {
    KernelSpec k;
    k.family = KernelFamily::PenalizedMean;
    k.r = r;
    k.a = a;
    k.lambda = lambda;
    k.validate();
    return k;
  }

  void validate() const;
  std::string family_name() const;

  /// h as a function of the squared Euclidean distance between the points.
  double h_from_sq(double sq_dist) const;
  /// dh/d(sq_dist); used to assemble gradients without re-forming distances.
  double dh_dsq(double sq_dist) const;
};

KernelSpec kernel_from_name(const std::string& name, double r, double a,
                            double sigma, double lambda);

double h_eval(const KernelSpec& kernel, const Eigen::Ref<const Vector>& x,
              const Eigen::Ref<const Vector>& y);

/// Gradient of h with respect to x. At the kink of the a=0, r<=1
/// Huber-energy kernel (x == y) the zero vector is returned (a valid
/// subgradient).
Vector h_grad_x(const KernelSpec& kernel, const Eigen::Ref<const Vector>& x,
                const Eigen::Ref<const Vector>& y);

/// Induced positive kernel k_{z0}(x,y) = (h(x,z0)+h(y,z0)-h(x,y))/2.
double k_from_h(const KernelSpec& kernel, const Eigen::Ref<const Vector>& z0,
                const Eigen::Ref<const Vector>& x,
                const Eigen::Ref<const Vector>& y);

/// Evaluates (1/-Gamma(-r)) * int_0^inf (1-e^{-ts}) e^{-as} / s^{1+r} ds
/// by Gauss-Legendre quadrature split at s=1. The value equals
/// (a+t)^r - a^r for r in (0,1).
double decomposition_check(double r, double a, double t, int quad_nodes);

}  // namespace hemq
