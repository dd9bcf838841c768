#include "hemq/kernels.hpp"

#include <cmath>
#include <vector>

namespace hemq {

void KernelSpec::validate() const {
  switch (family) {
    case KernelFamily::HuberEnergy:
    case KernelFamily::PenalizedMean:
      if (!(r > 0.0 && r < 2.0))
        throw std::invalid_argument("HuberEnergy requires 0 < r < 2, got r=" +
                                    std::to_string(r));
      if (!(a >= 0.0))
        throw std::invalid_argument("HuberEnergy requires a >= 0");
      if (family == KernelFamily::PenalizedMean && !(lambda >= 0.0))
        throw std::invalid_argument("PenalizedMean requires lambda >= 0");
      break;
    case KernelFamily::Gaussian:
      if (!(sigma > 0.0))
        throw std::invalid_argument("Gaussian requires sigma > 0");
      break;
  }
}

std::string KernelSpec::family_name() const {
  switch (family) {
    case KernelFamily::HuberEnergy: return "huber-energy";
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::PenalizedMean: return "penalized-mean";
  }
  return "?";
}

KernelSpec kernel_from_name(const std::string& name, double r, double a,
                            double sigma, double lambda) {
  if (name == "huber-energy") return KernelSpec::huber_energy(r, a);
  if (name == "gaussian") return KernelSpec::gaussian(sigma);
  if (name == "penalized-mean") return KernelSpec::penalized_mean(r, a, lambda);
  throw std::invalid_argument("unknown kernel family: " + name);
}

double KernelSpec::h_from_sq(double sq) const {
  switch (family) {
    case KernelFamily::HuberEnergy:
      return std::pow(a * a + sq, r / 2.0) - std::pow(a, r);
    case KernelFamily::Gaussian:
      return 1.0 - std::exp(-sq / (2.0 * sigma * sigma));
    case KernelFamily::PenalizedMean:
      return std::pow(a * a + sq, r / 2.0) - std::pow(a, r) + lambda * sq;
  }
  return 0.0;
}

double KernelSpec::dh_dsq(double sq) const {
  switch (family) {
    case KernelFamily::HuberEnergy: {
      const double base = a * a + sq;
      if (base == 0.0) return 0.0;  // subgradient at the kink
      return 0.5 * r * std::pow(base, r / 2.0 - 1.0);
    }
    case KernelFamily::Gaussian:
      return std::exp(-sq / (2.0 * sigma * sigma)) / (2.0 * sigma * sigma);
    case KernelFamily::PenalizedMean: {
      const double base = a * a + sq;
      double d = lambda;
      if (base > 0.0) d += 0.5 * r * std::pow(base, r / 2.0 - 1.0);
      return d;
    }
  }
  return 0.0;
}

namespace {

void check_pair(const Eigen::Ref<const Vector>& x,
                const Eigen::Ref<const Vector>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("dimension mismatch: " +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  if (x.size() < 1) throw std::invalid_argument("points must have N >= 1");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("non-finite coordinates");
}

}  // namespace

double h_eval(const KernelSpec& kernel, const Eigen::Ref<const Vector>& x,
              const Eigen::Ref<const Vector>& y) {
  kernel.validate();
  check_pair(x, y);
  return kernel.h_from_sq((x - y).squaredNorm());
}

Vector h_grad_x(const KernelSpec& kernel, const Eigen::Ref<const Vector>& x,
                const Eigen::Ref<const Vector>& y) {
  kernel.validate();
  check_pair(x, y);
  const Vector diff = x - y;
  const double sq = diff.squaredNorm();
  if (sq == 0.0 && kernel.family != KernelFamily::Gaussian && kernel.a == 0.0)
    return Vector::Zero(x.size());  // kink of the pure energy kernel
  // dh/dx = 2 (x-y) dh/d(sq)
  return 2.0 * kernel.dh_dsq(sq) * diff;
}

double k_from_h(const KernelSpec& kernel, const Eigen::Ref<const Vector>& z0,
                const Eigen::Ref<const Vector>& x,
                const Eigen::Ref<const Vector>& y) {
  if (z0.size() != x.size() || z0.size() != y.size())
    throw std::invalid_argument("dimension mismatch in k_from_h");
  return 0.5 * (h_eval(kernel, x, z0) + h_eval(kernel, y, z0) -
                h_eval(kernel, x, y));
}

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

}  // namespace

double decomposition_check(double r, double a, double t, int quad_nodes) {
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument(
        "decomposition identity requires r in (0,1), got r=" +
        std::to_string(r));
  if (a < 0.0 || t < 0.0)
    throw std::invalid_argument("decomposition_check requires a,t >= 0");
  if (quad_nodes < 100)
    throw std::invalid_argument("quad_nodes must be >= 100");

  std::vector<double> gx, gw;
  gauss_legendre(quad_nodes, gx, gw);

  const auto integrand = [&](double s) {
    return -std::expm1(-t * s) * std::exp(-a * s) / std::pow(s, 1.0 + r);
  };

  // s in (0,1]: substitute s = u^{1/(1-r)} to absorb the s^{-1-r} endpoint
  // (the factor 1-e^{-ts} ~ ts keeps the product integrable).
  double low = 0.0;
  const double p = 1.0 / (1.0 - r);
  for (int i = 0; i < quad_nodes; ++i) {
    const double u = 0.5 * (gx[i] + 1.0);  // u in (0,1)
    const double s = std::pow(u, p);
    const double jac = p * std::pow(u, p - 1.0);
    low += gw[i] * 0.5 * integrand(s) * jac;
  }

  // s in [1,inf): substitute s = u^{-1/r}, u in (0,1]; the Jacobian cancels
  // the s^{-1-r} factor exactly, leaving a bounded integrand.
  double high = 0.0;
  for (int i = 0; i < quad_nodes; ++i) {
    const double u = 0.5 * (gx[i] + 1.0);
    if (u <= 0.0) continue;
    const double s = std::pow(u, -1.0 / r);
    high += gw[i] * 0.5 * (-std::expm1(-t * s)) * std::exp(-a * s) / r;
  }

  return (low + high) / (-std::tgamma(-r));
}

}  // namespace hemq
