#include "hemq/distance.hpp"

#include <cmath>

namespace hemq {

namespace {

// sum_{i,j} u_i v_j h(x_i, y_j); fixed row-major summation order.
double weighted_gram_sum(const KernelSpec& kernel,
                         const Eigen::Ref<const Matrix>& xs,
                         const Eigen::Ref<const Vector>& u,
                         const Eigen::Ref<const Matrix>& ys,
                         const Eigen::Ref<const Vector>& v) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < ys.rows(); ++j) {
      const double sq = (xs.row(i) - ys.row(j)).squaredNorm();
      row += v(j) * kernel.h_from_sq(sq);
    }
    acc += u(i) * row;
  }
  return acc;
}

}  // namespace

LossBreakdown squared_distance_atomic(const KernelSpec& kernel,
                                      const DiscreteMeasure& m1,
                                      const DiscreteMeasure& m2) {
  kernel.validate();
  if (m1.dim() != m2.dim())
    throw std::invalid_argument("squared_distance_atomic: dimension mismatch");
  if (std::abs(m1.weight_sum() - m2.weight_sum()) > 1e-9)
    throw std::invalid_argument(
        "squared_distance_atomic: total masses differ (" +
        std::to_string(m1.weight_sum()) + " vs " +
        std::to_string(m2.weight_sum()) + ")");

  LossBreakdown out;
  out.cross_term = weighted_gram_sum(kernel, m1.points(), m1.weights(),
                                     m2.points(), m2.weights());
  out.self_term_quantizer = 0.5 * weighted_gram_sum(kernel, m1.points(),
                                                    m1.weights(), m1.points(),
                                                    m1.weights());
  out.self_term_target = 0.5 * weighted_gram_sum(kernel, m2.points(),
                                                 m2.weights(), m2.points(),
                                                 m2.weights());
  out.total = out.cross_term - out.self_term_quantizer - out.self_term_target;
  return out;
}

LossBreakdown batch_loss(const KernelSpec& kernel,
                         const DiscreteMeasure& quantizer,
                         const Eigen::Ref<const Matrix>& batch) {
  if (batch.rows() < 1) throw std::invalid_argument("batch_loss: empty batch");
  if (!quantizer.probability_mode())
    throw std::invalid_argument("batch_loss: quantizer must be a probability");
  return squared_distance_atomic(kernel, quantizer,
                                 DiscreteMeasure::uniform(batch));
}

Matrix batch_loss_grad(const KernelSpec& kernel,
                       const DiscreteMeasure& quantizer,
                       const Eigen::Ref<const Matrix>& batch) {
  if (batch.rows() < 1)
    throw std::invalid_argument("batch_loss_grad: empty batch");
  kernel.validate();
  const Matrix& X = quantizer.points();
  const Vector& w = quantizer.weights();
  const auto Q = X.rows();
  const auto B = batch.rows();
  const double wb = 1.0 / static_cast<double>(B);

  Matrix grad = Matrix::Zero(Q, X.cols());
  for (Eigen::Index q = 0; q < Q; ++q) {
    // cross term: w_q * (1/B) sum_b grad_x h(X_q, z_b)
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto diff = X.row(q) - batch.row(b);
      const double sq = diff.squaredNorm();
      grad.row(q) += (w(q) * wb * 2.0 * kernel.dh_dsq(sq)) * diff;
    }
    // quantizer self term: - sum_{q' != q} w_q w_q' grad_x h(X_q, X_q')
    for (Eigen::Index p = 0; p < Q; ++p) {
      if (p == q) continue;
      const auto diff = X.row(q) - X.row(p);
      const double sq = diff.squaredNorm();
      grad.row(q) -= (w(q) * w(p) * 2.0 * kernel.dh_dsq(sq)) * diff;
    }
  }
  return grad;
}

double kummer_m(double a, double b, double z) {
  if (z > 0.0) throw std::invalid_argument("kummer_m: z <= 0 expected");
  const double az = -z;
  if (az <= 30.0) {
    // Kummer transformation M(a,b,z) = e^z M(b-a,b,-z): all-positive series,
    // no cancellation for z < 0 when b > a.
    const double ap = b - a;
    double term = 1.0, sum = 1.0;
    for (int n = 1; n < 500; ++n) {
      term *= (ap + n - 1.0) / (b + n - 1.0) * az / n;
      sum += term;
      if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    }
    return std::exp(z) * sum;
  }
  // z -> -inf: M(a,b,z) ~ Gamma(b)/Gamma(b-a) (-z)^{-a} 2F0(a, a-b+1; 1/z)
  double pref = std::exp(std::lgamma(b) - std::lgamma(b - a)) *
                std::pow(az, -a);
  double term = 1.0, sum = 1.0, prev = std::abs(term);
  for (int n = 1; n < 60; ++n) {
    term *= (a + n - 1.0) * (a - b + n) / (n * z);
    if (std::abs(term) > prev) break;  // asymptotic series: stop at min term
    prev = std::abs(term);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
  }
  return pref * sum;
}

double g_energy_gaussian(const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Vector>& mean, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
  if (x.size() != mean.size())
    throw std::invalid_argument("g_energy_gaussian: dimension mismatch");
  const double nd = static_cast<double>(x.size());
  const double z = -(x - mean).squaredNorm() / (2.0 * sigma * sigma);
  const double c =
      std::exp(std::lgamma((nd + 1.0) / 2.0) - std::lgamma(nd / 2.0));
  return sigma * std::sqrt(2.0) * c * kummer_m(-0.5, nd / 2.0, z);
}

Vector g_energy_gaussian_grad(const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& mean,
                              double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
  const double nd = static_cast<double>(x.size());
  const double b = nd / 2.0;
  const double z = -(x - mean).squaredNorm() / (2.0 * sigma * sigma);
  const double c =
      std::exp(std::lgamma((nd + 1.0) / 2.0) - std::lgamma(nd / 2.0));
  // dM/dz = (a/b) M(a+1,b+1,z) with a = -1/2; chain rule through z.
  const double dM = (-0.5 / b) * kummer_m(0.5, b + 1.0, z);
  return sigma * std::sqrt(2.0) * c * dM * (-(x - mean) / (sigma * sigma));
}

namespace {

double gaussian_pair_mean_norm(Eigen::Index n, double sigma) {
  // E|Y-Y'| with Y,Y' iid N(mean, sigma^2 I): difference is N(0, 2 sigma^2 I)
  const Vector zero = Vector::Zero(n);
  return g_energy_gaussian(zero, zero, sigma * std::sqrt(2.0));
}

}  // namespace

double analytic_loss_energy_gaussian(const DiscreteMeasure& quantizer,
                                     const Eigen::Ref<const Vector>& mean,
                                     double sigma) {
  if (!quantizer.probability_mode())
    throw std::invalid_argument("analytic loss requires probability weights");
  if (quantizer.dim() != mean.size())
    throw std::invalid_argument("analytic loss: dimension mismatch");
  const Matrix& X = quantizer.points();
  const Vector& w = quantizer.weights();
  double loss = 0.0;
  for (Eigen::Index q = 0; q < X.rows(); ++q)
    loss += w(q) * g_energy_gaussian(X.row(q).transpose(), mean, sigma);
  for (Eigen::Index q = 0; q < X.rows(); ++q)
    for (Eigen::Index p = 0; p < X.rows(); ++p)
      loss -= 0.5 * w(q) * w(p) * (X.row(q) - X.row(p)).norm();
  loss -= 0.5 * gaussian_pair_mean_norm(mean.size(), sigma);
  return loss;
}

Matrix analytic_loss_energy_gaussian_grad(const DiscreteMeasure& quantizer,
                                          const Eigen::Ref<const Vector>& mean,
                                          double sigma) {
  const Matrix& X = quantizer.points();
  const Vector& w = quantizer.weights();
  Matrix grad = Matrix::Zero(X.rows(), X.cols());
  for (Eigen::Index q = 0; q < X.rows(); ++q) {
    grad.row(q) =
        w(q) *
        g_energy_gaussian_grad(X.row(q).transpose(), mean, sigma).transpose();
    for (Eigen::Index p = 0; p < X.rows(); ++p) {
      if (p == q) continue;
      const auto diff = X.row(q) - X.row(p);
      const double nrm = diff.norm();
      if (nrm > 0.0) grad.row(q) -= (w(q) * w(p) / nrm) * diff;
    }
  }
  return grad;
}

}  // namespace hemq
