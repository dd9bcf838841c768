#include "hemq/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace hemq {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double batch_self_correction(const KernelSpec& kernel,
                             const Eigen::Ref<const Matrix>& zs) {
  const double J = static_cast<double>(zs.rows());
  if (J < 2) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < zs.rows(); ++i)
    for (Eigen::Index j = 0; j < zs.rows(); ++j) {
      if (i == j) continue;
      acc += kernel.h_from_sq((zs.row(i) - zs.row(j)).squaredNorm());
    }
  return acc / (2.0 * J * J * (J - 1.0));
}

}  // namespace

RunRecord shemq(const KernelSpec& kernel, const TargetMeasure& target, int Q,
                const OptimizerConfig& config) {
  kernel.validate();
  if (Q < 1) throw std::invalid_argument("shemq: Q >= 1 required");
  const int B = config.batch_size;
  if (B < 1) throw std::invalid_argument("shemq: batch size >= 1 required");

  std::mt19937_64 rng(config.seed);
  Matrix X = target.sample(Q, rng);
  DiscreteMeasure quantizer = DiscreteMeasure::uniform(X);

  Matrix m = Matrix::Zero(Q, X.cols());
  Matrix v = Matrix::Zero(Q, X.cols());
  Matrix tail_acc = Matrix::Zero(Q, X.cols());
  long tail_count = 0;
  const int tail_start =
      config.max_iterations -
      static_cast<int>(config.average_tail_fraction * config.max_iterations);

  RunRecord rec;
  rec.config = config;
  const auto t0 = Clock::now();

  for (int t = 1; t <= config.max_iterations; ++t) {
    const Matrix batch = target.sample(B, rng);
    quantizer.set_points(X);
    const Matrix grad = batch_loss_grad(kernel, quantizer, batch);

    if (t % std::max(1, config.record_every) == 0 ||
        t == config.max_iterations) {
      double loss = batch_loss(kernel, quantizer, batch).total;
      if (config.blue_corrected_loss)
        loss -= batch_self_correction(kernel, batch);
      if (!std::isfinite(loss))
        throw std::runtime_error("shemq: loss diverged at iteration " +
                                 std::to_string(t));
      rec.trajectory.push_back({t, loss, elapsed_ms(t0)});
    }

    const double b1 = config.adam_beta1, b2 = config.adam_beta2;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    X -= config.learning_rate *
         ((m / c1).array() / ((v / c2).array().sqrt() + config.adam_eps))
             .matrix();

    if (t > tail_start) {
      tail_acc += X;
      ++tail_count;
    }
  }

  rec.final_points = tail_count > 0
                         ? Matrix(tail_acc / static_cast<double>(tail_count))
                         : X;
  rec.final_weights = Vector::Constant(Q, 1.0 / static_cast<double>(Q));
  return rec;
}

RunRecord gradient_flow(const DiscreteMeasure& quantizer0,
                        const Eigen::Ref<const Vector>& mean, double sigma,
                        const OptimizerConfig& config) {
  const double T = config.flow_total_time;
  if (T <= 0.0) throw std::invalid_argument("gradient_flow: T > 0 required");
  const double dt =
      config.flow_step > 0.0 ? config.flow_step : std::min(1e-3, T / 2000.0);

  Matrix X = quantizer0.points();
  const Vector w = quantizer0.weights();
  DiscreteMeasure q = quantizer0;

  const auto loss_of = [&](const Matrix& pts) {
    q.set_points(pts);
    return analytic_loss_energy_gaussian(q, mean, sigma);
  };
  const auto rhs = [&](const Matrix& pts, double& loss_out) {
    q.set_points(pts);
    const double L = analytic_loss_energy_gaussian(q, mean, sigma);
    const Matrix G = analytic_loss_energy_gaussian_grad(q, mean, sigma);
    loss_out = L;
    return Matrix(-L * G / (G.squaredNorm() + config.eps_tol));
  };

  RunRecord rec;
  rec.config = config;
  const auto t0 = Clock::now();
  double t = 0.0;
  int step = 0;
  while (t < T - 1e-12) {
    double L = 0.0;
    const Matrix k1 = rhs(X, L);
    if (step % std::max(1, config.record_every) == 0)
      rec.trajectory.push_back({step, L, elapsed_ms(t0)});
    if (k1.squaredNorm() * dt * dt < 1e-30 && L > 1e-12) break;  // stationary
    double dummy = 0.0;
    const Matrix k2 = rhs(X + 0.5 * dt * k1, dummy);
    const Matrix k3 = rhs(X + 0.5 * dt * k2, dummy);
    const Matrix k4 = rhs(X + dt * k3, dummy);
    X += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += dt;
    ++step;
  }
  rec.trajectory.push_back({step, loss_of(X), elapsed_ms(t0)});
  rec.final_points = X;
  rec.final_weights = w;
  return rec;
}

namespace {

Vector project_weights(Vector w, double mass) {
  w = w.cwiseMax(0.0);
  const double s = w.sum();
  if (s <= 0.0) return Vector::Constant(w.size(), mass / w.size());
  return w * (mass / s);
}

}  // namespace

RunRecord differential_evolution(const KernelSpec& kernel,
                                 const TargetMeasure& target, int Q,
                                 const OptimizerConfig& config, double mass) {
  kernel.validate();
  if (Q < 1) throw std::invalid_argument("differential_evolution: Q >= 1");
  if (mass <= 0.0)
    throw std::invalid_argument("differential_evolution: mass must be > 0");
  if (config.weight_mode != WeightMode::OptimizeNonnegative)
    throw std::invalid_argument(
        "differential_evolution requires weight_mode OptimizeNonnegative");

  // exact loss requires an enumerable target
  Matrix tgt_pts;
  Vector tgt_w;
  if (target.is_empirical()) {
    tgt_pts = target.as_empirical().data;
    tgt_w = Vector::Constant(tgt_pts.rows(), 1.0 / tgt_pts.rows());
  } else if (target.is_atomic()) {
    tgt_pts = target.as_atomic().measure.points();
    tgt_w = target.as_atomic().measure.weights();
  } else {
    throw std::invalid_argument(
        "differential_evolution needs an empirical or atomic target");
  }
  const auto N = tgt_pts.cols();
  const int dim = Q * static_cast<int>(N) + Q;

  // target self-term is constant along the search; computed once
  double self_target = 0.0;
  for (Eigen::Index i = 0; i < tgt_pts.rows(); ++i)
    for (Eigen::Index j = 0; j < tgt_pts.rows(); ++j)
      self_target += 0.5 * tgt_w(i) * tgt_w(j) *
                     kernel.h_from_sq((tgt_pts.row(i) - tgt_pts.row(j))
                                          .squaredNorm());

  const Vector tgt_norms = tgt_pts.rowwise().squaredNorm();
  const auto h_sq = [&](double s) { return kernel.h_from_sq(s); };
  const auto loss_of = [&](const Vector& cand) {
    Matrix P(Q, N);
    for (int q = 0; q < Q; ++q)
      P.row(q) = cand.segment(q * N, N).transpose();
    const Vector a = project_weights(cand.tail(Q), mass);
    const Vector pn = P.rowwise().squaredNorm();
    Matrix sq = (-2.0 * P * tgt_pts.transpose());
    sq.colwise() += pn;
    sq.rowwise() += tgt_norms.transpose();
    const double cross =
        a.dot(sq.cwiseMax(0.0).unaryExpr(h_sq) * tgt_w);
    double self_q = 0.0;
    for (int q = 0; q < Q; ++q)
      for (int p = 0; p < Q; ++p)
        self_q += 0.5 * a(q) * a(p) *
                  kernel.h_from_sq((P.row(q) - P.row(p)).squaredNorm());
    return cross - self_q - self_target;
  };

  // search box: per-dimension data range with 10% margin; weights in [0,mass]
  Vector lo(dim), hi(dim);
  for (int q = 0; q < Q; ++q)
    for (Eigen::Index j = 0; j < N; ++j) {
      const double mn = tgt_pts.col(j).minCoeff();
      const double mx = tgt_pts.col(j).maxCoeff();
      const double margin = 0.1 * std::max(mx - mn, 1e-6);
      lo(q * N + j) = mn - margin;
      hi(q * N + j) = mx + margin;
    }
  for (int q = 0; q < Q; ++q) {
    lo(Q * N + q) = 0.0;
    hi(Q * N + q) = mass;
  }

  const int np = config.de_population_multiplier * dim;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Vector> pop(np);
  std::vector<double> fit(np);
  for (int i = 0; i < np; ++i) {
    Vector c(dim);
    for (int d = 0; d < dim; ++d) c(d) = lo(d) + unif(rng) * (hi(d) - lo(d));
    pop[i] = c;
    fit[i] = loss_of(c);
  }

  RunRecord rec;
  rec.config = config;
  const auto t0 = Clock::now();
  std::uniform_int_distribution<int> pick(0, np - 1);
  std::uniform_int_distribution<int> pick_dim(0, dim - 1);

  int best = static_cast<int>(
      std::min_element(fit.begin(), fit.end()) - fit.begin());
  for (int gen = 0; gen < config.max_iterations; ++gen) {
    for (int i = 0; i < np; ++i) {
      int a, b, c;
      do { a = pick(rng); } while (a == i);
      do { b = pick(rng); } while (b == i || b == a);
      do { c = pick(rng); } while (c == i || c == a || c == b);
      const int jrand = pick_dim(rng);
      Vector trial = pop[i];
      for (int d = 0; d < dim; ++d) {
        if (d == jrand || unif(rng) < config.de_crossover) {
          double x = pop[a](d) + config.de_weight_f * (pop[b](d) - pop[c](d));
          trial(d) = std::clamp(x, lo(d), hi(d));
        }
      }
      const double f = loss_of(trial);
      if (f <= fit[i]) {
        pop[i] = std::move(trial);
        fit[i] = f;
        if (f < fit[best]) best = i;
      }
    }
    if (gen % std::max(1, config.record_every) == 0 ||
        gen == config.max_iterations - 1)
      rec.trajectory.push_back({gen, fit[best], elapsed_ms(t0)});
  }

  Matrix P(Q, N);
  for (int q = 0; q < Q; ++q)
    P.row(q) = pop[best].segment(q * N, N).transpose();
  rec.final_points = P;
  rec.final_weights = project_weights(pop[best].tail(Q), mass);
  return rec;
}

namespace {

// Euclidean projection onto { w >= 0, sum w = mass }.
Vector project_simplex(const Vector& w, double mass) {
  const auto n = w.size();
  std::vector<double> u(w.data(), w.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cssv = 0.0, theta = 0.0;
  int rho = 0;
  for (int i = 0; i < n; ++i) {
    cssv += u[i];
    const double t = (cssv - mass) / (i + 1);
    if (u[i] - t > 0.0) {
      rho = i + 1;
      theta = t;
    }
  }
  (void)rho;
  return (w.array() - theta).cwiseMax(0.0);
}

}  // namespace

WeightSolution solve_weights(const KernelSpec& kernel,
                             const Eigen::Ref<const Matrix>& points,
                             const DiscreteMeasure& target,
                             WeightConstraint constraint) {
  kernel.validate();
  if (points.cols() != target.dim())
    throw std::invalid_argument("solve_weights: dimension mismatch");
  const auto Q = points.rows();
  const double mass = target.weight_sum();
  if (constraint == WeightConstraint::Simplex && std::abs(mass - 1.0) > 1e-9)
    throw std::invalid_argument("Simplex constraint requires target mass 1");

  // Gram of the induced kernel k_{z0}, z0 = first target atom.
  const Vector z0 = target.points().row(0).transpose();
  Matrix G(Q, Q);
  for (Eigen::Index i = 0; i < Q; ++i)
    for (Eigen::Index j = 0; j < Q; ++j)
      G(i, j) = k_from_h(kernel, z0, points.row(i).transpose(),
                         points.row(j).transpose());
  Vector c = Vector::Zero(Q);
  for (Eigen::Index i = 0; i < Q; ++i)
    for (Eigen::Index m = 0; m < target.size(); ++m)
      c(i) += target.weights()(m) *
              k_from_h(kernel, z0, points.row(i).transpose(),
                       target.points().row(m).transpose());

  // objective: f(a) = a^T G a - 2 c^T a  (+ const), grad = 2(G a - c)
  WeightSolution sol;
  if (constraint == WeightConstraint::Unconstrained) {
    // KKT system for min f s.t. sum a = mass
    Matrix K = Matrix::Zero(Q + 1, Q + 1);
    K.topLeftCorner(Q, Q) = 2.0 * G;
    K.topRightCorner(Q, 1).setOnes();
    K.bottomLeftCorner(1, Q).setOnes();
    Vector rhs(Q + 1);
    rhs.head(Q) = 2.0 * c;
    rhs(Q) = mass;
    Eigen::FullPivLU<Matrix> lu(K);
    if (lu.isInvertible()) {
      sol.weights = lu.solve(rhs).head(Q);
    } else {
      Matrix Kr = K;
      Kr.topLeftCorner(Q, Q) += 1e-10 * Matrix::Identity(Q, Q);
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Kr);
      sol.weights = cod.solve(rhs).head(Q);
      sol.degenerate = true;
    }
    return sol;
  }

  // Nonnegative / Simplex: Nesterov-accelerated projected gradient.
  const double lip =
      2.0 * std::max(1e-12, Eigen::SelfAdjointEigenSolver<Matrix>(G)
                                .eigenvalues()
                                .cwiseAbs()
                                .maxCoeff());
  const double step = 1.0 / lip;
  Vector a = project_simplex(Vector::Constant(Q, mass / Q), mass);
  Vector y = a, a_prev = a;
  double momentum = 1.0;
  for (int it = 0; it < 200000; ++it) {
    const Vector grad = 2.0 * (G * y - c);
    a = project_simplex(y - step * grad, mass);
    const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum *
                                                           momentum));
    y = a + ((momentum - 1.0) / m_next) * (a - a_prev);
    momentum = m_next;
    a_prev = a;
    // KKT residual every few iterations: on the support the gradient must
    // equal a common multiplier; off-support it must not be smaller.
    if (it % 50 == 0) {
      const Vector g = 2.0 * (G * a - c);
      double mu = 0.0;
      long active = 0;
      for (Eigen::Index q = 0; q < Q; ++q)
        if (a(q) > 1e-12) {
          mu += g(q);
          ++active;
        }
      if (active > 0) mu /= static_cast<double>(active);
      double res = 0.0;
      for (Eigen::Index q = 0; q < Q; ++q) {
        if (a(q) > 1e-12)
          res = std::max(res, std::abs(g(q) - mu));
        else
          res = std::max(res, std::max(0.0, mu - g(q)));
      }
      if (res <= 1e-8) break;
    }
  }
  sol.weights = a;
  return sol;
}

DiscreteMeasure exact_quantile_1d(
    const std::function<double(double)>& cdf_inverse, int J) {
  if (J < 1) throw std::invalid_argument("exact_quantile_1d: J >= 1");
  Matrix pts(J, 1);
  double prev = -std::numeric_limits<double>::infinity();
  for (int j = 1; j <= J; ++j) {
    const double x = cdf_inverse((j - 0.5) / J);
    if (!(x >= prev))
      throw std::invalid_argument(
          "exact_quantile_1d: inverse CDF is not monotone");
    pts(j - 1, 0) = x;
    prev = x;
  }
  return DiscreteMeasure::uniform(pts);
}

double normal_quantile(double p) {
  // Wichura (1988), algorithm AS 241, PPND16.
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p in (0,1) required");
  const double q = p - 0.5;
  double r;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) *
                     r + 6.7265770927008700853e+4) * r +
                 4.5921953931549871457e+4) * r + 1.3731693765509461125e+4) *
                   r + 1.9715909503065514427e+3) * r +
               1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) *
                     r + 3.9307895800092710610e+4) * r +
                 2.1213794301586595867e+4) * r + 5.3941960214247511077e+3) *
                   r + 6.8718700749205790830e+2) * r +
               4.2313330701600911252e+1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                    r + 2.41780725177450611770e-1) * r +
                1.27045825245236838258e+0) * r + 3.64784832476320460504e+0) *
                  r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                    r + 1.51986665636164571966e-2) * r +
                1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) *
                  r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                    r + 1.24266094738807843860e-3) * r +
                2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) *
                  r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                    r + 1.84631831751005468180e-5) * r +
                7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) *
                  r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

}  // namespace hemq
