#include "hemq/measures.hpp"

#include <cmath>

namespace hemq {

DiscreteMeasure::DiscreteMeasure(Matrix points, Vector weights,
                                 bool probability_mode)
    : points_(std::move(points)),
      weights_(std::move(weights)),
      probability_mode_(probability_mode) {
  if (points_.rows() < 1)
    throw std::invalid_argument("DiscreteMeasure needs Q >= 1 atoms");
  if (points_.rows() != weights_.size())
    throw std::invalid_argument("points/weights size mismatch");
  if (!points_.allFinite() || !weights_.allFinite())
    throw std::invalid_argument("non-finite entries in DiscreteMeasure");
  if (probability_mode_) {
    if ((weights_.array() < 0.0).any())
      throw std::invalid_argument("probability mode requires weights >= 0");
    if (std::abs(weights_.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("probability mode requires sum(weights)=1");
  }
}

DiscreteMeasure DiscreteMeasure::uniform(Matrix points) {
  const auto q = points.rows();
  return DiscreteMeasure(std::move(points),
                         Vector::Constant(q, 1.0 / static_cast<double>(q)),
                         true);
}

DiscreteMeasure DiscreteMeasure::dirac(Vector point) {
  Matrix p(1, point.size());
  p.row(0) = point.transpose();
  return DiscreteMeasure(std::move(p), Vector::Constant(1, 1.0), true);
}

void DiscreteMeasure::set_points(const Matrix& p) {
  if (p.rows() != points_.rows() || p.cols() != points_.cols())
    throw std::invalid_argument("set_points: shape mismatch");
  if (!p.allFinite()) throw std::invalid_argument("set_points: non-finite");
  points_ = p;
}

void DiscreteMeasure::set_weights(const Vector& w) {
  if (w.size() != weights_.size())
    throw std::invalid_argument("set_weights: size mismatch");
  if (!w.allFinite()) throw std::invalid_argument("set_weights: non-finite");
  if (probability_mode_) {
    if ((w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("set_weights: probability mode violated");
  }
  weights_ = w;
}

TargetMeasure::TargetMeasure(EmpiricalTarget e) : value_(std::move(e)) {
  const auto& emp = std::get<EmpiricalTarget>(value_);
  if (emp.data.rows() < 1)
    throw std::invalid_argument("empirical target needs M >= 1 rows");
  if (emp.labels && static_cast<Eigen::Index>(emp.labels->size()) !=
                        emp.data.rows())
    throw std::invalid_argument("labels length must equal number of rows");
}

TargetMeasure::TargetMeasure(GaussianMixtureTarget g) : value_(std::move(g)) {
  const auto& mix = std::get<GaussianMixtureTarget>(value_);
  if (mix.components.empty())
    throw std::invalid_argument("mixture needs at least one component");
  double wsum = 0.0;
  const auto n = mix.components.front().mean.size();
  for (const auto& c : mix.components) {
    if (c.sigma <= 0.0)
      throw std::invalid_argument("mixture sigmas must be > 0");
    if (c.mixture_weight < 0.0)
      throw std::invalid_argument("mixture weights must be >= 0");
    if (c.mean.size() != n)
      throw std::invalid_argument("mixture component dimension mismatch");
    wsum += c.mixture_weight;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("mixture weights must sum to 1");
}

TargetMeasure::TargetMeasure(AtomicTarget a) : value_(std::move(a)) {}

TargetMeasure TargetMeasure::empirical(Matrix data,
                                       std::optional<std::vector<int>> labels) {
  return TargetMeasure(EmpiricalTarget{std::move(data), std::move(labels)});
}

TargetMeasure TargetMeasure::gaussian(Vector mean, double sigma) {
  return TargetMeasure(
      GaussianMixtureTarget{{GaussianComponent{std::move(mean), sigma, 1.0}}});
}

TargetMeasure TargetMeasure::mixture(std::vector<GaussianComponent> comps) {
  return TargetMeasure(GaussianMixtureTarget{std::move(comps)});
}

TargetMeasure TargetMeasure::atomic(DiscreteMeasure m) {
  return TargetMeasure(AtomicTarget{std::move(m)});
}

Eigen::Index TargetMeasure::dim() const {
  if (is_empirical()) return as_empirical().data.cols();
  if (is_mixture()) return as_mixture().components.front().mean.size();
  return as_atomic().measure.dim();
}

bool TargetMeasure::is_empirical() const {
  return std::holds_alternative<EmpiricalTarget>(value_);
}
bool TargetMeasure::is_mixture() const {
  return std::holds_alternative<GaussianMixtureTarget>(value_);
}
bool TargetMeasure::is_atomic() const {
  return std::holds_alternative<AtomicTarget>(value_);
}
const EmpiricalTarget& TargetMeasure::as_empirical() const {
  return std::get<EmpiricalTarget>(value_);
}
const GaussianMixtureTarget& TargetMeasure::as_mixture() const {
  return std::get<GaussianMixtureTarget>(value_);
}
const AtomicTarget& TargetMeasure::as_atomic() const {
  return std::get<AtomicTarget>(value_);
}

Matrix TargetMeasure::sample(int n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  return sample(n, rng);
}

Matrix TargetMeasure::sample(int n, std::mt19937_64& rng) const {
  if (n < 1) throw std::invalid_argument("sample: n >= 1 required");
  Matrix out(n, dim());
  if (is_empirical()) {
    const auto& data = as_empirical().data;
    std::uniform_int_distribution<Eigen::Index> pick(0, data.rows() - 1);
    for (int i = 0; i < n; ++i) out.row(i) = data.row(pick(rng));
  } else if (is_mixture()) {
    const auto& comps = as_mixture().components;
    std::vector<double> w;
    w.reserve(comps.size());
    for (const auto& c : comps) w.push_back(c.mixture_weight);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      const auto& c = comps[pick(rng)];
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        out(i, j) = c.mean(j) + c.sigma * gauss(rng);
    }
  } else {
    const auto& m = as_atomic().measure;
    if (m.has_negative_weight())
      throw std::invalid_argument(
          "cannot sample a signed atomic measure (negative weights)");
    std::vector<double> w(m.weights().data(),
                          m.weights().data() + m.weights().size());
    std::discrete_distribution<Eigen::Index> pick(w.begin(), w.end());
    for (int i = 0; i < n; ++i) out.row(i) = m.points().row(pick(rng));
  }
  return out;
}

Vector brownian_path(const Eigen::Ref<const Vector>& increments) {
  const auto n = increments.size();
  Vector path(n + 1);
  path(0) = 0.0;
  const double scale = n > 0 ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += increments(i);
    path(i + 1) = acc * scale;
  }
  return path;
}

}  // namespace hemq
