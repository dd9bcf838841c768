#include "hemq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

namespace hemq {

std::vector<int> assign_nearest(const Eigen::Ref<const Matrix>& points,
                                const Eigen::Ref<const Matrix>& data) {
  if (points.rows() < 1) throw std::invalid_argument("assign_nearest: Q >= 1");
  if (points.cols() != data.cols())
    throw std::invalid_argument("assign_nearest: dimension mismatch");
  std::vector<int> out(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    int best = 0;
    double best_d = (data.row(i) - points.row(0)).squaredNorm();
    for (Eigen::Index q = 1; q < points.rows(); ++q) {
      const double d = (data.row(i) - points.row(q)).squaredNorm();
      if (d < best_d) {  // strict: ties keep the lowest index
        best_d = d;
        best = static_cast<int>(q);
      }
    }
    out[i] = best;
  }
  return out;
}

namespace {

double wcss(const Eigen::Ref<const Matrix>& data, const Matrix& centers,
            const std::vector<int>& assign) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    s += (data.row(i) - centers.row(assign[i])).squaredNorm();
  return s;
}

Matrix kmeanspp_init(const Eigen::Ref<const Matrix>& data, int k,
                     std::mt19937_64& rng) {
  const auto m = data.rows();
  Matrix centers(k, data.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, m - 1);
  centers.row(0) = data.row(first(rng));
  Vector d2 = Vector::Constant(m, std::numeric_limits<double>::max());
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < m; ++i)
      d2(i) = std::min(d2(i),
                       (data.row(i) - centers.row(c - 1)).squaredNorm());
    std::discrete_distribution<Eigen::Index> pick(d2.data(), d2.data() + m);
    centers.row(c) = data.row(pick(rng));
  }
  return centers;
}

Matrix lloyd(const Eigen::Ref<const Matrix>& data, Matrix centers,
             int max_iters, double tol) {
  const int k = static_cast<int>(centers.rows());
  double prev_obj = std::numeric_limits<double>::max();
  for (int it = 0; it < max_iters; ++it) {
    auto assign = assign_nearest(centers, data);
    const double obj = wcss(data, centers, assign);
    if (obj > prev_obj + 1e-9)
      throw std::logic_error("kmeans objective increased");
    prev_obj = obj;
    Matrix next = Matrix::Zero(k, data.cols());
    std::vector<long> counts(k, 0);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      next.row(assign[i]) += data.row(i);
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        next.row(c) /= static_cast<double>(counts[c]);
      } else {
        // reseed at the point farthest from its assigned centroid
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
          const double d = (data.row(i) - centers.row(assign[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        next.row(c) = data.row(far);
      }
    }
    const double movement = (next - centers).rowwise().norm().maxCoeff();
    centers = next;
    if (movement < tol) break;
  }
  return centers;
}

}  // namespace

Matrix kmeans(const Eigen::Ref<const Matrix>& data, int k, std::uint64_t seed,
              int restarts, int max_iters, double tol) {
  if (k < 1 || k > data.rows())
    throw std::invalid_argument("kmeans: need 1 <= K <= M");
  Matrix best;
  double best_obj = std::numeric_limits<double>::max();
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
    Matrix centers =
        lloyd(data, kmeanspp_init(data, k, rng), max_iters, tol);
    const double obj = wcss(data, centers, assign_nearest(centers, data));
    if (obj < best_obj) {
      best_obj = obj;
      best = centers;
    }
  }
  return best;
}

int dve(const std::vector<int>& selected_labels) {
  return static_cast<int>(
      std::set<int>(selected_labels.begin(), selected_labels.end()).size());
}

std::vector<std::vector<long>> confusion_matrix(const std::vector<int>& truth,
                                                const std::vector<int>& pred) {
  if (truth.size() != pred.size())
    throw std::invalid_argument("confusion_matrix: length mismatch");
  std::map<int, int> tix, pix;
  for (int t : truth) tix.emplace(t, 0);
  for (int p : pred) pix.emplace(p, 0);
  int i = 0;
  for (auto& kv : tix) kv.second = i++;
  i = 0;
  for (auto& kv : pix) kv.second = i++;
  std::vector<std::vector<long>> conf(tix.size(),
                                      std::vector<long>(pix.size(), 0));
  for (std::size_t n = 0; n < truth.size(); ++n)
    ++conf[tix[truth[n]]][pix[pred[n]]];
  return conf;
}

double adjusted_rand(const std::vector<int>& labels_a,
                     const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw std::invalid_argument("adjusted_rand: length mismatch");
  const auto conf = confusion_matrix(labels_a, labels_b);
  auto choose2 = [](double n) { return n * (n - 1.0) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  std::vector<double> row_sums(conf.size(), 0.0);
  std::vector<double> col_sums(conf.empty() ? 0 : conf[0].size(), 0.0);
  for (std::size_t i = 0; i < conf.size(); ++i)
    for (std::size_t j = 0; j < conf[i].size(); ++j) {
      sum_ij += choose2(static_cast<double>(conf[i][j]));
      row_sums[i] += static_cast<double>(conf[i][j]);
      col_sums[j] += static_cast<double>(conf[i][j]);
    }
  for (double s : row_sums) sum_a += choose2(s);
  for (double s : col_sums) sum_b += choose2(s);
  const double n2 = choose2(static_cast<double>(labels_a.size()));
  const double expected = sum_a * sum_b / n2;
  const double max_idx = 0.5 * (sum_a + sum_b);
  if (max_idx == expected) return 1.0;  // both partitions trivial
  return (sum_ij - expected) / (max_idx - expected);
}

}  // namespace hemq
