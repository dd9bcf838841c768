#pragma once

#include <cstdint>
#include <vector>

#include "hemq/kernels.hpp"

namespace hemq {

struct AssignmentResult {
  std::vector<int> assignment;              // per-row nearest quantizer index
  std::vector<std::vector<long>> confusion; // class x cluster counts
  double ari = 0.0;
};

/// Euclidean nearest row of `points` for each row of `data`; ties go to the
/// lowest index.
std::vector<int> assign_nearest(const Eigen::Ref<const Matrix>& points,
                                const Eigen::Ref<const Matrix>& data);

/// Lloyd iterations from k-means++ seeding; best of `restarts` seeded
/// restarts by within-cluster sum of squares. Empty clusters are reseeded
/// at the point farthest from its centroid.
Matrix kmeans(const Eigen::Ref<const Matrix>& data, int k, std::uint64_t seed,
              int restarts = 10, int max_iters = 300, double tol = 1e-9);

/// Count of distinct values.
int dve(const std::vector<int>& selected_labels);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand(const std::vector<int>& labels_a,
                     const std::vector<int>& labels_b);

std::vector<std::vector<long>> confusion_matrix(const std::vector<int>& truth,
                                                const std::vector<int>& pred);

}  // namespace hemq
