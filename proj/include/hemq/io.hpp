#pragma once

#include <filesystem>
#include <string>

#include "hemq/measures.hpp"
#include "hemq/optimizers.hpp"

namespace hemq {

/// Rectangular numeric CSV; a non-numeric first line is treated as a header.
/// label_col (0-based) selects an integer label column, removed from the
/// data matrix.
TargetMeasure load_csv(const std::filesystem::path& path,
                       std::optional<int> label_col = {});

/// Column-wise standardization to mean 0 and sample (n-1) deviation 1;
/// constant columns map to zero.
Matrix standardize(const Eigen::Ref<const Matrix>& data,
                   bool* had_constant_column = nullptr);

/// IDX image + label pair (magic 0x803 / 0x801, big-endian); pixels scaled
/// to [0,1], images flattened row-major.
TargetMeasure load_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path);

/// Flat key-value run configuration (one `key = value` per line, '#'
/// comments). Recognized keys are documented in the README.
struct RunConfig {
  KernelSpec kernel = KernelSpec::energy();
  OptimizerConfig optimizer;
  std::string method = "shemq";  // shemq | flow | de | exact1d
  int Q = 8;
  bool standardize_data = false;
  std::optional<int> label_col;
  std::string target_kind = "gaussian";  // csv | idx | gaussian | mixture-grid | atoms
  std::filesystem::path csv_path;
  std::filesystem::path idx_images, idx_labels;
  int gaussian_dim = 1;
  double gaussian_sigma = 1.0;
  int grid_rows = 3, grid_cols = 4;
  double grid_sigma = 0.15;
  std::string atoms_literal;  // "x1,...:w; x1,...:w; ..."
  double de_mass = 1.0;
  std::filesystem::path output_dir = "out";
};

RunConfig parse_config_file(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);

TargetMeasure build_target(const RunConfig& cfg);

/// Executes a configured run: writes config.json, trajectory.csv,
/// quantizer.json and metrics.json into the output directory. Returns the
/// process exit code.
int run(const RunConfig& cfg);

// quantizer.json round-trip
void write_quantizer_json(const std::filesystem::path& path,
                          const Matrix& points, const Vector& weights);
DiscreteMeasure read_quantizer_json(const std::filesystem::path& path);

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<IterationStat>& traj);

/// write-temp-then-rename
void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content);

DiscreteMeasure parse_atoms_literal(const std::string& text);

}  // namespace hemq
