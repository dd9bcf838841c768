#include "hemq/io.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "hemq/metrics.hpp"

namespace hemq {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

bool parse_double(const std::string& tok, double& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t' || *(e - 1) == '\r'))
    --e;
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

TargetMeasure load_csv(const fs::path& path, std::optional<int> label_col) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool first = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto toks = split(line, ',');
    std::vector<double> vals(toks.size());
    bool numeric = true;
    for (std::size_t i = 0; i < toks.size(); ++i)
      if (!parse_double(toks[i], vals[i])) {
        numeric = false;
        break;
      }
    if (!numeric) {
      if (first) {  // header
        first = false;
        continue;
      }
      throw std::runtime_error("CSV parse error at line " +
                               std::to_string(lineno) + " in " +
                               path.string());
    }
    first = false;
    if (width == 0)
      width = vals.size();
    else if (vals.size() != width)
      throw std::runtime_error("ragged CSV row at line " +
                               std::to_string(lineno) + " in " +
                               path.string());
    rows.push_back(std::move(vals));
  }
  if (rows.empty())
    throw std::runtime_error("empty CSV: " + path.string());

  const int ncols = static_cast<int>(width);
  int lc = -1;
  if (label_col) {
    lc = *label_col;
    if (lc < 0) lc = ncols + lc;  // negative: from the end
    if (lc < 0 || lc >= ncols)
      throw std::runtime_error("label column out of range");
  }
  Matrix data(rows.size(), lc >= 0 ? ncols - 1 : ncols);
  std::vector<int> labels;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int j = 0;
    for (int c = 0; c < ncols; ++c) {
      if (c == lc) {
        labels.push_back(static_cast<int>(std::lround(rows[i][c])));
        continue;
      }
      data(i, j++) = rows[i][c];
    }
  }
  if (lc >= 0) return TargetMeasure::empirical(std::move(data), labels);
  return TargetMeasure::empirical(std::move(data));
}

Matrix standardize(const Eigen::Ref<const Matrix>& data,
                   bool* had_constant_column) {
  if (data.rows() < 2)
    throw std::invalid_argument("standardize requires M >= 2 rows");
  Matrix out = data;
  bool constant = false;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double mean = data.col(c).mean();
    const double sd = std::sqrt((data.col(c).array() - mean).square().sum() /
                                (data.rows() - 1));
    if (sd > 0.0) {
      out.col(c) = (data.col(c).array() - mean) / sd;
    } else {
      out.col(c).setZero();
      constant = true;
    }
  }
  if (constant && !had_constant_column)
    std::cerr << "warning: constant column mapped to zeros in standardize\n";
  if (had_constant_column) *had_constant_column = constant;
  return out;
}

namespace {

std::uint32_t read_be32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("IDX file truncated");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

TargetMeasure load_idx(const fs::path& images_path,
                       const fs::path& labels_path) {
  std::ifstream im(images_path, std::ios::binary);
  if (!im) throw std::runtime_error("cannot open " + images_path.string());
  if (read_be32(im) != 0x00000803u)
    throw std::runtime_error("bad IDX image magic in " + images_path.string());
  const std::uint32_t n = read_be32(im);
  const std::uint32_t rows = read_be32(im);
  const std::uint32_t cols = read_be32(im);
  const std::size_t pix = std::size_t(rows) * cols;
  std::vector<unsigned char> buf(pix);
  Matrix data(n, pix);
  for (std::uint32_t i = 0; i < n; ++i) {
    im.read(reinterpret_cast<char*>(buf.data()), pix);
    if (!im) throw std::runtime_error("IDX image data truncated");
    for (std::size_t p = 0; p < pix; ++p) data(i, p) = buf[p] / 255.0;
  }

  std::ifstream lb(labels_path, std::ios::binary);
  if (!lb) throw std::runtime_error("cannot open " + labels_path.string());
  if (read_be32(lb) != 0x00000801u)
    throw std::runtime_error("bad IDX label magic in " + labels_path.string());
  const std::uint32_t nl = read_be32(lb);
  if (nl != n)
    throw std::runtime_error("IDX image/label count mismatch: " +
                             std::to_string(n) + " vs " + std::to_string(nl));
  std::vector<int> labels(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    char c;
    lb.read(&c, 1);
    if (!lb) throw std::runtime_error("IDX label data truncated");
    labels[i] = static_cast<unsigned char>(c);
  }
  return TargetMeasure::empirical(std::move(data), std::move(labels));
}

DiscreteMeasure parse_atoms_literal(const std::string& text) {
  // "x1 x2 ... : w ; x1 x2 ... : w"
  std::vector<std::vector<double>> pts;
  std::vector<double> ws;
  for (const auto& atom : split(text, ';')) {
    if (atom.find_first_not_of(" \t") == std::string::npos) continue;
    const auto parts = split(atom, ':');
    if (parts.size() != 2)
      throw std::invalid_argument("atom literal needs 'coords : weight'");
    std::vector<double> coords;
    std::stringstream ss(parts[0]);
    std::string tok;
    while (ss >> tok) {
      double v;
      if (!parse_double(tok, v))
        throw std::invalid_argument("bad coordinate: " + tok);
      coords.push_back(v);
    }
    double w;
    if (!parse_double(parts[1], w))
      throw std::invalid_argument("bad weight: " + parts[1]);
    pts.push_back(std::move(coords));
    ws.push_back(w);
  }
  if (pts.empty()) throw std::invalid_argument("empty atoms literal");
  Matrix P(pts.size(), pts[0].size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].size() != pts[0].size())
      throw std::invalid_argument("atoms have inconsistent dimensions");
    for (std::size_t j = 0; j < pts[i].size(); ++j) P(i, j) = pts[i][j];
  }
  Vector W = Eigen::Map<Vector>(ws.data(), ws.size());
  return DiscreteMeasure(std::move(P), std::move(W));
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::string kernel_name = "huber-energy";
  double r = 1.0, a = 1e-6, sigma = 1.0, lambda = 0.0;
  bool seed_seen = false;

  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto num = [&](const std::string& v) {
      double d;
      if (!parse_double(v, d))
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": bad number '" + v + "'");
      return d;
    };

    if (key == "kernel") kernel_name = val;
    else if (key == "r") r = num(val);
    else if (key == "a") a = num(val);
    else if (key == "sigma") sigma = num(val);
    else if (key == "lambda") lambda = num(val);
    else if (key == "method") cfg.method = val;
    else if (key == "Q") cfg.Q = static_cast<int>(num(val));
    else if (key == "batch") cfg.optimizer.batch_size = static_cast<int>(num(val));
    else if (key == "lr") cfg.optimizer.learning_rate = num(val);
    else if (key == "beta1") cfg.optimizer.adam_beta1 = num(val);
    else if (key == "beta2") cfg.optimizer.adam_beta2 = num(val);
    else if (key == "iters") cfg.optimizer.max_iterations = static_cast<int>(num(val));
    else if (key == "flow.T") cfg.optimizer.flow_total_time = num(val);
    else if (key == "flow.dt") cfg.optimizer.flow_step = num(val);
    else if (key == "eps_tol") cfg.optimizer.eps_tol = num(val);
    else if (key == "avg_tail") cfg.optimizer.average_tail_fraction = num(val);
    else if (key == "record_every") cfg.optimizer.record_every = static_cast<int>(num(val));
    else if (key == "seed") { cfg.optimizer.seed = static_cast<std::uint64_t>(num(val)); seed_seen = true; }
    else if (key == "standardize") cfg.standardize_data = (val == "true" || val == "1");
    else if (key == "label-col") cfg.label_col = static_cast<int>(num(val));
    else if (key == "target") cfg.target_kind = val;
    else if (key == "target.csv") cfg.csv_path = val;
    else if (key == "target.images") cfg.idx_images = val;
    else if (key == "target.labels") cfg.idx_labels = val;
    else if (key == "target.dim") cfg.gaussian_dim = static_cast<int>(num(val));
    else if (key == "target.sigma") cfg.gaussian_sigma = num(val);
    else if (key == "target.grid-rows") cfg.grid_rows = static_cast<int>(num(val));
    else if (key == "target.grid-cols") cfg.grid_cols = static_cast<int>(num(val));
    else if (key == "target.grid-sigma") cfg.grid_sigma = num(val);
    else if (key == "target.atoms") cfg.atoms_literal = val;
    else if (key == "mass") cfg.de_mass = num(val);
    else if (key == "out") cfg.output_dir = val;
    else
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
  }
  if (!seed_seen)
    throw std::runtime_error("config must set an explicit seed");
  cfg.kernel = kernel_from_name(kernel_name, r, a, sigma, lambda);
  if (cfg.method == "shemq") cfg.optimizer.method = OptimizerMethod::Shemq;
  else if (cfg.method == "flow") cfg.optimizer.method = OptimizerMethod::GradientFlow;
  else if (cfg.method == "de") {
    cfg.optimizer.method = OptimizerMethod::DifferentialEvolution;
    cfg.optimizer.weight_mode = WeightMode::OptimizeNonnegative;
  } else if (cfg.method == "exact1d")
    cfg.optimizer.method = OptimizerMethod::ExactQuantile1D;
  else
    throw std::runtime_error("unknown method: " + cfg.method);
  return cfg;
}

RunConfig parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

TargetMeasure build_target(const RunConfig& cfg) {
  if (cfg.target_kind == "csv") {
    auto t = load_csv(cfg.csv_path, cfg.label_col);
    if (cfg.standardize_data) {
      auto emp = t.as_empirical();
      emp.data = standardize(emp.data);
      return TargetMeasure(std::move(emp));
    }
    return t;
  }
  if (cfg.target_kind == "idx") return load_idx(cfg.idx_images, cfg.idx_labels);
  if (cfg.target_kind == "gaussian")
    return TargetMeasure::gaussian(Vector::Zero(cfg.gaussian_dim),
                                   cfg.gaussian_sigma);
  if (cfg.target_kind == "mixture-grid") {
    std::vector<GaussianComponent> comps;
    const double w = 1.0 / (cfg.grid_rows * cfg.grid_cols);
    for (int i = 0; i < cfg.grid_rows; ++i)
      for (int j = 0; j < cfg.grid_cols; ++j) {
        Vector mean(2);
        mean << i, j;
        comps.push_back({mean, cfg.grid_sigma, w});
      }
    return TargetMeasure::mixture(std::move(comps));
  }
  if (cfg.target_kind == "atoms")
    return TargetMeasure::atomic(parse_atoms_literal(cfg.atoms_literal));
  throw std::runtime_error("unknown target kind: " + cfg.target_kind);
}

void atomic_write_text(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

void write_quantizer_json(const fs::path& path, const Matrix& points,
                          const Vector& weights) {
  json j;
  j["points"] = json::array();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < points.cols(); ++c) row.push_back(points(i, c));
    j["points"].push_back(std::move(row));
  }
  j["weights"] = json::array();
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    j["weights"].push_back(weights(i));
  atomic_write_text(path, j.dump(2) + "\n");
}

DiscreteMeasure read_quantizer_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  const auto& jp = j.at("points");
  const auto& jw = j.at("weights");
  if (jp.empty()) throw std::runtime_error("quantizer.json has no points");
  Matrix pts(jp.size(), jp[0].size());
  for (std::size_t i = 0; i < jp.size(); ++i)
    for (std::size_t c = 0; c < jp[i].size(); ++c)
      pts(i, c) = jp[i][c].get<double>();
  Vector w(jw.size());
  for (std::size_t i = 0; i < jw.size(); ++i) w(i) = jw[i].get<double>();
  return DiscreteMeasure(std::move(pts), std::move(w));
}

void write_trajectory_csv(const fs::path& path,
                          const std::vector<IterationStat>& traj) {
  std::ostringstream out;
  out << "iteration,loss,wall_ms\n";
  out << std::setprecision(17);
  for (const auto& s : traj)
    out << s.iteration << "," << s.loss << "," << s.wall_ms << "\n";
  atomic_write_text(path, out.str());
}

namespace {

json config_to_json(const RunConfig& cfg) {
  json j;
  j["kernel"]["family"] = cfg.kernel.family_name();
  j["kernel"]["r"] = cfg.kernel.r;
  j["kernel"]["a"] = cfg.kernel.a;
  j["kernel"]["sigma"] = cfg.kernel.sigma;
  j["kernel"]["lambda"] = cfg.kernel.lambda;
  j["method"] = cfg.method;
  j["Q"] = cfg.Q;
  j["batch"] = cfg.optimizer.batch_size;
  j["lr"] = cfg.optimizer.learning_rate;
  j["beta1"] = cfg.optimizer.adam_beta1;
  j["beta2"] = cfg.optimizer.adam_beta2;
  j["iters"] = cfg.optimizer.max_iterations;
  j["flow_T"] = cfg.optimizer.flow_total_time;
  j["eps_tol"] = cfg.optimizer.eps_tol;
  j["seed"] = cfg.optimizer.seed;
  j["target"] = cfg.target_kind;
  j["standardize"] = cfg.standardize_data;
  j["out"] = cfg.output_dir.string();
  return j;
}

}  // namespace

int run(const RunConfig& cfg) {
  try {
    const auto target = build_target(cfg);
    RunRecord rec;
    if (cfg.optimizer.method == OptimizerMethod::Shemq) {
      rec = shemq(cfg.kernel, target, cfg.Q, cfg.optimizer);
    } else if (cfg.optimizer.method == OptimizerMethod::GradientFlow) {
      if (!target.is_mixture() || target.as_mixture().components.size() != 1)
        throw std::runtime_error("flow requires a single-Gaussian target");
      const auto& comp = target.as_mixture().components.front();
      std::mt19937_64 rng(cfg.optimizer.seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      Matrix X0(cfg.Q, comp.mean.size());
      for (Eigen::Index i = 0; i < X0.rows(); ++i)
        for (Eigen::Index j = 0; j < X0.cols(); ++j)
          X0(i, j) = comp.mean(j) + 2.5 * comp.sigma * gauss(rng);
      rec = gradient_flow(DiscreteMeasure::uniform(X0), comp.mean, comp.sigma,
                          cfg.optimizer);
    } else if (cfg.optimizer.method == OptimizerMethod::DifferentialEvolution) {
      rec = differential_evolution(cfg.kernel, target, cfg.Q, cfg.optimizer,
                                   cfg.de_mass);
    } else {  // exact1d on the analytic 1D Gaussian target
      if (!target.is_mixture() || target.as_mixture().components.size() != 1 ||
          target.dim() != 1)
        throw std::runtime_error("exact1d requires a 1D Gaussian target");
      const auto& comp = target.as_mixture().components.front();
      const auto q = exact_quantile_1d(
          [&](double p) {
            return comp.mean(0) + comp.sigma * normal_quantile(p);
          },
          cfg.Q);
      rec.final_points = q.points();
      rec.final_weights = q.weights();
      rec.config = cfg.optimizer;
    }

    fs::create_directories(cfg.output_dir);
    atomic_write_text(cfg.output_dir / "config.json",
                      config_to_json(cfg).dump(2) + "\n");
    write_trajectory_csv(cfg.output_dir / "trajectory.csv", rec.trajectory);
    write_quantizer_json(cfg.output_dir / "quantizer.json", rec.final_points,
                         rec.final_weights);

    json metrics;
    if (!rec.trajectory.empty()) {
      metrics["initial_loss"] = rec.trajectory.front().loss;
      metrics["final_loss"] = rec.trajectory.back().loss;
    }
    if (target.is_empirical() && target.as_empirical().labels) {
      const auto& emp = target.as_empirical();
      const auto assign = assign_nearest(rec.final_points, emp.data);
      const auto proj = assign_nearest(emp.data, rec.final_points);
      std::vector<int> proj_labels;
      for (int idx : proj) proj_labels.push_back((*emp.labels)[idx]);
      metrics["dve"] = dve(proj_labels);
      metrics["ari_vs_labels"] = adjusted_rand(*emp.labels, assign);
    }
    atomic_write_text(cfg.output_dir / "metrics.json", metrics.dump(2) + "\n");
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hemq
