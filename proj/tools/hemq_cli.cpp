#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "hemq/io.hpp"
#include "hemq/metrics.hpp"

using json = nlohmann::json;

namespace {

struct Overrides {
  std::string kernel, out, target;
  double r = -1, a = -1, sigma = -1, lambda = -1, lr = -1;
  int Q = -1, batch = -1, iters = -1, label_col = -1000;
  long long seed = -1;
  bool standardize = false;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--kernel", ov.kernel, "kernel family");
  cmd->add_option("--r", ov.r, "Huber-energy exponent");
  cmd->add_option("--a", ov.a, "Huber-energy smoothing");
  cmd->add_option("--sigma", ov.sigma, "Gaussian bandwidth");
  cmd->add_option("--lambda", ov.lambda, "mean-penalty weight");
  cmd->add_option("--Q", ov.Q, "number of quantization points");
  cmd->add_option("--batch", ov.batch, "batch size");
  cmd->add_option("--lr", ov.lr, "learning rate");
  cmd->add_option("--iters", ov.iters, "iteration budget");
  cmd->add_option("--seed", ov.seed, "RNG seed");
  cmd->add_option("--out", ov.out, "output directory");
  cmd->add_option("--target", ov.target, "target kind");
  cmd->add_option("--label-col", ov.label_col, "label column index");
  cmd->add_flag("--standardize", ov.standardize, "standardize columns");
}

hemq::RunConfig apply(hemq::RunConfig cfg, const Overrides& ov) {
  double r = cfg.kernel.r, a = cfg.kernel.a, sigma = cfg.kernel.sigma,
         lambda = cfg.kernel.lambda;
  std::string fam = cfg.kernel.family_name();
  if (!ov.kernel.empty()) fam = ov.kernel;
  if (ov.r >= 0) r = ov.r;
  if (ov.a >= 0) a = ov.a;
  if (ov.sigma >= 0) sigma = ov.sigma;
  if (ov.lambda >= 0) lambda = ov.lambda;
  cfg.kernel = hemq::kernel_from_name(fam, r, a, sigma, lambda);
  if (ov.Q >= 0) cfg.Q = ov.Q;
  if (ov.batch >= 0) cfg.optimizer.batch_size = ov.batch;
  if (ov.lr >= 0) cfg.optimizer.learning_rate = ov.lr;
  if (ov.iters >= 0) cfg.optimizer.max_iterations = ov.iters;
  if (ov.seed >= 0) cfg.optimizer.seed = static_cast<std::uint64_t>(ov.seed);
  if (!ov.out.empty()) cfg.output_dir = ov.out;
  if (!ov.target.empty()) cfg.target_kind = ov.target;
  if (ov.label_col != -1000) cfg.label_col = ov.label_col;
  if (ov.standardize) cfg.standardize_data = true;
  return cfg;
}

int run_method(const std::string& method, const std::string& config_path,
               const Overrides& ov) {
  hemq::RunConfig cfg = hemq::parse_config_file(config_path);
  cfg = apply(cfg, ov);
  if (cfg.method != method) {
    cfg.method = method;
    // re-resolve the optimizer method enum
    if (method == "shemq") cfg.optimizer.method = hemq::OptimizerMethod::Shemq;
    else if (method == "flow") cfg.optimizer.method = hemq::OptimizerMethod::GradientFlow;
    else if (method == "de") {
      cfg.optimizer.method = hemq::OptimizerMethod::DifferentialEvolution;
      cfg.optimizer.weight_mode = hemq::WeightMode::OptimizeNonnegative;
    } else if (method == "exact1d")
      cfg.optimizer.method = hemq::OptimizerMethod::ExactQuantile1D;
  }
  return hemq::run(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hemq: kernel measure quantization"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;

  auto* quantize = app.add_subcommand("quantize", "stochastic quantization");
  quantize->add_option("--config", config_path, "run config file")->required();
  add_override_flags(quantize, ov);

  auto* flow = app.add_subcommand("flow", "analytic gradient flow");
  flow->add_option("--config", config_path, "run config file")->required();
  add_override_flags(flow, ov);

  auto* exact1d = app.add_subcommand("exact1d", "1D quantile quantizer");
  exact1d->add_option("--config", config_path, "run config file")->required();
  add_override_flags(exact1d, ov);

  std::string csv_a, csv_b, est_kind = "blue2";
  auto* estimate = app.add_subcommand("estimate", "distance estimation from "
                                                  "two sample CSVs");
  estimate->add_option("first", csv_a, "first sample CSV")->required();
  estimate->add_option("second", csv_b, "second sample CSV")->required();
  estimate->add_option("--estimator", est_kind, "blue2 | blue1 | vstat");
  add_override_flags(estimate, ov);

  std::string quantizer_path, data_path;
  int eval_label_col = -1000;
  auto* eval = app.add_subcommand("eval", "evaluate a quantizer on a dataset");
  eval->add_option("quantizer", quantizer_path, "quantizer.json")->required();
  eval->add_option("data", data_path, "dataset CSV")->required();
  eval->add_option("--label-col", eval_label_col, "label column");
  eval->add_flag("--standardize", ov.standardize, "standardize columns");

  CLI11_PARSE(app, argc, argv);

  try {
    if (quantize->parsed()) return run_method("shemq", config_path, ov);
    if (flow->parsed()) return run_method("flow", config_path, ov);
    if (exact1d->parsed()) return run_method("exact1d", config_path, ov);

    if (estimate->parsed()) {
      const auto sa = hemq::load_csv(csv_a).as_empirical().data;
      const auto sb = hemq::load_csv(csv_b).as_empirical().data;
      hemq::KernelSpec kernel =
          ov.kernel.empty()
              ? hemq::KernelSpec::huber_energy(ov.r >= 0 ? ov.r : 1.0,
                                               ov.a >= 0 ? ov.a : 0.0)
              : hemq::kernel_from_name(ov.kernel, ov.r >= 0 ? ov.r : 1.0,
                                       ov.a >= 0 ? ov.a : 0.0,
                                       ov.sigma >= 0 ? ov.sigma : 1.0,
                                       ov.lambda >= 0 ? ov.lambda : 0.0);
      hemq::DistanceEstimate est;
      if (est_kind == "blue2") est = hemq::blue_two_sample(kernel, sa, sb);
      else if (est_kind == "blue1")
        est = hemq::blue_one_sample(kernel, hemq::DiscreteMeasure::uniform(sa),
                                    sb);
      else if (est_kind == "vstat") est = hemq::v_statistic(kernel, sa, sb);
      else throw std::runtime_error("unknown estimator: " + est_kind);
      est.seed = ov.seed >= 0 ? static_cast<std::uint64_t>(ov.seed) : 0;
      json j;
      j["value"] = est.value;
      j["kind"] = est_kind;
      j["q"] = est.q_samples;
      j["j"] = est.j_samples;
      j["seed"] = est.seed;
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (eval->parsed()) {
      const auto q = hemq::read_quantizer_json(quantizer_path);
      std::optional<int> lc;
      if (eval_label_col != -1000) lc = eval_label_col;
      auto target = hemq::load_csv(data_path, lc);
      auto emp = target.as_empirical();
      if (ov.standardize) emp.data = hemq::standardize(emp.data);
      const auto assign = hemq::assign_nearest(q.points(), emp.data);
      json j;
      if (emp.labels) {
        const auto conf = hemq::confusion_matrix(*emp.labels, assign);
        j["confusion"] = conf;
        j["ari"] = hemq::adjusted_rand(*emp.labels, assign);
        const auto proj = hemq::assign_nearest(emp.data, q.points());
        std::vector<int> proj_labels;
        for (int idx : proj) proj_labels.push_back((*emp.labels)[idx]);
        j["dve"] = hemq::dve(proj_labels);
      } else {
        j["assignment_counts"] = json::array();
        std::vector<long> counts(q.size(), 0);
        for (int c : assign) ++counts[c];
        for (long v : counts) j["assignment_counts"].push_back(v);
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
