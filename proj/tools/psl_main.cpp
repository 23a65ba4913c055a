// psl — command-line front end for the pushsum library.
//
// Subcommands: simulate, verify, graph-audit, slopes.
// Exit codes: 0 success, 1 runtime error, 2 validation error,
//             3 verification failed, 4 horizon shorter than N(rho).

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "pushsum/pushsum.h"

namespace {

struct ModelDeleter {
  void operator()(psl_model* m) const { psl_model_free(m); }
};
struct GraphDeleter {
  void operator()(psl_graph* g) const { psl_graph_free(g); }
};
using ModelHandle = std::unique_ptr<psl_model, ModelDeleter>;
using GraphHandle = std::unique_ptr<psl_graph, GraphDeleter>;

int report_error(psl_status status) {
  std::cerr << "error: " << psl_last_error() << "\n";
  return static_cast<int>(status);
}

ModelHandle load_model(const std::string& path, psl_status& status) {
  psl_model* raw = nullptr;
  status = psl_model_load(path.c_str(), &raw);
  return ModelHandle(raw);
}

GraphHandle load_graph(const std::string& path, psl_status& status) {
  psl_graph* raw = nullptr;
  status = psl_graph_load(path.c_str(), &raw);
  return GraphHandle(raw);
}

// One experiment per human-editable key/value file; flags override fields.
struct ExperimentSpec {
  std::string model_path;
  std::string graph_path;
  std::string variant = "push-sum";
  long long horizon = 0;
  int runs = 1;
  unsigned long long seed = 0;
  double rho = 0.1;
  std::string out_dir;
  int threads = 0;
};

bool apply_config_file(const std::string& path, ExperimentSpec& spec,
                       std::string& error) {
  std::ifstream in(path);
  if (!in) {
    error = "config file '" + path + "': cannot open";
    return false;
  }
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string key, value;
    if (!(ss >> key) || key[0] == '#') continue;
    if (!(ss >> value)) {
      error = path + ":" + std::to_string(lineno) + ": missing value for '" + key + "'";
      return false;
    }
    try {
      if (key == "model") spec.model_path = value;
      else if (key == "graph") spec.graph_path = value;
      else if (key == "variant") spec.variant = value;
      else if (key == "horizon") spec.horizon = std::stoll(value);
      else if (key == "runs") spec.runs = std::stoi(value);
      else if (key == "seed") spec.seed = std::stoull(value);
      else if (key == "rho") spec.rho = std::stod(value);
      else if (key == "out") spec.out_dir = value;
      else if (key == "threads") spec.threads = std::stoi(value);
      else {
        error = path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'";
        return false;
      }
    } catch (const std::exception&) {
      error = path + ":" + std::to_string(lineno) + ": bad value '" + value + "'";
      return false;
    }
  }
  return true;
}

psl_sim_options make_sim_options(const ExperimentSpec& spec, bool summary) {
  psl_sim_options opts{};
  opts.variant = spec.variant == "plain" ? 1 : 0;
  opts.horizon = spec.horizon;
  opts.master_seed = spec.seed;
  opts.runs = spec.runs;
  opts.summary_record = summary ? 1 : 0;
  opts.threads = spec.threads;
  return opts;
}

std::string resolve_out_dir(const std::string& flag_value,
                            const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  // The only environment override: output directory.
  if (const char* env = std::getenv("PSL_OUT"); env && *env) return env;
  if (!config_value.empty()) return config_value;
  return "out";
}

bool parse_overrides(const std::vector<std::string>& overrides,
                     psl_verify_options& vo, std::string& error) {
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      error = "--override expects KEY=VALUE, got '" + kv + "'";
      return false;
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    try {
      if (key == "alpha") vo.override_alpha = std::stod(value);
      else if (key == "delta") vo.override_delta = std::stod(value);
      else if (key == "gamma2") vo.override_gamma2 = std::stod(value);
      else if (key == "C") vo.override_big_c = std::stod(value);
      else if (key == "lambda") vo.override_lambda = std::stod(value);
      else if (key == "delta_mode") {
        if (value == "analytic") vo.analytic_delta = 1;
        else if (value == "empirical") vo.analytic_delta = 0;
        else {
          error = "delta_mode must be 'empirical' or 'analytic'";
          return false;
        }
      } else {
        error = "unknown override key '" + key +
                "' (known: alpha, delta, gamma2, C, lambda, delta_mode)";
        return false;
      }
    } catch (const std::exception&) {
      error = "bad numeric value in override '" + kv + "'";
      return false;
    }
  }
  return true;
}

int cmd_simulate(const ExperimentSpec& spec, bool summary, bool json, bool stamp) {
  psl_status status;
  const ModelHandle model = load_model(spec.model_path, status);
  if (!model) return report_error(status);
  const GraphHandle graph = load_graph(spec.graph_path, status);
  if (!graph) return report_error(status);

  const psl_sim_options opts = make_sim_options(spec, summary);
  status = psl_simulate(model.get(), graph.get(), &opts, spec.out_dir.c_str(),
                        json ? 1 : 0, stamp ? 1 : 0);
  if (status != PSL_OK) return report_error(status);
  std::cout << "wrote " << spec.runs << " trace(s) and manifest.txt to "
            << spec.out_dir << "\n";
  return 0;
}

int cmd_verify(const ExperimentSpec& spec, const std::vector<std::string>& overrides) {
  psl_status status;
  const ModelHandle model = load_model(spec.model_path, status);
  if (!model) return report_error(status);
  const GraphHandle graph = load_graph(spec.graph_path, status);
  if (!graph) return report_error(status);

  psl_verify_options vo;
  psl_verify_options_init(&vo, spec.rho);
  std::string error;
  if (!parse_overrides(overrides, vo, error)) {
    std::cerr << "error: " << error << "\n";
    return 2;
  }

  std::filesystem::create_directories(spec.out_dir);
  const std::string report_path =
      (std::filesystem::path(spec.out_dir) / "verify_report.txt").string();
  const psl_sim_options opts = make_sim_options(spec, /*summary=*/false);
  psl_verify_summary summary{};
  status = psl_verify(model.get(), graph.get(), &opts, &vo, report_path.c_str(),
                      &summary);

  if (status == PSL_OK || status == PSL_ERR_VERIFICATION) {
    std::ifstream report(report_path);
    std::cout << report.rdbuf();
    std::cout << "verdict "
              << (status == PSL_OK ? "pass" : "fail (fraction exceeds rho)")
              << "\n";
  }
  if (status != PSL_OK) return report_error(status);
  return 0;
}

int cmd_graph_audit(const std::string& graph_path, int window_b,
                    long long windows, long long horizon,
                    const std::string& out_dir) {
  psl_status status;
  const GraphHandle graph = load_graph(graph_path, status);
  if (!graph) return report_error(status);

  const int b = window_b > 0 ? window_b : psl_graph_window(graph.get());
  std::filesystem::create_directories(out_dir);
  const std::string report_path =
      (std::filesystem::path(out_dir) / "graph_audit.txt").string();
  int64_t first_bad = -1;
  status = psl_graph_audit_report(graph.get(), b, windows, horizon,
                                  report_path.c_str(), &first_bad);
  std::ifstream report(report_path);
  std::cout << report.rdbuf();
  if (status != PSL_OK) return report_error(status);
  return 0;
}

int cmd_slopes(const std::string& model_path, const std::string& graph_path,
               const std::vector<std::string>& traces, long long burn_in,
               const std::string& csv_path) {
  psl_status status;
  const ModelHandle model = load_model(model_path, status);
  if (!model) return report_error(status);
  GraphHandle graph;
  if (!graph_path.empty()) {
    graph = load_graph(graph_path, status);
    if (!graph) return report_error(status);
  }
  std::vector<const char*> paths;
  paths.reserve(traces.size());
  for (const std::string& t : traces) paths.push_back(t.c_str());
  status = psl_slopes(model.get(), graph.get(), paths.data(),
                      static_cast<int32_t>(paths.size()), burn_in,
                      csv_path.c_str());
  if (status != PSL_OK) return report_error(status);
  std::cout << "wrote " << csv_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pushsum: distributed non-Bayesian learning simulator"};
  app.require_subcommand(1);

  std::string config_path, model_path, graph_path, variant = "push-sum";
  std::string out_flag;
  long long horizon = 0, windows = 100, audit_horizon = 50, burn_in = -1;
  int runs = 1, window_b = 0, threads = 0;
  unsigned long long seed = 0;
  double rho = 0.1;
  bool summary = false, json = false, stamp = false;
  std::vector<std::string> overrides, trace_paths;

  auto add_experiment_flags = [&](CLI::App* cmd, bool with_runs_rho) {
    cmd->add_option("--config", config_path, "experiment spec file");
    cmd->add_option("--model", model_path, "model file");
    cmd->add_option("--graph", graph_path, "graph-sequence file");
    cmd->add_option("--variant", variant, "push-sum | plain")
        ->check(CLI::IsMember({"push-sum", "plain"}));
    cmd->add_option("--horizon", horizon, "steps per run");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--out", out_flag, "output directory");
    cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
    if (with_runs_rho) {
      cmd->add_option("--runs", runs, "Monte Carlo run count");
      cmd->add_option("--rho", rho, "error percentile in (0,1)");
    }
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run trajectories, write traces");
  add_experiment_flags(simulate, true);
  simulate->add_flag("--summary", summary, "record every 10th step plus endpoints");
  simulate->add_flag("--json", json, "also write JSON traces");
  simulate->add_flag("--stamp", stamp, "add a timestamp to the manifest");

  CLI::App* verify = app.add_subcommand(
      "verify", "derive rate constants and verify the belief bound");
  add_experiment_flags(verify, true);
  verify->add_option("--override", overrides,
                     "KEY=VAL constant override (alpha, delta, gamma2, C, "
                     "lambda, delta_mode)");

  CLI::App* audit = app.add_subcommand("graph-audit", "connectivity and ergodicity audit");
  audit->add_option("--graph", graph_path, "graph-sequence file")->required();
  audit->add_option("--window", window_b, "connectivity window B (default: from file)");
  audit->add_option("--windows", windows, "number of windows to audit");
  audit->add_option("--horizon", audit_horizon, "chain horizon for delta/ergodicity");
  audit->add_option("--out", out_flag, "output directory");

  CLI::App* slopes = app.add_subcommand("slopes", "per-agent decay slopes as CSV");
  slopes->add_option("--model", model_path, "model file")->required();
  slopes->add_option("--graph", graph_path, "graph-sequence file (for references)");
  slopes->add_option("--trace", trace_paths, "trace file(s)")->required();
  slopes->add_option("--burn-in", burn_in, "slope window start (default: horizon/10)");
  slopes->add_option("--out", out_flag, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ExperimentSpec spec;
  if (!config_path.empty()) {
    std::string error;
    if (!apply_config_file(config_path, spec, error)) {
      std::cerr << "error: " << error << "\n";
      return 2;
    }
  }
  const std::string config_out = spec.out_dir;
  // Explicit flags win over config-file values.
  if (!model_path.empty()) spec.model_path = model_path;
  if (!graph_path.empty()) spec.graph_path = graph_path;
  if (simulate->count("--variant") || verify->count("--variant")) spec.variant = variant;
  if (simulate->count("--horizon") || verify->count("--horizon")) spec.horizon = horizon;
  if (simulate->count("--runs") || verify->count("--runs")) spec.runs = runs;
  if (simulate->count("--seed") || verify->count("--seed")) spec.seed = seed;
  if (simulate->count("--rho") || verify->count("--rho")) spec.rho = rho;
  if (simulate->count("--threads") || verify->count("--threads")) spec.threads = threads;
  spec.out_dir = resolve_out_dir(out_flag, config_out);

  if (simulate->parsed()) {
    if (spec.model_path.empty() || spec.graph_path.empty() || spec.horizon < 1) {
      std::cerr << "error: simulate needs --model, --graph and --horizon >= 1\n";
      return 2;
    }
    return cmd_simulate(spec, summary, json, stamp);
  }
  if (verify->parsed()) {
    if (spec.model_path.empty() || spec.graph_path.empty() || spec.horizon < 1) {
      std::cerr << "error: verify needs --model, --graph and --horizon >= 1\n";
      return 2;
    }
    return cmd_verify(spec, overrides);
  }
  if (audit->parsed())
    return cmd_graph_audit(graph_path, window_b, windows, audit_horizon,
                           resolve_out_dir(out_flag, ""));
  if (slopes->parsed()) {
    const std::string csv = out_flag.empty() ? "slopes.csv" : out_flag;
    return cmd_slopes(model_path, graph_path, trace_paths, burn_in, csv);
  }
  return 2;
}
