#include "pushsum/pushsum.h"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "../core/analysis.hpp"
#include "../core/graphs.hpp"
#include "../core/model.hpp"
#include "../core/sim.hpp"
#include "../core/trace_io.hpp"
#include "../core/util.hpp"

struct psl_model {
  psl::NetworkModel value;
};
struct psl_graph {
  psl::GraphSequence value;
};
struct psl_trace {
  psl::Trace value;
};

namespace {

thread_local std::string g_last_error;

psl_status fail(psl_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
psl_status wrap(Fn&& fn) {
  try {
    return fn();
  } catch (const psl::ValidationError& e) {
    return fail(PSL_ERR_VALIDATION, e.what());
  } catch (const std::exception& e) {
    return fail(PSL_ERR_RUNTIME, e.what());
  }
}

psl_status require(bool ok, const char* what) {
  return ok ? PSL_OK : fail(PSL_ERR_VALIDATION, what);
}

const psl::TraceStep* step_at(const psl_trace* trace, int64_t record) {
  if (!trace) return nullptr;
  if (record < 0 || record >= static_cast<int64_t>(trace->value.steps.size()))
    return nullptr;
  return &trace->value.steps[static_cast<std::size_t>(record)];
}

psl::SimConfig to_config(const psl_model* model, const psl_graph* graph,
                         const psl_sim_options* options) {
  psl::SimConfig config;
  config.model = &model->value;
  config.graph = &graph->value;
  config.variant = options->variant == 0 ? psl::Variant::PushSum
                                         : psl::Variant::Plain;
  config.horizon = options->horizon;
  config.master_seed = options->master_seed;
  config.runs = options->runs;
  config.record = options->summary_record ? psl::RecordMode::Summary
                                          : psl::RecordMode::Full;
  config.threads = options->threads;
  config.validate();
  return config;
}

}  // namespace

extern "C" {

const char* psl_last_error(void) { return g_last_error.c_str(); }

const char* psl_version(void) { return "0.1.0"; }

psl_status psl_model_load(const char* path, psl_model** out) {
  if (require(path && out, "psl_model_load: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    *out = new psl_model{psl::load_model_file(path)};
    return PSL_OK;
  });
}

void psl_model_free(psl_model* model) { delete model; }

int32_t psl_model_agents(const psl_model* model) {
  return model ? model->value.n() : -1;
}

int32_t psl_model_hypotheses(const psl_model* model) {
  return model ? model->value.m() : -1;
}

psl_status psl_model_group_confidence(const psl_model* model, int32_t theta,
                                      double* out) {
  if (require(model && out, "psl_model_group_confidence: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    *out = psl::group_confidence(model->value, theta);
    return PSL_OK;
  });
}

psl_status psl_model_optimal_set(const psl_model* model, double rel_tol,
                                 int32_t* buf, int32_t cap, int32_t* count) {
  if (require(model && buf && count, "psl_model_optimal_set: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    const auto set = psl::optimal_set(model->value, rel_tol);
    *count = static_cast<int32_t>(set.size());
    for (int32_t i = 0; i < *count && i < cap; ++i)
      buf[i] = set[static_cast<std::size_t>(i)];
    return PSL_OK;
  });
}

psl_status psl_model_alpha(const psl_model* model, double* out) {
  if (require(model && out, "psl_model_alpha: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    *out = psl::alpha_bound(model->value);
    return PSL_OK;
  });
}

psl_status psl_model_gamma2(const psl_model* model, double* out) {
  if (require(model && out, "psl_model_gamma2: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    *out = psl::gamma2(model->value);
    return PSL_OK;
  });
}

psl_status psl_graph_load(const char* path, psl_graph** out) {
  if (require(path && out, "psl_graph_load: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    *out = new psl_graph{psl::load_graph_file(path)};
    return PSL_OK;
  });
}

void psl_graph_free(psl_graph* graph) { delete graph; }

int32_t psl_graph_nodes(const psl_graph* graph) {
  return graph ? graph->value.n() : -1;
}

int32_t psl_graph_window(const psl_graph* graph) {
  return graph ? graph->value.window() : -1;
}

psl_status psl_graph_audit(const psl_graph* graph, int32_t window_b,
                           int64_t windows, int64_t* first_bad) {
  if (require(graph, "psl_graph_audit: null graph") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    const auto result = psl::audit_b_connectivity(graph->value, window_b, windows);
    if (first_bad) *first_bad = result.first_failing_window;
    if (!result.ok)
      return fail(PSL_ERR_VERIFICATION,
                  "connectivity audit failed at window " +
                      std::to_string(result.first_failing_window));
    return PSL_OK;
  });
}

psl_status psl_graph_constants(const psl_graph* graph, double* big_c,
                               double* lambda, double* log_delta_floor,
                               int32_t* regular_case) {
  if (require(graph, "psl_graph_constants: null graph") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    const auto tc = psl::theorem_constants(graph->value);
    if (big_c) *big_c = tc.big_c;
    if (lambda) *lambda = tc.lambda;
    if (log_delta_floor) *log_delta_floor = tc.log_delta_floor;
    if (regular_case) *regular_case = tc.regular_case ? 1 : 0;
    return PSL_OK;
  });
}

psl_status psl_graph_empirical_delta(const psl_graph* graph, int64_t horizon,
                                     double* out) {
  if (require(graph && out, "psl_graph_empirical_delta: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    *out = psl::empirical_delta(graph->value, horizon);
    return PSL_OK;
  });
}

psl_status psl_graph_ergodicity(const psl_graph* graph, int64_t horizon,
                                double* max_excess) {
  if (require(graph && max_excess, "psl_graph_ergodicity: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    *max_excess = psl::ergodicity_check(graph->value, horizon).max_excess;
    return PSL_OK;
  });
}

psl_status psl_graph_audit_report(const psl_graph* graph, int32_t window_b,
                                  int64_t windows, int64_t horizon,
                                  const char* report_path, int64_t* first_bad) {
  if (require(graph && report_path, "psl_graph_audit_report: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    const psl::GraphSequence& seq = graph->value;
    const auto audit = psl::audit_b_connectivity(seq, window_b, windows);
    if (first_bad) *first_bad = audit.first_failing_window;

    psl::KeyValueReport report;
    report.add("n", seq.n());
    report.add("B", window_b);
    report.add("windows", windows);
    report.add("connected", audit.ok ? "yes" : "no");
    if (!audit.ok) report.add("first_failing_window", audit.first_failing_window);

    bool all_regular = true;
    const std::int64_t steps = windows * window_b;
    for (std::int64_t k = 0; k < steps && all_regular; ++k)
      all_regular = psl::is_regular(seq.schedule(k));
    report.add("every_step_regular", all_regular ? "yes" : "no");

    const auto tc = psl::theorem_constants(seq);
    report.add("constants_case", tc.regular_case ? "regular" : "general");
    report.add("C", tc.big_c);
    report.add("lambda", tc.lambda);
    report.add("log_delta_floor", tc.log_delta_floor);

    if (audit.ok) {
      report.add("empirical_delta", psl::empirical_delta(seq, horizon));
      const auto erg = psl::ergodicity_check(seq, horizon);
      report.add("ergodicity_max_excess", erg.max_excess);
      report.add("ergodicity_horizon", horizon);
    }

    std::ofstream out(report_path);
    if (!out) throw psl::Error(std::string("cannot write report to ") + report_path);
    out << report.to_string();
    if (!audit.ok)
      return fail(PSL_ERR_VERIFICATION,
                  "connectivity audit failed at window " +
                      std::to_string(audit.first_failing_window));
    return PSL_OK;
  });
}

psl_status psl_simulate(const psl_model* model, const psl_graph* graph,
                        const psl_sim_options* options, const char* out_dir,
                        int32_t json_traces, int32_t stamp) {
  if (require(model && graph && options && out_dir,
              "psl_simulate: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    const psl::SimConfig config = to_config(model, graph, options);
    std::filesystem::create_directories(out_dir);

    psl::KeyValueReport manifest;
    manifest.add("config_hash", config.hash(0));
    manifest.add("runs", config.runs);
    manifest.add("horizon", config.horizon);
    manifest.add("variant", options->variant == 0 ? "push-sum" : "plain");
    manifest.add("seed", static_cast<std::int64_t>(config.master_seed));
    manifest.add("record",
                 config.record == psl::RecordMode::Full ? "full" : "summary");
    if (stamp) {
      const auto now = std::chrono::system_clock::now().time_since_epoch();
      manifest.add("stamp_unix_ms",
                   std::chrono::duration_cast<std::chrono::milliseconds>(now).count());
    }
    for (int r = 0; r < config.runs; ++r) {
      const psl::Trace trace = psl::run(config, r);
      const std::string base = "trace_" + std::to_string(r);
      psl::write_trace_text(trace,
                            (std::filesystem::path(out_dir) / (base + ".trace")).string());
      if (json_traces)
        psl::write_trace_json(trace,
                              (std::filesystem::path(out_dir) / (base + ".json")).string());
      manifest.add("trace_" + std::to_string(r), base + ".trace");
    }
    std::ofstream mf(std::filesystem::path(out_dir) / "manifest.txt");
    if (!mf) throw psl::Error("cannot write manifest");
    mf << manifest.to_string();
    return PSL_OK;
  });
}

psl_status psl_trace_run(const psl_model* model, const psl_graph* graph,
                         const psl_sim_options* options, int32_t run_index,
                         psl_trace** out) {
  if (require(model && graph && options && out, "psl_trace_run: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    const psl::SimConfig config = to_config(model, graph, options);
    *out = new psl_trace{psl::run(config, run_index)};
    return PSL_OK;
  });
}

psl_status psl_trace_load(const char* path, psl_trace** out) {
  if (require(path && out, "psl_trace_load: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    *out = new psl_trace{psl::read_trace_any(path)};
    return PSL_OK;
  });
}

void psl_trace_free(psl_trace* trace) { delete trace; }

int64_t psl_trace_records(const psl_trace* trace) {
  return trace ? static_cast<int64_t>(trace->value.steps.size()) : -1;
}

psl_status psl_trace_step(const psl_trace* trace, int64_t record, int64_t* k) {
  const auto* step = step_at(trace, record);
  if (!step || !k) return fail(PSL_ERR_VALIDATION, "psl_trace_step: bad arguments");
  *k = step->k;
  return PSL_OK;
}

psl_status psl_trace_log_belief(const psl_trace* trace, int64_t record,
                                int32_t agent, int32_t theta, double* out) {
  const auto* step = step_at(trace, record);
  if (!step || !out || agent < 0 || agent >= trace->value.n || theta < 0 ||
      theta >= trace->value.m)
    return fail(PSL_ERR_VALIDATION, "psl_trace_log_belief: bad arguments");
  *out = step->log_belief_at(agent, theta, trace->value.m);
  return PSL_OK;
}

psl_status psl_trace_weight(const psl_trace* trace, int64_t record,
                            int32_t agent, double* out) {
  const auto* step = step_at(trace, record);
  if (!step || !out || agent < 0 || agent >= trace->value.n)
    return fail(PSL_ERR_VALIDATION, "psl_trace_weight: bad arguments");
  *out = step->weight[static_cast<std::size_t>(agent)];
  return PSL_OK;
}

void psl_verify_options_init(psl_verify_options* options, double rho) {
  if (!options) return;
  std::memset(options, 0, sizeof(*options));
  options->rho = rho;
  const double nan = std::nan("");
  options->override_alpha = nan;
  options->override_delta = nan;
  options->override_gamma2 = nan;
  options->override_big_c = nan;
  options->override_lambda = nan;
}

psl_status psl_verify(const psl_model* model, const psl_graph* graph,
                      const psl_sim_options* sim,
                      const psl_verify_options* options,
                      const char* report_path, psl_verify_summary* out) {
  if (require(model && graph && sim && options, "psl_verify: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    const psl::SimConfig config = to_config(model, graph, sim);
    psl::ConstantsOptions copts;
    copts.analytic_delta = options->analytic_delta != 0;
    copts.delta_horizon = options->delta_horizon;
    copts.override_alpha = options->override_alpha;
    copts.override_delta = options->override_delta;
    copts.override_gamma2 = options->override_gamma2;
    copts.override_big_c = options->override_big_c;
    copts.override_lambda = options->override_lambda;
    const psl::RateConstants constants = psl::compute_rate_constants(
        model->value, graph->value, options->rho, config.horizon, copts);

    psl_verify_summary summary{};
    summary.alpha = constants.alpha;
    summary.delta = constants.delta;
    summary.big_c = constants.big_c;
    summary.lambda = constants.lambda;
    summary.gamma2 = constants.gamma2;
    summary.n_rho = constants.n_rho;
    summary.regular_case = constants.regular_case ? 1 : 0;
    summary.runs = config.runs;

    if (constants.n_rho > config.horizon) {
      if (out) *out = summary;
      return fail(PSL_ERR_HORIZON,
                  "horizon " + std::to_string(config.horizon) +
                      " is shorter than the transient time N(rho) = " +
                      std::to_string(constants.n_rho) +
                      "; increase --horizon to at least that");
    }

    const psl::MonteCarloSummary mc =
        psl::monte_carlo(config, constants, options->rho);
    summary.violating_runs = mc.violating_runs;
    summary.violating_fraction = mc.violating_fraction;
    if (out) *out = summary;

    if (report_path) {
      psl::KeyValueReport report;
      report.add("runs", mc.runs);
      report.add("horizon", config.horizon);
      report.add("rho", options->rho);
      report.add("alpha", constants.alpha);
      report.add("delta", constants.delta);
      report.add("delta_mode", constants.analytic_delta ? "analytic" : "empirical");
      report.add("C", constants.big_c);
      report.add("lambda", constants.lambda);
      report.add("gamma2", constants.gamma2);
      for (std::size_t i = 0; i < constants.gamma1.size(); ++i)
        report.add("gamma1_" + std::to_string(i), constants.gamma1[i]);
      report.add("constants_case", constants.regular_case ? "regular" : "general");
      report.add("n_rho", constants.n_rho);
      report.add("violating_runs", mc.violating_runs);
      report.add("violating_fraction", mc.violating_fraction);
      report.add("slope_window_start", mc.slope_window_start);
      for (std::size_t i = 0; i < mc.slope_q50.size(); ++i) {
        report.add("slope_q10_agent" + std::to_string(i), mc.slope_q10[i]);
        report.add("slope_q50_agent" + std::to_string(i), mc.slope_q50[i]);
        report.add("slope_q90_agent" + std::to_string(i), mc.slope_q90[i]);
      }
      for (std::size_t t = 0; t < mc.mean_final_log_belief.size(); ++t)
        if (!std::isnan(mc.mean_final_log_belief[t]))
          report.add("mean_final_log_belief_theta" + std::to_string(t),
                     mc.mean_final_log_belief[t]);
      std::ofstream rf(report_path);
      if (!rf) throw psl::Error(std::string("cannot write report to ") + report_path);
      rf << report.to_string();
    }

    if (mc.violating_fraction > options->rho)
      return fail(PSL_ERR_VERIFICATION,
                  "violating fraction " + psl::format_g17(mc.violating_fraction) +
                      " exceeds rho = " + psl::format_g17(options->rho));
    return PSL_OK;
  });
}

psl_status psl_slopes(const psl_model* model, const psl_graph* graph,
                      const char* const* trace_paths, int32_t n_traces,
                      int64_t burn_in, const char* csv_path) {
  if (require(model && trace_paths && csv_path && n_traces > 0,
              "psl_slopes: null argument") != PSL_OK)
    return PSL_ERR_VALIDATION;
  return wrap([&] {
    std::vector<psl::Trace> traces;
    traces.reserve(static_cast<std::size_t>(n_traces));
    for (int32_t i = 0; i < n_traces; ++i)
      traces.push_back(psl::read_trace_any(trace_paths[i]));
    const std::int64_t horizon = traces.front().horizon;
    const std::int64_t burn = burn_in >= 0 ? burn_in : horizon / 10;
    const auto rows =
        psl::slope_table(model->value, graph ? &graph->value : nullptr,
                         traces, burn);
    std::ofstream out(csv_path);
    if (!out) throw psl::Error(std::string("cannot write CSV to ") + csv_path);
    out << psl::slopes_csv(rows);
    return PSL_OK;
  });
}

}  // extern "C"
