#include "sim.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "random.hpp"
#include "util.hpp"

namespace psl {

void SimConfig::validate() const {
  if (model == nullptr || graph == nullptr)
    throw ValidationError("sim config: model and graph are required");
  if (graph->n() != model->n())
    throw ValidationError("sim config: graph has " + std::to_string(graph->n()) +
                          " nodes but model has " + std::to_string(model->n()) +
                          " agents");
  if (horizon < 1) throw ValidationError("sim config: horizon must be >= 1");
  if (runs < 1) throw ValidationError("sim config: runs must be >= 1");
}

std::uint64_t SimConfig::hash(int run_index) const {
  Fnv1a h;
  h.update(model->fingerprint());
  h.update(graph->fingerprint());
  h.update_i64(variant == Variant::PushSum ? 0 : 1);
  h.update_i64(horizon);
  h.update(master_seed);
  h.update_i64(record == RecordMode::Full ? 0 : 1);
  h.update_i64(run_index);
  return h.digest();
}

namespace {

bool should_record(RecordMode mode, std::int64_t k, std::int64_t horizon) {
  if (mode == RecordMode::Full) return true;
  return k == 1 || k == horizon || k % 10 == 0;
}

void record_step(Trace& trace, const NetworkState& state,
                 const std::vector<int>& signals) {
  TraceStep step;
  step.k = state.step;
  step.log_belief = state.log_belief;
  step.weight = state.weight;
  step.signal = signals;
  trace.steps.push_back(std::move(step));
}

Trace run_from(const NetworkModel& model, const GraphSequence& seq,
               Variant variant, std::int64_t horizon, RecordMode record,
               std::uint64_t config_hash, std::uint64_t seed,
               RandomStream* rng, const std::vector<std::vector<int>>* given) {
  const int n = model.n();
  Trace trace;
  trace.config_hash = config_hash;
  trace.seed = seed;
  trace.n = n;
  trace.m = model.m();
  trace.horizon = horizon;
  trace.variant = variant;
  trace.record = record;
  trace.steps.reserve(static_cast<std::size_t>(
      record == RecordMode::Full ? horizon : horizon / 10 + 2));

  NetworkState state = init_state(n, model.m());
  NetworkState next;
  std::vector<int> signals(static_cast<std::size_t>(n));
  for (std::int64_t k = 1; k <= horizon; ++k) {
    if (given != nullptr) {
      signals = (*given)[static_cast<std::size_t>(k - 1)];
      if (static_cast<int>(signals.size()) != n)
        throw ValidationError("simulate: signal row " + std::to_string(k - 1) +
                              " has wrong length");
    } else {
      for (int i = 0; i < n; ++i)
        signals[static_cast<std::size_t>(i)] = sample_signal(model.agent(i), *rng);
    }
    const Digraph g = seq.schedule(k - 1);
    const RoundInput input{g, signals};
    if (variant == Variant::PushSum)
      step_push_sum_into(state, input, model, next);
    else
      step_plain_into(state, input, model, next);
    std::swap(state, next);
    if (should_record(record, k, horizon)) record_step(trace, state, signals);
  }
  return trace;
}

}  // namespace

Trace run(const SimConfig& config, int run_index) {
  config.validate();
  if (run_index < 0) throw ValidationError("run: negative run index");
  RandomStream rng = RandomStream::for_run(config.master_seed,
                                           static_cast<std::uint64_t>(run_index));
  return run_from(*config.model, *config.graph, config.variant, config.horizon,
                  config.record, config.hash(run_index), rng.base(), &rng,
                  nullptr);
}

Trace simulate_signals(const NetworkModel& model, const GraphSequence& seq,
                       Variant variant,
                       const std::vector<std::vector<int>>& signals,
                       std::uint64_t config_hash, std::uint64_t seed,
                       RecordMode record) {
  if (signals.empty()) throw ValidationError("simulate: no signals supplied");
  return run_from(model, seq, variant,
                  static_cast<std::int64_t>(signals.size()), record,
                  config_hash, seed, nullptr, &signals);
}

std::vector<std::vector<double>> centralized_bayes(
    const NetworkModel& model, const std::vector<std::vector<int>>& signals) {
  const int n = model.n();
  const int m = model.m();
  std::vector<std::vector<double>> out;
  out.reserve(signals.size() + 1);
  std::vector<double> belief(static_cast<std::size_t>(m),
                             -std::log(static_cast<double>(m)));
  out.push_back(belief);
  for (const auto& row : signals) {
    if (static_cast<int>(row.size()) != n)
      throw ValidationError("centralized_bayes: signal row has wrong length");
    for (int t = 0; t < m; ++t) {
      double acc = belief[static_cast<std::size_t>(t)];
      for (int i = 0; i < n; ++i)
        acc += model.log_likelihood(i, t, row[static_cast<std::size_t>(i)]);
      belief[static_cast<std::size_t>(t)] = acc;
    }
    const double log_z = log_sum_exp(belief);
    for (double& x : belief) x -= log_z;
    out.push_back(belief);
  }
  return out;
}

namespace {

struct RunOutcome {
  bool violated = false;
  bool shortfall = false;
  std::vector<double> slopes;            // [agent][non-optimal theta] flattened
  std::vector<double> final_log_belief;  // per theta, averaged over agents
};

}  // namespace

MonteCarloSummary monte_carlo(const SimConfig& config,
                              const RateConstants& constants, double rho) {
  config.validate();
  const NetworkModel& model = *config.model;
  const std::vector<int> opt = optimal_set(model);
  std::vector<bool> is_opt(static_cast<std::size_t>(model.m()), false);
  for (int t : opt) is_opt[static_cast<std::size_t>(t)] = true;
  std::vector<int> non_opt;
  for (int t = 0; t < model.m(); ++t)
    if (!is_opt[static_cast<std::size_t>(t)]) non_opt.push_back(t);

  const std::int64_t transient =
      n_rho(constants.alpha, constants.delta, constants.gamma2, rho);
  const std::int64_t burn = slope_burn_in(config.horizon, transient);

  std::vector<RunOutcome> results(static_cast<std::size_t>(config.runs));
  std::atomic<int> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const int r = cursor.fetch_add(1);
      if (r >= config.runs) return;
      const Trace trace = run(config, r);
      RunOutcome& out = results[static_cast<std::size_t>(r)];
      const BoundReport report = verify_bound(trace, model, constants, rho);
      out.violated = report.violations > 0;
      out.shortfall = report.shortfall;
      for (int i = 0; i < model.n(); ++i)
        for (int v : non_opt)
          out.slopes.push_back(
              decay_slope(trace, i, v, burn, config.horizon));
      out.final_log_belief.assign(static_cast<std::size_t>(model.m()), 0.0);
      const TraceStep& last = trace.last();
      for (int t = 0; t < model.m(); ++t) {
        double acc = 0.0;
        for (int i = 0; i < model.n(); ++i)
          acc += last.log_belief_at(i, t, model.m());
        out.final_log_belief[static_cast<std::size_t>(t)] =
            acc / static_cast<double>(model.n());
      }
    }
  };

  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, config.runs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Deterministic, run-indexed reduction.
  MonteCarloSummary summary;
  summary.runs = config.runs;
  summary.transient = transient;
  summary.slope_window_start = burn;
  std::vector<std::vector<double>> per_agent_slopes(
      static_cast<std::size_t>(model.n()));
  std::vector<double> final_acc(static_cast<std::size_t>(model.m()), 0.0);
  for (const RunOutcome& out : results) {
    summary.violating_runs += out.violated ? 1 : 0;
    summary.shortfall_runs += out.shortfall ? 1 : 0;
    std::size_t idx = 0;
    for (int i = 0; i < model.n(); ++i)
      for (std::size_t v = 0; v < non_opt.size(); ++v)
        per_agent_slopes[static_cast<std::size_t>(i)].push_back(out.slopes[idx++]);
    for (int t = 0; t < model.m(); ++t)
      final_acc[static_cast<std::size_t>(t)] +=
          out.final_log_belief[static_cast<std::size_t>(t)];
  }
  summary.violating_fraction =
      static_cast<double>(summary.violating_runs) / static_cast<double>(config.runs);
  for (int i = 0; i < model.n(); ++i) {
    const auto& xs = per_agent_slopes[static_cast<std::size_t>(i)];
    summary.slope_q10.push_back(quantile(xs, 0.10));
    summary.slope_q50.push_back(quantile(xs, 0.50));
    summary.slope_q90.push_back(quantile(xs, 0.90));
  }
  summary.mean_final_log_belief.assign(static_cast<std::size_t>(model.m()),
                                       std::numeric_limits<double>::quiet_NaN());
  for (int t : non_opt)
    summary.mean_final_log_belief[static_cast<std::size_t>(t)] =
        final_acc[static_cast<std::size_t>(t)] / static_cast<double>(config.runs);
  return summary;
}

double perturbation_delta(const NetworkModel& model, const GraphSequence& seq,
                          const Trace& base, std::int64_t perturb_step,
                          int perturb_agent, int new_signal) {
  if (base.record != RecordMode::Full)
    throw ValidationError("perturbation_delta: full-record trace required");
  if (perturb_step < 1 || perturb_step > base.horizon)
    throw ValidationError("perturbation_delta: step out of range");
  if (perturb_agent < 0 || perturb_agent >= base.n)
    throw ValidationError("perturbation_delta: agent out of range");

  std::vector<std::vector<int>> signals;
  signals.reserve(base.steps.size());
  for (const TraceStep& step : base.steps) signals.push_back(step.signal);
  signals.at(static_cast<std::size_t>(perturb_step - 1))
      .at(static_cast<std::size_t>(perturb_agent)) = new_signal;

  const Trace replay =
      simulate_signals(model, seq, base.variant, signals, base.config_hash,
                       base.seed, RecordMode::Full);

  const std::vector<int> opt = optimal_set(model);
  std::vector<bool> is_opt(static_cast<std::size_t>(model.m()), false);
  for (int t : opt) is_opt[static_cast<std::size_t>(t)] = true;

  double worst = 0.0;
  for (std::size_t idx = static_cast<std::size_t>(perturb_step - 1);
       idx < base.steps.size(); ++idx) {
    const TraceStep& a = base.steps[idx];
    const TraceStep& b = replay.steps[idx];
    for (int i = 0; i < base.n; ++i)
      for (int v = 0; v < base.m; ++v) {
        if (is_opt[static_cast<std::size_t>(v)]) continue;
        for (int w : opt) {
          const double pa =
              a.log_belief_at(i, v, base.m) - a.log_belief_at(i, w, base.m);
          const double pb =
              b.log_belief_at(i, v, base.m) - b.log_belief_at(i, w, base.m);
          worst = std::max(worst, std::abs(pa - pb));
        }
      }
  }
  return worst;
}

}  // namespace psl
