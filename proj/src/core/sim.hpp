#pragma once

#include <cstdint>
#include <vector>

#include "analysis.hpp"
#include "graphs.hpp"
#include "model.hpp"
#include "trace.hpp"

namespace psl {

/// One experiment: which model and schedule, which update variant, how long,
/// how many Monte Carlo runs, and how to record.
struct SimConfig {
  const NetworkModel* model = nullptr;
  const GraphSequence* graph = nullptr;
  Variant variant = Variant::PushSum;
  std::int64_t horizon = 0;
  std::uint64_t master_seed = 0;
  int runs = 1;
  RecordMode record = RecordMode::Full;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
  /// Semantic fingerprint of (model, graph, variant, horizon, seed, record)
  /// mixed with the run index.
  std::uint64_t hash(int run_index) const;
};

/// Executes one seeded trajectory. Signals are sampled agent-by-agent from a
/// per-run stream derived one-way from (master_seed, run_index); step k
/// consumes draws (k-1)*n+1 .. k*n of that stream.
Trace run(const SimConfig& config, int run_index);

/// Replays a trajectory from externally supplied signals
/// (signals[k-1][agent] is consumed at step k).
Trace simulate_signals(const NetworkModel& model, const GraphSequence& seq,
                       Variant variant,
                       const std::vector<std::vector<int>>& signals,
                       std::uint64_t config_hash = 0, std::uint64_t seed = 0,
                       RecordMode record = RecordMode::Full);

/// Full-information Bayesian reference: one belief over the hypothesis set
/// updated with the product of all agents' likelihoods. Returns log-belief
/// vectors for steps 0..horizon.
std::vector<std::vector<double>> centralized_bayes(
    const NetworkModel& model, const std::vector<std::vector<int>>& signals);

/// Aggregate of a Monte Carlo batch.
struct MonteCarloSummary {
  std::int64_t runs = 0;
  std::int64_t violating_runs = 0;
  double violating_fraction = 0.0;
  std::int64_t shortfall_runs = 0;
  std::int64_t transient = 0;  // N(rho) used for the bound window
  std::int64_t slope_window_start = 0;
  // Per-agent slope quantiles over runs x non-optimal hypotheses.
  std::vector<double> slope_q10, slope_q50, slope_q90;
  // Mean final log-belief per hypothesis (NaN for optimal hypotheses).
  std::vector<double> mean_final_log_belief;
};

/// Runs `config.runs` independent trajectories (in parallel when configured),
/// applies the belief-bound check to each, and aggregates run-indexed results
/// in a fixed order so the summary is independent of thread count.
MonteCarloSummary monte_carlo(const SimConfig& config,
                              const RateConstants& constants, double rho);

/// Replays a recorded trajectory with one (step, agent) signal replaced and
/// returns the largest change in any log-belief-ratio statistic at or after
/// the perturbed step, over all agents and (non-optimal, optimal) pairs.
double perturbation_delta(const NetworkModel& model, const GraphSequence& seq,
                          const Trace& base, std::int64_t perturb_step,
                          int perturb_agent, int new_signal);

}  // namespace psl
