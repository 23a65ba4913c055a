#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphs.hpp"
#include "model.hpp"

namespace psl {

enum class Variant { PushSum, Plain };

/// Read-only view of one agent's state.
struct AgentStateView {
  std::span<const double> log_belief;
  double weight;
};

/// Synchronous network state at step k: per-agent log-beliefs over the
/// hypothesis set and push-sum weights. Log-beliefs are kept normalized
/// (log-sum-exp zero) and finite; weights stay positive.
struct NetworkState {
  std::int64_t step = 0;
  int n = 0;
  int m = 0;
  std::vector<double> log_belief;  // n*m, agent-major
  std::vector<double> weight;      // n

  double& log_belief_at(int agent, int theta) {
    return log_belief[static_cast<std::size_t>(agent * m + theta)];
  }
  double log_belief_at(int agent, int theta) const {
    return log_belief[static_cast<std::size_t>(agent * m + theta)];
  }
  AgentStateView agent(int i) const {
    return {std::span<const double>(log_belief).subspan(
                static_cast<std::size_t>(i * m), static_cast<std::size_t>(m)),
            weight[static_cast<std::size_t>(i)]};
  }
};

/// One synchronous round's input: the graph scheduled for this step and the
/// signal each agent observed.
struct RoundInput {
  const Digraph& graph;
  std::span<const int> signals;
};

/// Uniform beliefs (log 1/m) and unit weights at step 0.
NetworkState init_state(int n, int m);

/// One push-sum round: weights mix through the column-stochastic graph
/// weights, beliefs take the weight-normalized geometric mean of in-neighbor
/// beliefs followed by a Bayes update on the local signal. Pure function.
NetworkState step_push_sum(const NetworkState& state, const RoundInput& input,
                           const NetworkModel& model);

/// The unweighted variant: mixing weights 1/outdeg without the auxiliary
/// sequence; the weight field stays at 1 and is ignored.
NetworkState step_plain(const NetworkState& state, const RoundInput& input,
                        const NetworkModel& model);

/// In-place forms used by the simulation loop (out must not alias state).
void step_push_sum_into(const NetworkState& state, const RoundInput& input,
                        const NetworkModel& model, NetworkState& out);
void step_plain_into(const NetworkState& state, const RoundInput& input,
                     const NetworkModel& model, NetworkState& out);

/// log of the belief ratio mu_i(theta_v) / mu_i(theta_w).
double phi(const NetworkState& state, int agent, int theta_v, int theta_w);

/// weight-scaled ratio statistic: y_i * phi_i.
double phi_hat(const NetworkState& state, int agent, int theta_v, int theta_w);

}  // namespace psl
