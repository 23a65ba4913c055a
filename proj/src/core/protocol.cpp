#include "protocol.hpp"

#include <cmath>
#include <limits>

#include "util.hpp"

namespace psl {

NetworkState init_state(int n, int m) {
  if (n < 1) throw ValidationError("init_state: n must be >= 1");
  if (m < 2) throw ValidationError("init_state: m must be >= 2");
  NetworkState s;
  s.step = 0;
  s.n = n;
  s.m = m;
  s.log_belief.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(m),
                      -std::log(static_cast<double>(m)));
  s.weight.assign(static_cast<std::size_t>(n), 1.0);
  return s;
}

namespace {

void check_round(const NetworkState& state, const RoundInput& input,
                 const NetworkModel& model) {
  if (state.n != model.n() || state.m != model.m())
    throw ValidationError("step: state does not match model dimensions");
  if (input.graph.n() != state.n)
    throw ValidationError("step: graph has " + std::to_string(input.graph.n()) +
                          " nodes, state has " + std::to_string(state.n));
  if (static_cast<int>(input.signals.size()) != state.n)
    throw ValidationError("step: expected one signal per agent");
  for (int i = 0; i < state.n; ++i) {
    const int s = input.signals[static_cast<std::size_t>(i)];
    if (s < 0 || s >= model.agent(i).alphabet())
      throw ValidationError("step: signal " + std::to_string(s) +
                            " out of range for agent " + std::to_string(i));
  }
}

void step_impl(const NetworkState& state, const RoundInput& input,
               const NetworkModel& model, bool push_sum, NetworkState& out) {
  check_round(state, input, model);
  const int n = state.n;
  const int m = state.m;
  out.step = state.step + 1;
  out.n = n;
  out.m = m;
  out.log_belief.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(m));
  out.weight.resize(static_cast<std::size_t>(n));

  std::vector<double> acc(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    double y_next = 0.0;
    for (int j : input.graph.in_neighbors(i)) {
      const double share =
          state.weight[static_cast<std::size_t>(j)] /
          static_cast<double>(input.graph.out_degree(j));
      y_next += share;
      const double w =
          push_sum ? share : 1.0 / static_cast<double>(input.graph.out_degree(j));
      for (int t = 0; t < m; ++t)
        acc[static_cast<std::size_t>(t)] += w * state.log_belief_at(j, t);
    }
    const int sig = input.signals[static_cast<std::size_t>(i)];
    for (int t = 0; t < m; ++t) {
      const double ll = model.log_likelihood(i, t, sig);
      acc[static_cast<std::size_t>(t)] =
          push_sum ? (acc[static_cast<std::size_t>(t)] + ll) / y_next
                   : acc[static_cast<std::size_t>(t)] + ll;
    }
    const double log_z = log_sum_exp(acc);
    if (!std::isfinite(log_z))
      throw Error("round error: agent " + std::to_string(i) + " signal " +
                  std::to_string(sig) + " has zero likelihood under every "
                  "hypothesis at step " + std::to_string(out.step));
    for (int t = 0; t < m; ++t) {
      const double v = acc[static_cast<std::size_t>(t)] - log_z;
      // Finite by construction under validated models; replayed signals can
      // break this, so it is asserted every step.
      if (!std::isfinite(v))
        throw Error("round error: non-finite log-belief for agent " +
                    std::to_string(i) + ", hypothesis " + std::to_string(t) +
                    " at step " + std::to_string(out.step));
      out.log_belief_at(i, t) = v;
    }
    out.weight[static_cast<std::size_t>(i)] = push_sum ? y_next : 1.0;
  }
}

}  // namespace

NetworkState step_push_sum(const NetworkState& state, const RoundInput& input,
                           const NetworkModel& model) {
  NetworkState out;
  step_impl(state, input, model, true, out);
  return out;
}

NetworkState step_plain(const NetworkState& state, const RoundInput& input,
                        const NetworkModel& model) {
  NetworkState out;
  step_impl(state, input, model, false, out);
  return out;
}

void step_push_sum_into(const NetworkState& state, const RoundInput& input,
                        const NetworkModel& model, NetworkState& out) {
  step_impl(state, input, model, true, out);
}

void step_plain_into(const NetworkState& state, const RoundInput& input,
                     const NetworkModel& model, NetworkState& out) {
  step_impl(state, input, model, false, out);
}

double phi(const NetworkState& state, int agent, int theta_v, int theta_w) {
  return state.log_belief_at(agent, theta_v) - state.log_belief_at(agent, theta_w);
}

double phi_hat(const NetworkState& state, int agent, int theta_v, int theta_w) {
  return state.weight[static_cast<std::size_t>(agent)] *
         phi(state, agent, theta_v, theta_w);
}

}  // namespace psl
