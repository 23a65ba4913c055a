#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <tuple>

#include "graphs.hpp"
#include "model.hpp"
#include "trace.hpp"

namespace psl {

/// Left-multiplied product A_k A_{k-1} ... A_t of scheduled weight matrices.
struct MatrixChain {
  Eigen::MatrixXd value;
  std::int64_t k = 0;
  std::int64_t t = 0;
};

MatrixChain matrix_chain(const GraphSequence& seq, std::int64_t k, std::int64_t t);

/// Row-mean estimate of the limit vector the chain's columns converge to,
/// with the geometric error budget C*lambda^depth carried along.
struct PhiEstimate {
  Eigen::VectorXd phi;
  double error_budget = 0.0;
  bool depth_insufficient = false;
};

PhiEstimate phi_estimate(const GraphSequence& seq, std::int64_t k,
                         std::int64_t depth, double tol = 1e-6);

/// inf over k in [0, horizon] of the minimum row sum of A_{k:0}.
double empirical_delta(const GraphSequence& seq, std::int64_t horizon);

/// Worst excess of |[A_{k:t}]_ij - phi_k^i| over the geometric bound
/// C*lambda^(k-t), net of the phi-estimate budget C*lambda^k. Negative means
/// the bound held everywhere.
struct ErgodicityReport {
  double max_excess = 0.0;
  std::int64_t worst_k = -1;
  std::int64_t worst_t = -1;
};

ErgodicityReport ergodicity_check(const GraphSequence& seq, std::int64_t horizon);

/// Ordinary least-squares slope of log mu_k^i(theta_v) against k over the
/// recorded steps with k0 <= k <= k1.
double decay_slope(const Trace& trace, int agent, int theta_v, std::int64_t k0,
                   std::int64_t k1);

/// Outcome of checking the belief bound over one trace.
struct BoundReport {
  std::int64_t total_points = 0;
  std::int64_t violations = 0;
  bool shortfall = false;  // trace shorter than the transient time
  // (agent, theta_v, k), lexicographically smallest violation.
  std::optional<std::tuple<int, int, std::int64_t>> first_violation;
};

/// Checks log mu_k^i(theta_v) <= -k*gamma2/2 + gamma1_i/delta for every
/// recorded k >= N(rho), every agent, every non-optimal hypothesis.
BoundReport verify_bound(const Trace& trace, const NetworkModel& model,
                         const RateConstants& constants, double rho);

/// Rebuilds the weighted log-ratio statistics step by step from the mixing
/// matrices and recorded signals and compares them with the values implied
/// by the recorded beliefs and weights. Returns the max absolute entry
/// discrepancy over all steps and (non-optimal, optimal) hypothesis pairs.
/// Requires a full-record trace.
double recursion_check(const Trace& trace, const NetworkModel& model,
                       const GraphSequence& seq);

struct ConstantsOptions {
  bool analytic_delta = false;   // default: empirical delta over delta_horizon
  std::int64_t delta_horizon = 0;  // 0: use the simulation horizon
  // NaN means "no override".
  double override_alpha = std::numeric_limits<double>::quiet_NaN();
  double override_delta = std::numeric_limits<double>::quiet_NaN();
  double override_gamma2 = std::numeric_limits<double>::quiet_NaN();
  double override_big_c = std::numeric_limits<double>::quiet_NaN();
  double override_lambda = std::numeric_limits<double>::quiet_NaN();
};

/// Assembles every Theorem constant for (model, sequence, rho): alpha from
/// the model, (C, lambda) from the sequence case, delta empirical by default
/// (the analytic floor is available behind the flag), then gamma1, gamma2
/// and the transient time N(rho).
RateConstants compute_rate_constants(const NetworkModel& model,
                                     const GraphSequence& seq, double rho,
                                     std::int64_t sim_horizon,
                                     const ConstantsOptions& opts = {});

/// Default slope-window start: the transient time when it leaves room in the
/// trace, otherwise 10% of the horizon.
std::int64_t slope_burn_in(std::int64_t horizon, std::int64_t n_rho_steps);

/// Perron vector of a single strongly connected mixing matrix (the stochastic
/// vector every column of A^p converges to), by power iteration.
Eigen::VectorXd stationary_influence(const Digraph& g);

/// One measured decay slope with its theoretical references. The influence
/// columns are filled for static sequences only.
struct SlopeRow {
  int run = 0;
  int agent = 0;
  int theta = 0;
  std::string theta_label;
  double slope = 0.0;
  double ref_uniform = 0.0;  // -(C* - C(theta)) / n
  std::optional<double> ref_phi_weighted;  // -(sum_i phi_i H_i)
  std::optional<double> phi_agent;         // phi_i
  std::optional<double> ref_agent;         // -phi_i * sum_j H_j
};

/// Slopes for every (trace, agent, non-optimal hypothesis) over
/// [burn_in, horizon]. `seq` may be null; influence references need a static
/// sequence.
std::vector<SlopeRow> slope_table(const NetworkModel& model,
                                  const GraphSequence* seq,
                                  std::span<const Trace> traces,
                                  std::int64_t burn_in);

/// CSV with a header row; full-precision numeric fields, empty cells for
/// absent references.
std::string slopes_csv(std::span<const SlopeRow> rows);

}  // namespace psl
