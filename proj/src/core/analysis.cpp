#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "util.hpp"

namespace psl {

MatrixChain matrix_chain(const GraphSequence& seq, std::int64_t k, std::int64_t t) {
  if (t < 0 || t > k) throw ValidationError("matrix_chain: require 0 <= t <= k");
  Eigen::MatrixXd prod = weight_matrix(seq.schedule(t));
  for (std::int64_t s = t + 1; s <= k; ++s)
    prod = (weight_matrix(seq.schedule(s)) * prod).eval();
  return {std::move(prod), k, t};
}

PhiEstimate phi_estimate(const GraphSequence& seq, std::int64_t k,
                         std::int64_t depth, double tol) {
  if (depth < 0 || depth > k)
    throw ValidationError("phi_estimate: require 0 <= depth <= k");
  const MatrixChain chain = matrix_chain(seq, k, k - depth);
  const TheoremConstants tc = theorem_constants(seq);
  PhiEstimate out;
  out.phi = chain.value.rowwise().mean();
  out.error_budget = tc.big_c * std::pow(tc.lambda, static_cast<double>(depth));
  out.depth_insufficient = !(out.error_budget < tol);
  return out;
}

double empirical_delta(const GraphSequence& seq, std::int64_t horizon) {
  if (horizon < 1) throw ValidationError("empirical_delta: horizon must be >= 1");
  Eigen::MatrixXd prod = weight_matrix(seq.schedule(0));
  double delta = prod.rowwise().sum().minCoeff();
  for (std::int64_t k = 1; k <= horizon; ++k) {
    prod = (weight_matrix(seq.schedule(k)) * prod).eval();
    delta = std::min(delta, prod.rowwise().sum().minCoeff());
  }
  return delta;
}

ErgodicityReport ergodicity_check(const GraphSequence& seq, std::int64_t horizon) {
  if (horizon < 0) throw ValidationError("ergodicity_check: negative horizon");
  const TheoremConstants tc = theorem_constants(seq);
  ErgodicityReport report;
  report.max_excess = -std::numeric_limits<double>::infinity();

  for (std::int64_t k = 0; k <= horizon; ++k) {
    // First pass down to t = 0 for the phi estimate from the deepest chain.
    Eigen::MatrixXd chain = weight_matrix(seq.schedule(k));
    std::vector<Eigen::MatrixXd> chains;
    chains.reserve(static_cast<std::size_t>(k + 1));
    chains.push_back(chain);
    for (std::int64_t t = k - 1; t >= 0; --t) {
      chain = (chain * weight_matrix(seq.schedule(t))).eval();
      chains.push_back(chain);
    }
    const Eigen::VectorXd phi_k = chains.back().rowwise().mean();
    const double budget = tc.big_c * std::pow(tc.lambda, static_cast<double>(k));

    for (std::int64_t t = k; t >= 0; --t) {
      const Eigen::MatrixXd& m = chains[static_cast<std::size_t>(k - t)];
      const double bound =
          tc.big_c * std::pow(tc.lambda, static_cast<double>(k - t));
      const double dev = (m.colwise() - phi_k).cwiseAbs().maxCoeff();
      const double excess = dev - bound - budget;
      if (excess > report.max_excess) {
        report.max_excess = excess;
        report.worst_k = k;
        report.worst_t = t;
      }
    }
  }
  return report;
}

double decay_slope(const Trace& trace, int agent, int theta_v, std::int64_t k0,
                   std::int64_t k1) {
  if (k1 <= k0) throw ValidationError("decay_slope: require k1 > k0");
  if (trace.steps.empty() || trace.steps.back().k < k1)
    throw ValidationError("decay_slope: window [" + std::to_string(k0) + "," +
                          std::to_string(k1) + "] exceeds trace length");
  double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0;
  std::int64_t count = 0;
  for (std::size_t idx = trace.lower_bound(k0); idx < trace.steps.size(); ++idx) {
    const TraceStep& step = trace.steps[idx];
    if (step.k > k1) break;
    const double x = static_cast<double>(step.k);
    const double y = step.log_belief_at(agent, theta_v, trace.m);
    sk += x;
    sy += y;
    skk += x * x;
    sky += x * y;
    ++count;
  }
  if (count < 2) throw ValidationError("decay_slope: fewer than two points in window");
  const double denom = skk - sk * sk / static_cast<double>(count);
  if (denom <= 0.0) throw ValidationError("decay_slope: degenerate window");
  return (sky - sk * sy / static_cast<double>(count)) / denom;
}

BoundReport verify_bound(const Trace& trace, const NetworkModel& model,
                         const RateConstants& constants, double rho) {
  if (static_cast<int>(constants.gamma1.size()) != model.n())
    throw ValidationError("verify_bound: gamma1 size does not match the model");
  const std::int64_t transient =
      n_rho(constants.alpha, constants.delta, constants.gamma2, rho);
  BoundReport report;
  if (trace.steps.empty() || trace.steps.back().k < transient) {
    report.shortfall = true;
    return report;
  }
  const std::vector<int> opt = optimal_set(model);
  std::vector<bool> is_opt(static_cast<std::size_t>(model.m()), false);
  for (int t : opt) is_opt[static_cast<std::size_t>(t)] = true;
  const std::size_t start = trace.lower_bound(transient);

  for (int i = 0; i < trace.n; ++i) {
    for (int v = 0; v < trace.m; ++v) {
      if (is_opt[static_cast<std::size_t>(v)]) continue;
      const double offset =
          constants.gamma1[static_cast<std::size_t>(i)] / constants.delta;
      for (std::size_t idx = start; idx < trace.steps.size(); ++idx) {
        const TraceStep& step = trace.steps[idx];
        const double bound =
            -0.5 * static_cast<double>(step.k) * constants.gamma2 + offset;
        ++report.total_points;
        if (step.log_belief_at(i, v, trace.m) > bound) {
          ++report.violations;
          if (!report.first_violation)
            report.first_violation = std::make_tuple(i, v, step.k);
        }
      }
    }
  }
  return report;
}

double recursion_check(const Trace& trace, const NetworkModel& model,
                       const GraphSequence& seq) {
  if (trace.record != RecordMode::Full)
    throw ValidationError("recursion_check: full-record trace required");
  if (trace.n != model.n() || trace.m != model.m())
    throw ValidationError("recursion_check: trace does not match model");
  const std::vector<int> opt = optimal_set(model);
  std::vector<bool> is_opt(static_cast<std::size_t>(model.m()), false);
  for (int t : opt) is_opt[static_cast<std::size_t>(t)] = true;
  const int n = trace.n;

  double worst = 0.0;
  // phi_hat at step k-1; step 0 has uniform beliefs, so all ratios are zero.
  std::vector<double> prev(static_cast<std::size_t>(n));
  for (std::size_t idx = 0; idx < trace.steps.size(); ++idx) {
    const TraceStep& step = trace.steps[idx];
    const Eigen::MatrixXd a = weight_matrix(seq.schedule(step.k - 1));
    const bool have_prev = idx > 0 || step.k == 1;
    if (!have_prev) continue;
    if (idx > 0 && trace.steps[idx - 1].k != step.k - 1) continue;

    for (int v = 0; v < trace.m; ++v) {
      if (is_opt[static_cast<std::size_t>(v)]) continue;
      for (int w : opt) {
        for (int j = 0; j < n; ++j) {
          if (idx == 0) {
            prev[static_cast<std::size_t>(j)] = 0.0;
          } else {
            const TraceStep& p = trace.steps[idx - 1];
            prev[static_cast<std::size_t>(j)] =
                p.weight[static_cast<std::size_t>(j)] *
                (p.log_belief_at(j, v, trace.m) - p.log_belief_at(j, w, trace.m));
          }
        }
        for (int i = 0; i < n; ++i) {
          double rhs = 0.0;
          for (int j = 0; j < n; ++j)
            rhs += a(i, j) * prev[static_cast<std::size_t>(j)];
          const int sig = step.signal[static_cast<std::size_t>(i)];
          rhs += model.log_likelihood(i, v, sig) - model.log_likelihood(i, w, sig);
          const double lhs =
              step.weight[static_cast<std::size_t>(i)] *
              (step.log_belief_at(i, v, trace.m) - step.log_belief_at(i, w, trace.m));
          worst = std::max(worst, std::abs(lhs - rhs));
        }
      }
    }
  }
  return worst;
}

RateConstants compute_rate_constants(const NetworkModel& model,
                                     const GraphSequence& seq, double rho,
                                     std::int64_t sim_horizon,
                                     const ConstantsOptions& opts) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ValidationError("rate constants: rho must lie in (0,1)");
  const TheoremConstants tc = theorem_constants(seq);
  RateConstants rc;
  rc.regular_case = tc.regular_case;
  rc.big_c = std::isnan(opts.override_big_c) ? tc.big_c : opts.override_big_c;
  rc.lambda = std::isnan(opts.override_lambda) ? tc.lambda : opts.override_lambda;
  rc.alpha = std::isnan(opts.override_alpha) ? alpha_bound(model)
                                             : opts.override_alpha;
  rc.analytic_delta = opts.analytic_delta;
  if (!std::isnan(opts.override_delta)) {
    rc.delta = opts.override_delta;
  } else if (opts.analytic_delta) {
    rc.delta = std::exp(tc.log_delta_floor);
    if (rc.delta <= 0.0)
      throw ValidationError(
          "rate constants: analytic delta floor underflows; use the empirical "
          "delta");
  } else {
    const std::int64_t h =
        opts.delta_horizon > 0 ? opts.delta_horizon : std::max<std::int64_t>(sim_horizon, 1);
    rc.delta = empirical_delta(seq, h);
  }
  rc.gamma2 = std::isnan(opts.override_gamma2) ? gamma2(model)
                                               : opts.override_gamma2;
  rc.gamma1 = gamma1(model, rc.big_c, rc.lambda);
  rc.rho = rho;
  rc.n_rho = n_rho(rc.alpha, rc.delta, rc.gamma2, rho);
  return rc;
}

std::int64_t slope_burn_in(std::int64_t horizon, std::int64_t n_rho_steps) {
  const std::int64_t tenth = horizon / 10;
  if (n_rho_steps > tenth && n_rho_steps + 100 <= horizon) return n_rho_steps;
  return tenth;
}

Eigen::VectorXd stationary_influence(const Digraph& g) {
  if (!is_strongly_connected(g))
    throw ValidationError("stationary_influence: graph must be strongly connected");
  const Eigen::MatrixXd a = weight_matrix(g);
  const int n = g.n();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int iter = 0; iter < 200000; ++iter) {
    Eigen::VectorXd next = a * v;
    next /= next.sum();
    const double diff = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (diff < 1e-15) break;
  }
  return v;
}

std::vector<SlopeRow> slope_table(const NetworkModel& model,
                                  const GraphSequence* seq,
                                  std::span<const Trace> traces,
                                  std::int64_t burn_in) {
  const std::vector<int> opt = optimal_set(model);
  std::vector<bool> is_opt(static_cast<std::size_t>(model.m()), false);
  for (int t : opt) is_opt[static_cast<std::size_t>(t)] = true;
  const int theta_w = opt.front();
  const double n = static_cast<double>(model.n());

  std::optional<Eigen::VectorXd> influence;
  if (seq != nullptr && seq->kind() == GraphSequence::Kind::Static)
    influence = stationary_influence(seq->defining_graphs().front());

  std::vector<SlopeRow> rows;
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const Trace& trace = traces[r];
    if (trace.n != model.n() || trace.m != model.m())
      throw ValidationError("slope_table: trace " + std::to_string(r) +
                            " does not match the model");
    for (int v = 0; v < model.m(); ++v) {
      if (is_opt[static_cast<std::size_t>(v)]) continue;
      const std::vector<double> h = h_vector(model, v, theta_w);
      double h_sum = 0.0, phi_weighted = 0.0;
      for (int i = 0; i < model.n(); ++i) {
        h_sum += h[static_cast<std::size_t>(i)];
        if (influence)
          phi_weighted += (*influence)(i)*h[static_cast<std::size_t>(i)];
      }
      for (int i = 0; i < model.n(); ++i) {
        SlopeRow row;
        row.run = static_cast<int>(r);
        row.agent = i;
        row.theta = v;
        row.theta_label = model.hypotheses().labels[static_cast<std::size_t>(v)];
        row.slope = decay_slope(trace, i, v, burn_in, trace.horizon);
        row.ref_uniform = -h_sum / n;
        if (influence) {
          row.ref_phi_weighted = -phi_weighted;
          row.phi_agent = (*influence)(i);
          row.ref_agent = -(*influence)(i)*h_sum;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string slopes_csv(std::span<const SlopeRow> rows) {
  std::string out =
      "run,agent,theta,theta_label,slope,ref_uniform,ref_phi_weighted,"
      "phi_agent,ref_agent\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? format_g17(*v) : std::string();
  };
  for (const SlopeRow& row : rows) {
    out += std::to_string(row.run);
    out += ',';
    out += std::to_string(row.agent);
    out += ',';
    out += std::to_string(row.theta);
    out += ',';
    out += row.theta_label;
    out += ',';
    out += format_g17(row.slope);
    out += ',';
    out += format_g17(row.ref_uniform);
    out += ',';
    out += cell(row.ref_phi_weighted);
    out += ',';
    out += cell(row.phi_agent);
    out += ',';
    out += cell(row.ref_agent);
    out += '\n';
  }
  return out;
}

}  // namespace psl
