#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "random.hpp"

namespace psl {

/// Ordered finite hypothesis set. At least two hypotheses, unique labels.
struct HypothesisSet {
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(labels.size()); }
  static HypothesisSet indexed(int m);  // labels "theta0".."theta<m-1>"
};

/// One agent's categorical observation model: the true signal distribution
/// and one hypothesized distribution per hypothesis, all over the same
/// finite alphabet. Alphabets may differ between agents.
struct AgentModel {
  std::vector<double> true_dist;
  std::vector<std::vector<double>> likelihoods;  // [hypothesis][outcome]

  int alphabet() const { return static_cast<int>(true_dist.size()); }
};

/// Immutable network model: shared hypothesis set plus n agent models.
/// Construction validates probability vectors and the support condition
/// (true_dist(s) > 0 implies likelihood(s|theta) > 0 for every theta);
/// per-agent KL divergences are precomputed. Use `unchecked` to build
/// deliberately degenerate models in tests.
class NetworkModel {
 public:
  NetworkModel(HypothesisSet hypotheses, std::vector<AgentModel> agents);
  static NetworkModel unchecked(HypothesisSet hypotheses,
                                std::vector<AgentModel> agents);

  int n() const { return static_cast<int>(agents_.size()); }
  int m() const { return hypotheses_.size(); }
  const HypothesisSet& hypotheses() const { return hypotheses_; }
  const AgentModel& agent(int i) const { return agents_[static_cast<size_t>(i)]; }

  /// Cached D_KL(f_i || l_i(.|theta)); +inf when the support condition fails.
  double kl(int agent, int theta) const {
    return kl_table_[static_cast<size_t>(agent * m() + theta)];
  }
  /// Cached log likelihood; -inf where the likelihood is zero.
  double log_likelihood(int agent, int theta, int outcome) const;

  std::uint64_t fingerprint() const;

 private:
  NetworkModel() = default;
  void finish(bool validate);

  HypothesisSet hypotheses_;
  std::vector<AgentModel> agents_;
  std::vector<double> kl_table_;                  // n*m
  std::vector<std::vector<double>> log_lik_;      // [agent][theta*alphabet+s]
};

/// Theorem constants for one (model, graph sequence, rho) combination.
struct RateConstants {
  double alpha = 0.0;
  double delta = 1.0;
  double big_c = 0.0;
  double lambda = 0.0;
  std::vector<double> gamma1;  // per agent
  double gamma2 = 0.0;
  double rho = 0.0;
  std::int64_t n_rho = 0;
  bool regular_case = false;
  bool analytic_delta = false;
};

/// Sum_s p(s) log(p(s)/q(s)), natural log; p(s)=0 terms contribute zero.
/// Throws DomainError naming the offending index when p(s)>0 and q(s)=0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// C(theta) = -sum_i D_KL(f_i || l_i(.|theta)). Always <= 0.
double group_confidence(const NetworkModel& model, int theta);

/// All theta with C(theta) >= C* - rel_tol*(1+|C*|), ascending.
/// Throws if that is the whole hypothesis set (must be a strict subset).
std::vector<int> optimal_set(const NetworkModel& model, double rel_tol = 1e-9);

/// Per-agent KL differences [H(v,w)]_i = D_KL(f_i||l_i(.|v)) - D_KL(f_i||l_i(.|w)).
std::vector<double> h_vector(const NetworkModel& model, int theta_v, int theta_w);

/// min over (agent i, outcome s with f_i(s)>0, theta) of l_i(s|theta).
double alpha_bound(const NetworkModel& model);

/// (1/n) min over theta_v outside the optimal set of (C* - C(theta_v)).
double gamma2(const NetworkModel& model);

/// Per-agent max over pairs (theta_w optimal, theta_v non-optimal) of
/// 2C/(1-lambda)*||H||_1 - [H]_i. `optimal_override` substitutes the optimal
/// set (diagnostic hook for degenerate models).
std::vector<double> gamma1(const NetworkModel& model, double big_c, double lambda,
                           std::optional<std::vector<int>> optimal_override = {});

/// ceil(8 (log alpha)^2 log(1/rho) / (delta^2 gamma2^2) + 1), >= 1.
/// Saturates instead of overflowing for astronomically small deltas.
std::int64_t n_rho(double alpha, double delta, double gamma2, double rho);

/// Exponent of the belief bound: -k*gamma2/2 + gamma1_i/delta.
double log_belief_bound(std::int64_t k, double gamma1_i, double gamma2,
                        double delta);

/// exp of the above; may exceed 1 (vacuous bound).
double belief_bound(std::int64_t k, double gamma1_i, double gamma2, double delta);

/// One outcome drawn from the agent's true distribution by inverse CDF on a
/// single uniform draw.
int sample_signal(const AgentModel& agent, RandomStream& rng);

/// Load and eagerly validate a model file. See README for the format.
NetworkModel load_model_file(const std::string& path);

}  // namespace psl
