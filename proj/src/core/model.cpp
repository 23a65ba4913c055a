#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "util.hpp"

namespace psl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// KL that reports support violations as +inf instead of throwing; used to
// fill the cache of models built without validation.
double kl_lenient(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] <= 0.0) continue;
    if (q[s] <= 0.0) return kInf;
    acc += p[s] * std::log(p[s] / q[s]);
  }
  return std::max(acc, 0.0);
}

void check_probability_vector(std::span<const double> v, const std::string& what) {
  if (v.empty()) throw ValidationError(what + ": empty probability vector");
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0)) throw ValidationError(what + ": negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ValidationError(what + ": entries sum to " + format_g17(sum) +
                          ", expected 1 within 1e-12");
}

}  // namespace

HypothesisSet HypothesisSet::indexed(int m) {
  HypothesisSet h;
  h.labels.reserve(static_cast<std::size_t>(std::max(m, 0)));
  for (int t = 0; t < m; ++t) h.labels.push_back("theta" + std::to_string(t));
  return h;
}

NetworkModel::NetworkModel(HypothesisSet hypotheses, std::vector<AgentModel> agents) {
  hypotheses_ = std::move(hypotheses);
  agents_ = std::move(agents);
  finish(/*validate=*/true);
}

NetworkModel NetworkModel::unchecked(HypothesisSet hypotheses,
                                     std::vector<AgentModel> agents) {
  NetworkModel model;
  model.hypotheses_ = std::move(hypotheses);
  model.agents_ = std::move(agents);
  model.finish(/*validate=*/false);
  return model;
}

void NetworkModel::finish(bool validate) {
  const int m = hypotheses_.size();
  const int n = static_cast<int>(agents_.size());
  if (validate) {
    if (m < 2) throw ValidationError("model: at least two hypotheses required");
    std::set<std::string> seen(hypotheses_.labels.begin(), hypotheses_.labels.end());
    if (static_cast<int>(seen.size()) != m)
      throw ValidationError("model: hypothesis labels must be unique");
    if (n < 1) throw ValidationError("model: at least one agent required");
    for (int i = 0; i < n; ++i) {
      const AgentModel& a = agents_[static_cast<std::size_t>(i)];
      const std::string who = "agent " + std::to_string(i);
      check_probability_vector(a.true_dist, who + " true_dist");
      if (static_cast<int>(a.likelihoods.size()) != m)
        throw ValidationError(who + ": expected " + std::to_string(m) +
                              " likelihood rows, got " +
                              std::to_string(a.likelihoods.size()));
      for (int t = 0; t < m; ++t) {
        const auto& row = a.likelihoods[static_cast<std::size_t>(t)];
        if (row.size() != a.true_dist.size())
          throw ValidationError(who + " likelihood row " + std::to_string(t) +
                                ": alphabet size mismatch");
        check_probability_vector(row, who + " likelihood row " + std::to_string(t));
        for (int s = 0; s < a.alphabet(); ++s) {
          if (a.true_dist[static_cast<std::size_t>(s)] > 0.0 &&
              row[static_cast<std::size_t>(s)] <= 0.0)
            throw DomainError(who + ": support condition violated at outcome " +
                              std::to_string(s) + ", hypothesis " +
                              std::to_string(t));
        }
      }
    }
  }

  kl_table_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(m), 0.0);
  log_lik_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const AgentModel& a = agents_[static_cast<std::size_t>(i)];
    auto& table = log_lik_[static_cast<std::size_t>(i)];
    table.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(a.alphabet()),
                 -kInf);
    for (int t = 0; t < m; ++t) {
      kl_table_[static_cast<std::size_t>(i * m + t)] =
          kl_lenient(a.true_dist, a.likelihoods[static_cast<std::size_t>(t)]);
      for (int s = 0; s < a.alphabet(); ++s) {
        const double l = a.likelihoods[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
        if (l > 0.0)
          table[static_cast<std::size_t>(t * a.alphabet() + s)] = std::log(l);
      }
    }
  }
}

double NetworkModel::log_likelihood(int agent, int theta, int outcome) const {
  const AgentModel& a = agents_[static_cast<std::size_t>(agent)];
  return log_lik_[static_cast<std::size_t>(agent)]
                 [static_cast<std::size_t>(theta * a.alphabet() + outcome)];
}

std::uint64_t NetworkModel::fingerprint() const {
  Fnv1a h;
  h.update(std::string("model"));
  h.update_i64(n());
  h.update_i64(m());
  for (const auto& label : hypotheses_.labels) h.update(label);
  for (const AgentModel& a : agents_) {
    h.update_i64(a.alphabet());
    for (double x : a.true_dist) h.update(x);
    for (const auto& row : a.likelihoods)
      for (double x : row) h.update(x);
  }
  return h.digest();
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw ValidationError("kl_divergence: length mismatch (" +
                          std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()) + ")");
  double acc = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (!(p[s] >= 0.0) || !(q[s] >= 0.0))
      throw ValidationError("kl_divergence: negative or NaN entry at index " +
                            std::to_string(s));
    if (p[s] == 0.0) continue;
    if (q[s] == 0.0)
      throw DomainError("kl_divergence: support violation at index " +
                        std::to_string(s) + " (p > 0, q = 0)");
    acc += p[s] * std::log(p[s] / q[s]);
  }
  // Nonnegative analytically; guard against rounding at p ~ q.
  return std::max(acc, 0.0);
}

double group_confidence(const NetworkModel& model, int theta) {
  if (theta < 0 || theta >= model.m())
    throw ValidationError("group_confidence: hypothesis index out of range");
  double acc = 0.0;
  for (int i = 0; i < model.n(); ++i) acc -= model.kl(i, theta);
  return acc;
}

std::vector<int> optimal_set(const NetworkModel& model, double rel_tol) {
  if (!(rel_tol >= 0.0)) throw ValidationError("optimal_set: rel_tol must be >= 0");
  const int m = model.m();
  std::vector<double> conf(static_cast<std::size_t>(m));
  double best = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < m; ++t) {
    conf[static_cast<std::size_t>(t)] = group_confidence(model, t);
    best = std::max(best, conf[static_cast<std::size_t>(t)]);
  }
  const double cut = best - rel_tol * (1.0 + std::abs(best));
  std::vector<int> out;
  for (int t = 0; t < m; ++t)
    if (conf[static_cast<std::size_t>(t)] >= cut) out.push_back(t);
  if (static_cast<int>(out.size()) == m)
    throw ValidationError(
        "optimal_set: every hypothesis is optimal; the optimal set must be a "
        "strict subset");
  return out;
}

std::vector<double> h_vector(const NetworkModel& model, int theta_v, int theta_w) {
  if (theta_v < 0 || theta_v >= model.m() || theta_w < 0 || theta_w >= model.m())
    throw ValidationError("h_vector: hypothesis index out of range");
  std::vector<double> h(static_cast<std::size_t>(model.n()));
  for (int i = 0; i < model.n(); ++i)
    h[static_cast<std::size_t>(i)] = model.kl(i, theta_v) - model.kl(i, theta_w);
  return h;
}

double alpha_bound(const NetworkModel& model) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < model.n(); ++i) {
    const AgentModel& a = model.agent(i);
    for (int s = 0; s < a.alphabet(); ++s) {
      if (a.true_dist[static_cast<std::size_t>(s)] <= 0.0) continue;
      for (int t = 0; t < model.m(); ++t) {
        const double l = a.likelihoods[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
        if (l <= 0.0)
          throw DomainError("alpha_bound: support condition violated (agent " +
                            std::to_string(i) + ", outcome " + std::to_string(s) +
                            ", hypothesis " + std::to_string(t) + ")");
        best = std::min(best, l);
      }
    }
  }
  if (!std::isfinite(best) || best <= 0.0)
    throw ValidationError("alpha_bound: no supported outcomes");
  return best;
}

double gamma2(const NetworkModel& model) {
  const std::vector<int> opt = optimal_set(model);
  std::vector<bool> is_opt(static_cast<std::size_t>(model.m()), false);
  for (int t : opt) is_opt[static_cast<std::size_t>(t)] = true;
  const double c_star = group_confidence(model, opt.front());
  double gap = std::numeric_limits<double>::infinity();
  for (int t = 0; t < model.m(); ++t)
    if (!is_opt[static_cast<std::size_t>(t)])
      gap = std::min(gap, c_star - group_confidence(model, t));
  return gap / static_cast<double>(model.n());
}

std::vector<double> gamma1(const NetworkModel& model, double big_c, double lambda,
                           std::optional<std::vector<int>> optimal_override) {
  if (!(lambda > 0.0 && lambda < 1.0) || !(big_c > 0.0))
    throw ValidationError("gamma1: require C > 0 and lambda in (0,1)");
  const std::vector<int> opt =
      optimal_override ? *optimal_override : optimal_set(model);
  std::vector<bool> is_opt(static_cast<std::size_t>(model.m()), false);
  for (int t : opt) is_opt[static_cast<std::size_t>(t)] = true;

  const double mix = 2.0 * big_c / (1.0 - lambda);
  std::vector<double> out(static_cast<std::size_t>(model.n()),
                          -std::numeric_limits<double>::infinity());
  bool any_pair = false;
  for (int v = 0; v < model.m(); ++v) {
    if (is_opt[static_cast<std::size_t>(v)]) continue;
    for (int w : opt) {
      any_pair = true;
      const std::vector<double> h = h_vector(model, v, w);
      double norm1 = 0.0;
      for (double x : h) norm1 += std::abs(x);
      for (int i = 0; i < model.n(); ++i) {
        const double cand = mix * norm1 - h[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] =
            std::max(out[static_cast<std::size_t>(i)], cand);
      }
    }
  }
  if (!any_pair)
    throw ValidationError("gamma1: no (non-optimal, optimal) hypothesis pairs");
  return out;
}

std::int64_t n_rho(double alpha, double delta, double gamma2_, double rho) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ValidationError("n_rho: alpha must lie in (0,1]");
  if (!(delta > 0.0)) throw ValidationError("n_rho: delta must be positive");
  if (!(gamma2_ > 0.0)) throw ValidationError("n_rho: gamma2 must be positive");
  if (!(rho > 0.0 && rho < 1.0))
    throw ValidationError("n_rho: rho must lie in (0,1)");
  const double la = std::log(alpha);
  const double raw =
      8.0 * la * la * std::log(1.0 / rho) / (delta * delta * gamma2_ * gamma2_) + 1.0;
  if (!(raw < 9.0e18)) return std::numeric_limits<std::int64_t>::max() / 2;
  const auto k = static_cast<std::int64_t>(std::ceil(raw));
  return std::max<std::int64_t>(k, 1);
}

double log_belief_bound(std::int64_t k, double gamma1_i, double gamma2_,
                        double delta) {
  if (k < 0) throw ValidationError("log_belief_bound: k must be >= 0");
  return -0.5 * static_cast<double>(k) * gamma2_ + gamma1_i / delta;
}

double belief_bound(std::int64_t k, double gamma1_i, double gamma2_, double delta) {
  return std::exp(log_belief_bound(k, gamma1_i, gamma2_, delta));
}

int sample_signal(const AgentModel& agent, RandomStream& rng) {
  const double u = rng.next_uniform();
  double cdf = 0.0;
  const int last = agent.alphabet() - 1;
  for (int s = 0; s < last; ++s) {
    cdf += agent.true_dist[static_cast<std::size_t>(s)];
    if (u < cdf) return s;
  }
  return last;
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    if (tok[0] == '#') break;
    out.push_back(tok);
  }
  return out;
}

double parse_prob(const std::string& tok, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": bad numeric literal '" + tok + "'");
  }
}

// Normalizes a loaded row in place; deviations below 1e-9 are corrected,
// larger ones are fatal.
void normalize_row(std::vector<double>& row, const std::string& where) {
  double sum = 0.0;
  for (double x : row) {
    if (!(x >= 0.0)) throw ValidationError(where + ": negative probability");
    sum += x;
  }
  if (std::abs(sum - 1.0) >= 1e-9)
    throw ValidationError(where + ": row sums to " + format_g17(sum) +
                          " (deviation exceeds 1e-9)");
  if (sum != 1.0)
    for (double& x : row) x /= sum;
}

}  // namespace

NetworkModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("model file '" + path + "': cannot open");

  int m = -1, n = -1;
  std::vector<std::string> labels;
  std::vector<AgentModel> agents;
  std::vector<int> declared_alphabet;
  AgentModel* current = nullptr;
  int current_index = -1;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string& key = toks[0];

    if (key == "m") {
      if (toks.size() != 2) throw ValidationError(where + ": expected 'm <count>'");
      m = static_cast<int>(parse_prob(toks[1], where));
    } else if (key == "n") {
      if (toks.size() != 2) throw ValidationError(where + ": expected 'n <count>'");
      n = static_cast<int>(parse_prob(toks[1], where));
    } else if (key == "hypotheses") {
      labels.assign(toks.begin() + 1, toks.end());
    } else if (key == "agent") {
      if (toks.size() != 2) throw ValidationError(where + ": expected 'agent <index>'");
      const int idx = static_cast<int>(parse_prob(toks[1], where));
      if (idx != static_cast<int>(agents.size()))
        throw ValidationError(where + ": agent blocks must appear in order; got " +
                              std::to_string(idx) + ", expected " +
                              std::to_string(agents.size()));
      agents.emplace_back();
      declared_alphabet.push_back(-1);
      current = &agents.back();
      current_index = idx;
    } else if (key == "alphabet") {
      if (current == nullptr) throw ValidationError(where + ": 'alphabet' outside agent block");
      if (toks.size() != 2) throw ValidationError(where + ": expected 'alphabet <size>'");
      const int a = static_cast<int>(parse_prob(toks[1], where));
      if (a < 1) throw ValidationError(where + ": alphabet size must be >= 1");
      declared_alphabet.back() = a;
    } else if (key == "true") {
      if (current == nullptr) throw ValidationError(where + ": 'true' outside agent block");
      current->true_dist.clear();
      for (std::size_t t = 1; t < toks.size(); ++t)
        current->true_dist.push_back(parse_prob(toks[t], where));
      normalize_row(current->true_dist,
                    path + ": agent " + std::to_string(current_index) + " true_dist");
    } else if (key == "lik") {
      if (current == nullptr) throw ValidationError(where + ": 'lik' outside agent block");
      std::vector<double> row;
      for (std::size_t t = 1; t < toks.size(); ++t)
        row.push_back(parse_prob(toks[t], where));
      normalize_row(row, path + ": agent " + std::to_string(current_index) +
                             " likelihood row " + std::to_string(current->likelihoods.size()));
      current->likelihoods.push_back(std::move(row));
    } else {
      throw ValidationError(where + ": unknown key '" + key + "'");
    }
  }

  if (m < 2) throw ValidationError(path + ": missing or invalid 'm'");
  if (n < 1) throw ValidationError(path + ": missing or invalid 'n'");
  if (static_cast<int>(agents.size()) != n)
    throw ValidationError(path + ": expected " + std::to_string(n) +
                          " agent blocks, found " + std::to_string(agents.size()));
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (declared_alphabet[i] >= 0 &&
        agents[i].alphabet() != declared_alphabet[i])
      throw ValidationError(path + ": agent " + std::to_string(i) +
                            " true_dist has " + std::to_string(agents[i].alphabet()) +
                            " entries, declared alphabet " +
                            std::to_string(declared_alphabet[i]));
    if (static_cast<int>(agents[i].likelihoods.size()) != m)
      throw ValidationError(path + ": agent " + std::to_string(i) + " has " +
                            std::to_string(agents[i].likelihoods.size()) +
                            " likelihood rows, expected m = " + std::to_string(m));
  }
  HypothesisSet hyps;
  if (labels.empty()) {
    hyps = HypothesisSet::indexed(m);
  } else {
    if (static_cast<int>(labels.size()) != m)
      throw ValidationError(path + ": 'hypotheses' lists " +
                            std::to_string(labels.size()) + " labels, expected " +
                            std::to_string(m));
    hyps.labels = labels;
  }

  NetworkModel model(std::move(hyps), std::move(agents));
  // The optimal set must be a strict subset; surfaced here so that bad model
  // files fail at load rather than at first use.
  (void)optimal_set(model);
  return model;
}

}  // namespace psl
