#include <doctest.h>

#include <cmath>
#include <numeric>

#include "core/analysis.hpp"
#include "core/protocol.hpp"
#include "test_support.hpp"

using namespace psl;
using psl_test::complete;
using psl_test::random_model;
using psl_test::ring;

namespace {

// Direct transcription of the update in plain (non-log) arithmetic at
// extended precision; the oracle for one push-sum round.
std::vector<long double> push_sum_round_oracle(const NetworkState& state,
                                               const Digraph& g,
                                               const std::vector<int>& signals,
                                               const NetworkModel& model,
                                               int agent) {
  const int m = state.m;
  long double y_next = 0.0L;
  for (int j : g.in_neighbors(agent))
    y_next += static_cast<long double>(state.weight[static_cast<std::size_t>(j)]) /
              g.out_degree(j);
  std::vector<long double> vals(static_cast<std::size_t>(m));
  long double z = 0.0L;
  for (int t = 0; t < m; ++t) {
    long double prod = 1.0L;
    for (int j : g.in_neighbors(agent)) {
      const long double mu = std::exp(
          static_cast<long double>(state.log_belief_at(j, t)));
      const long double w =
          static_cast<long double>(state.weight[static_cast<std::size_t>(j)]) /
          g.out_degree(j);
      prod *= std::pow(mu, w);
    }
    prod *= static_cast<long double>(
        model.agent(agent)
            .likelihoods[static_cast<std::size_t>(t)]
                        [static_cast<std::size_t>(signals[static_cast<std::size_t>(agent)])]);
    vals[static_cast<std::size_t>(t)] = std::pow(prod, 1.0L / y_next);
    z += vals[static_cast<std::size_t>(t)];
  }
  for (auto& v : vals) v /= z;
  return vals;
}

}  // namespace

TEST_CASE("init_state") {
  const NetworkState s = init_state(3, 4);
  CHECK(s.step == 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(s.weight[static_cast<std::size_t>(i)] == 1.0);
    for (int t = 0; t < 4; ++t)
      CHECK(std::exp(s.log_belief_at(i, t)) == doctest::Approx(0.25).epsilon(1e-15));
  }
  const double mass = std::accumulate(s.weight.begin(), s.weight.end(), 0.0);
  CHECK(mass == 3.0);
  CHECK_THROWS_AS(init_state(0, 2), ValidationError);
  CHECK_THROWS_AS(init_state(1, 1), ValidationError);
}

TEST_CASE("single agent reduces to exact Bayes") {
  AgentModel a;
  a.true_dist = {0.5, 0.5};
  a.likelihoods = {{0.5, 0.5}, {0.2, 0.8}, {0.7, 0.3}};
  const NetworkModel model(HypothesisSet::indexed(3), {a});
  const Digraph g(1, {});
  NetworkState s = init_state(1, 3);

  std::vector<double> log_ref(3, -std::log(3.0));
  RandomStream rng(1);
  for (int k = 0; k < 200; ++k) {
    const std::vector<int> signals{sample_signal(model.agent(0), rng)};
    s = step_push_sum(s, RoundInput{g, signals}, model);
    CHECK(s.weight[0] == 1.0);
    // Reference Bayes update in log space.
    double z = 0.0;
    for (int t = 0; t < 3; ++t) {
      log_ref[static_cast<std::size_t>(t)] +=
          model.log_likelihood(0, t, signals[0]);
    }
    const double mx = *std::max_element(log_ref.begin(), log_ref.end());
    for (double v : log_ref) z += std::exp(v - mx);
    const double lse = mx + std::log(z);
    for (double& v : log_ref) v -= lse;
    for (int t = 0; t < 3; ++t)
      CHECK(s.log_belief_at(0, t) ==
            doctest::Approx(log_ref[static_cast<std::size_t>(t)]).epsilon(1e-12));
  }
  CHECK(s.step == 200);
}

TEST_CASE("uninformative signal on complete graph averages neighbor beliefs") {
  // All likelihood rows identical: the likelihood cancels in the
  // normalization, leaving the weighted geometric mean.
  AgentModel a;
  a.true_dist = {0.5, 0.5};
  a.likelihoods = {{0.6, 0.4}, {0.6, 0.4}};
  const NetworkModel model =
      NetworkModel::unchecked(HypothesisSet::indexed(2), {a, a, a});
  const Digraph g = complete(3);

  // Start from a non-uniform state reached by hand.
  NetworkState s = init_state(3, 2);
  s.log_belief = {std::log(0.3), std::log(0.7), std::log(0.5), std::log(0.5),
                  std::log(0.9), std::log(0.1)};
  s.weight = {1.2, 0.8, 1.0};

  const std::vector<int> signals{0, 0, 0};
  const NetworkState next = step_push_sum(s, RoundInput{g, signals}, model);

  for (int i = 0; i < 3; ++i) {
    double y_next = 0.0, acc0 = 0.0, acc1 = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double share = s.weight[static_cast<std::size_t>(j)] / 3.0;
      y_next += share;
      acc0 += share * s.log_belief_at(j, 0);
      acc1 += share * s.log_belief_at(j, 1);
    }
    const double u0 = acc0 / y_next, u1 = acc1 / y_next;
    const double lse = std::log(std::exp(u0) + std::exp(u1));
    CHECK(next.log_belief_at(i, 0) == doctest::Approx(u0 - lse).epsilon(1e-12));
    CHECK(next.log_belief_at(i, 1) == doctest::Approx(u1 - lse).epsilon(1e-12));
  }
}

TEST_CASE("random 4-agent round matches the non-log oracle") {
  const NetworkModel model = random_model(31, 4, 3);
  RandomStream rng(77);
  const Digraph g(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}, {2, 0}});
  NetworkState s = init_state(4, 3);

  for (int k = 0; k < 5; ++k) {
    std::vector<int> signals;
    for (int i = 0; i < 4; ++i)
      signals.push_back(sample_signal(model.agent(i), rng));
    const NetworkState next = step_push_sum(s, RoundInput{g, signals}, model);
    for (int i = 0; i < 4; ++i) {
      const auto oracle = push_sum_round_oracle(s, g, signals, model, i);
      for (int t = 0; t < 3; ++t)
        CHECK(std::exp(next.log_belief_at(i, t)) ==
              doctest::Approx(static_cast<double>(oracle[static_cast<std::size_t>(t)]))
                  .epsilon(1e-12));
    }
    s = next;
  }
}

TEST_CASE("input state is not modified") {
  const NetworkModel model = random_model(9, 3, 2);
  const Digraph g = ring(3);
  const NetworkState s = init_state(3, 2);
  const std::vector<double> belief_copy = s.log_belief;
  const std::vector<int> signals{0, 0, 0};
  const NetworkState next = step_push_sum(s, RoundInput{g, signals}, model);
  CHECK(s.log_belief == belief_copy);
  CHECK(s.step == 0);
  CHECK(next.step == 1);
}

TEST_CASE("protocol invariants over random trajectories") {
  const NetworkModel model = random_model(123, 5, 3);
  const GraphSequence seq = GraphSequence::make_random(5, 2, 0.4, 99);
  RandomStream rng(5150);
  NetworkState s = init_state(5, 3);
  double min_weight = 1e300;
  const int horizon = 300;
  for (int k = 0; k < horizon; ++k) {
    std::vector<int> signals;
    for (int i = 0; i < 5; ++i) signals.push_back(sample_signal(model.agent(i), rng));
    const Digraph g = seq.schedule(k);
    s = step_push_sum(s, RoundInput{g, signals}, model);
    // Simplex preservation per agent.
    for (int i = 0; i < 5; ++i) {
      double z = 0.0;
      for (int t = 0; t < 3; ++t) z += std::exp(s.log_belief_at(i, t));
      CHECK(std::abs(std::log(z)) <= 1e-9);
    }
    // Mass conservation and weight positivity.
    const double mass = std::accumulate(s.weight.begin(), s.weight.end(), 0.0);
    CHECK(std::abs(mass - 5.0) <= 1e-9);
    for (double y : s.weight) {
      CHECK(y > 0.0);
      min_weight = std::min(min_weight, y);
    }
  }
  // Weights never dip below the empirical delta of the audited sequence.
  const double delta = empirical_delta(seq, horizon);
  CHECK(min_weight >= delta - 1e-9);
}

TEST_CASE("log-linear bound: belief is dominated by the pair ratio") {
  const NetworkModel model = random_model(321, 4, 3);
  const GraphSequence seq = GraphSequence::make_random(4, 1, 0.5, 3);
  RandomStream rng(31337);
  NetworkState s = init_state(4, 3);
  const auto opt = optimal_set(model);
  for (int k = 0; k < 100; ++k) {
    std::vector<int> signals;
    for (int i = 0; i < 4; ++i) signals.push_back(sample_signal(model.agent(i), rng));
    s = step_push_sum(s, RoundInput{seq.schedule(k), signals}, model);
    for (int i = 0; i < 4; ++i)
      for (int v = 0; v < 3; ++v)
        for (int w : opt)
          CHECK(s.log_belief_at(i, v) <= phi(s, i, v, w) + 1e-15);
  }
}

TEST_CASE("phi and phi_hat") {
  const NetworkModel model = random_model(77, 2, 3);
  NetworkState s = init_state(2, 3);
  SUBCASE("zero for equal arguments and uniform beliefs") {
    CHECK(phi(s, 0, 1, 1) == 0.0);
    CHECK(phi(s, 0, 2, 1) == 0.0);
    CHECK(phi_hat(s, 1, 0, 2) == 0.0);
  }
  SUBCASE("after one Bayes step phi is the log likelihood ratio") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.5, 0.5}, {0.2, 0.8}};
    const NetworkModel single(HypothesisSet::indexed(2), {a});
    NetworkState s1 = init_state(1, 2);
    const std::vector<int> signals{1};
    s1 = step_push_sum(s1, RoundInput{Digraph(1, {}), signals}, single);
    CHECK(phi(s1, 0, 1, 0) ==
          doctest::Approx(std::log(0.8 / 0.5)).epsilon(1e-12));
  }
  SUBCASE("phi_hat scales phi by the weight") {
    s.weight = {1.7, 0.3};
    s.log_belief = {std::log(0.2), std::log(0.5), std::log(0.3),
                    std::log(0.25), std::log(0.25), std::log(0.5)};
    CHECK(phi_hat(s, 0, 2, 1) ==
          doctest::Approx(1.7 * phi(s, 0, 2, 1)).epsilon(1e-15));
  }
}

TEST_CASE("plain variant") {
  SUBCASE("n=1 coincides with push-sum") {
    AgentModel a;
    a.true_dist = {0.3, 0.7};
    a.likelihoods = {{0.3, 0.7}, {0.6, 0.4}};
    const NetworkModel model(HypothesisSet::indexed(2), {a});
    const Digraph g(1, {});
    NetworkState sp = init_state(1, 2), sq = init_state(1, 2);
    RandomStream rng(4);
    for (int k = 0; k < 100; ++k) {
      const std::vector<int> signals{sample_signal(model.agent(0), rng)};
      sp = step_push_sum(sp, RoundInput{g, signals}, model);
      sq = step_plain(sq, RoundInput{g, signals}, model);
      CHECK(sp.log_belief_at(0, 0) == sq.log_belief_at(0, 0));
      CHECK(sq.weight[0] == 1.0);
    }
  }
  SUBCASE("doubly stochastic graph gives identical trajectories") {
    // Directed ring is regular, so the mixing matrix is doubly stochastic and
    // the auxiliary weights stay at 1.
    const NetworkModel model = random_model(55, 4, 3);
    const Digraph g = ring(4);
    NetworkState sp = init_state(4, 3), sq = init_state(4, 3);
    RandomStream rng(8);
    for (int k = 0; k < 200; ++k) {
      std::vector<int> signals;
      for (int i = 0; i < 4; ++i) signals.push_back(sample_signal(model.agent(i), rng));
      sp = step_push_sum(sp, RoundInput{g, signals}, model);
      sq = step_plain(sq, RoundInput{g, signals}, model);
      for (int i = 0; i < 4; ++i) {
        CHECK(sp.weight[static_cast<std::size_t>(i)] ==
              doctest::Approx(1.0).epsilon(1e-12));
        for (int t = 0; t < 3; ++t)
          CHECK(sp.log_belief_at(i, t) ==
                doctest::Approx(sq.log_belief_at(i, t)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("permutation equivariance") {
  const int n = 4, m = 3;
  const NetworkModel model = random_model(777, n, m);
  const std::vector<int> perm{2, 0, 3, 1};  // new index of each old agent

  // Permuted model.
  std::vector<AgentModel> agents(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    agents[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = model.agent(i);
  const NetworkModel pmodel(HypothesisSet::indexed(m), agents);

  const Digraph g(n, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {1, 0}});
  std::vector<std::pair<int, int>> pedges;
  for (auto [j, i] : g.edges())
    pedges.emplace_back(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(i)]);
  const Digraph pg(n, std::move(pedges));

  RandomStream rng(2024);
  NetworkState s = init_state(n, m), ps = init_state(n, m);
  for (int k = 0; k < 50; ++k) {
    std::vector<int> signals, psignals(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) signals.push_back(sample_signal(model.agent(i), rng));
    for (int i = 0; i < n; ++i)
      psignals[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
          signals[static_cast<std::size_t>(i)];
    s = step_push_sum(s, RoundInput{g, signals}, model);
    ps = step_push_sum(ps, RoundInput{pg, psignals}, pmodel);
    for (int i = 0; i < n; ++i) {
      const int pi = perm[static_cast<std::size_t>(i)];
      CHECK(ps.weight[static_cast<std::size_t>(pi)] ==
            doctest::Approx(s.weight[static_cast<std::size_t>(i)]).epsilon(1e-12));
      for (int t = 0; t < m; ++t)
        CHECK(ps.log_belief_at(pi, t) ==
              doctest::Approx(s.log_belief_at(i, t)).epsilon(1e-9));
    }
  }
}

TEST_CASE("step validation errors") {
  const NetworkModel model = random_model(1, 3, 2);
  const NetworkState s = init_state(3, 2);
  const std::vector<int> signals{0, 0, 0};
  CHECK_THROWS_AS(step_push_sum(s, RoundInput{Digraph(2, {}), std::vector<int>{0, 0}},
                                model),
                  ValidationError);
  CHECK_THROWS_AS(
      step_push_sum(s, RoundInput{ring(3), std::vector<int>{0, 99, 0}}, model),
      ValidationError);
}
