#include <doctest.h>

#include <cmath>
#include <numeric>

#include "core/model.hpp"
#include "test_support.hpp"

using namespace psl;
using psl_test::kl_oracle;
using psl_test::random_model;
using psl_test::random_simplex;

namespace {

// Hand-built two-agent model over binary/ternary alphabets.
NetworkModel two_agent_model() {
  AgentModel a0;
  a0.true_dist = {0.5, 0.5};
  a0.likelihoods = {{0.5, 0.5}, {0.25, 0.75}, {0.9, 0.1}};
  AgentModel a1;
  a1.true_dist = {0.2, 0.3, 0.5};
  a1.likelihoods = {{0.2, 0.3, 0.5}, {0.4, 0.4, 0.2}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  return NetworkModel(HypothesisSet::indexed(3), {a0, a1});
}

}  // namespace

TEST_CASE("kl_divergence basics") {
  const std::vector<double> u{0.5, 0.5};
  CHECK(kl_divergence(u, u) == 0.0);

  const std::vector<double> point{1.0, 0.0};
  CHECK(kl_divergence(point, u) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  // Frozen by direct high-precision summation.
  const std::vector<double> q{0.25, 0.75};
  CHECK(kl_divergence(u, q) ==
        doctest::Approx(0.14384103622589046).epsilon(1e-15));
}

TEST_CASE("kl_divergence support violation names the index") {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<double> q{1.0, 0.0};
  CHECK_THROWS_WITH_AS(kl_divergence(p, q),
                       doctest::Contains("index 1"), DomainError);
  CHECK_THROWS_AS(kl_divergence(p, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("kl_divergence nonnegative over random simplex pairs, zero iff equal") {
  RandomStream rng(42);
  for (int rep = 0; rep < 200; ++rep) {
    const int size = 2 + static_cast<int>(rng.next_uniform() * 5);
    const auto p = random_simplex(rng, size, 0.01);
    const auto q = random_simplex(rng, size, 0.01);
    const double kl = kl_divergence(p, q);
    CHECK(kl >= 0.0);
    CHECK(kl == doctest::Approx(kl_oracle(p, q)).epsilon(1e-12));
    double dist = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) dist += std::abs(p[s] - q[s]);
    if (kl < 1e-12) CHECK(dist < 1e-5);
    CHECK(kl_divergence(p, p) == 0.0);
  }
}

TEST_CASE("group_confidence") {
  SUBCASE("matching likelihoods give zero") {
    AgentModel a;
    a.true_dist = {0.3, 0.7};
    a.likelihoods = {{0.3, 0.7}, {0.6, 0.4}};
    NetworkModel model(HypothesisSet::indexed(2), {a, a});
    CHECK(group_confidence(model, 0) == 0.0);
    CHECK(group_confidence(model, 1) < 0.0);
  }
  SUBCASE("single agent reduces to one negated KL") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.5, 0.5}, {0.25, 0.75}};
    NetworkModel model(HypothesisSet::indexed(2), {a});
    CHECK(group_confidence(model, 1) ==
          doctest::Approx(-kl_divergence(a.true_dist, a.likelihoods[1]))
              .epsilon(1e-15));
  }
  SUBCASE("two agents sum their oracle KL terms") {
    const NetworkModel model = two_agent_model();
    for (int t = 0; t < 3; ++t) {
      const double expected =
          -kl_oracle(model.agent(0).true_dist, model.agent(0).likelihoods[static_cast<std::size_t>(t)]) -
          kl_oracle(model.agent(1).true_dist, model.agent(1).likelihoods[static_cast<std::size_t>(t)]);
      CHECK(group_confidence(model, t) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(group_confidence(model, 0) <= 0.0);
  }
}

TEST_CASE("optimal_set") {
  SUBCASE("unique maximizer") {
    const NetworkModel model = two_agent_model();
    CHECK(optimal_set(model) == std::vector<int>{0});
  }
  SUBCASE("identical likelihood rows tie") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.4, 0.6}, {0.4, 0.6}, {0.1, 0.9}};
    NetworkModel model(HypothesisSet::indexed(3), {a});
    CHECK(optimal_set(model) == std::vector<int>{0, 1});
  }
  SUBCASE("whole set is an error") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.4, 0.6}, {0.4, 0.6}};
    const NetworkModel model = NetworkModel::unchecked(HypothesisSet::indexed(2), {a});
    CHECK_THROWS_WITH_AS(optimal_set(model), doctest::Contains("strict subset"),
                         ValidationError);
  }
  SUBCASE("matches brute-force argmax on random models") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const int m = 2 + static_cast<int>(seed % 7);  // up to 8
      const NetworkModel model = random_model(seed, 3, m);
      double best = -1e300;
      for (int t = 0; t < m; ++t) best = std::max(best, group_confidence(model, t));
      std::vector<int> expected;
      for (int t = 0; t < m; ++t)
        if (group_confidence(model, t) >= best - 1e-9 * (1.0 + std::abs(best)))
          expected.push_back(t);
      CHECK(optimal_set(model) == expected);
    }
  }
}

TEST_CASE("h_vector") {
  const NetworkModel model = two_agent_model();
  SUBCASE("identical arguments give zeros") {
    for (double x : h_vector(model, 1, 1)) CHECK(x == 0.0);
  }
  SUBCASE("entries are per-agent KL differences") {
    const auto h = h_vector(model, 1, 0);
    for (int i = 0; i < 2; ++i) {
      const auto& a = model.agent(i);
      CHECK(h[static_cast<std::size_t>(i)] ==
            doctest::Approx(kl_oracle(a.true_dist, a.likelihoods[1]) -
                            kl_oracle(a.true_dist, a.likelihoods[0]))
                .epsilon(1e-12));
    }
  }
  SUBCASE("sum ties to group confidence difference") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
      const NetworkModel model2 = random_model(seed, 4, 3);
      for (int v = 0; v < 3; ++v)
        for (int w = 0; w < 3; ++w) {
          const auto h = h_vector(model2, v, w);
          const double sum = std::accumulate(h.begin(), h.end(), 0.0);
          CHECK(sum == doctest::Approx(group_confidence(model2, w) -
                                       group_confidence(model2, v))
                           .epsilon(1e-10));
        }
    }
  }
  SUBCASE("n=1 sign identity") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.5, 0.5}, {0.25, 0.75}};
    NetworkModel model1(HypothesisSet::indexed(2), {a});
    const auto h = h_vector(model1, 1, 0);
    CHECK(h[0] == doctest::Approx(group_confidence(model1, 0) -
                                  group_confidence(model1, 1)).epsilon(1e-15));
  }
}

TEST_CASE("alpha_bound") {
  SUBCASE("uniform likelihoods over alphabet 4") {
    AgentModel a;
    a.true_dist = {0.25, 0.25, 0.25, 0.25};
    a.likelihoods = {{0.25, 0.25, 0.25, 0.25}, {0.1, 0.2, 0.3, 0.4}};
    // Uniform row attains 0.25; second row attains 0.1.
    NetworkModel model(HypothesisSet::indexed(2), {a});
    CHECK(alpha_bound(model) == doctest::Approx(0.1).epsilon(1e-15));
    AgentModel b;
    b.true_dist = {0.25, 0.25, 0.25, 0.25};
    b.likelihoods = {{0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}};
    const NetworkModel uniform = NetworkModel::unchecked(HypothesisSet::indexed(2), {b});
    CHECK(alpha_bound(uniform) == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("unsupported outcomes are ignored") {
    AgentModel a;
    a.true_dist = {1.0, 0.0};
    a.likelihoods = {{0.9, 0.1}, {0.2, 0.8}};
    NetworkModel model(HypothesisSet::indexed(2), {a});
    CHECK(alpha_bound(model) == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("matches exhaustive scan on random models") {
    for (std::uint64_t seed = 50; seed < 60; ++seed) {
      const NetworkModel model = random_model(seed, 3, 4);
      double expected = 1.0;
      for (int i = 0; i < model.n(); ++i)
        for (int s = 0; s < model.agent(i).alphabet(); ++s) {
          if (model.agent(i).true_dist[static_cast<std::size_t>(s)] <= 0.0) continue;
          for (int t = 0; t < model.m(); ++t)
            expected = std::min(expected,
                                model.agent(i).likelihoods[static_cast<std::size_t>(t)]
                                                          [static_cast<std::size_t>(s)]);
        }
      CHECK(alpha_bound(model) == doctest::Approx(expected).epsilon(1e-15));
    }
  }
  SUBCASE("support violation is fatal") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.5, 0.5}, {1.0, 0.0}};
    const NetworkModel bad = NetworkModel::unchecked(HypothesisSet::indexed(2), {a});
    CHECK_THROWS_AS(alpha_bound(bad), DomainError);
  }
}

TEST_CASE("gamma2") {
  SUBCASE("single gap") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.5, 0.5}, {0.25, 0.75}};
    NetworkModel model(HypothesisSet::indexed(2), {a});
    // C* = 0, C(theta1) = -KL, so the gap is the KL value itself.
    CHECK(gamma2(model) ==
          doctest::Approx(0.14384103622589046).epsilon(1e-14));
  }
  SUBCASE("replicating agents leaves gamma2 unchanged") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.5, 0.5}, {0.3, 0.7}, {0.2, 0.8}};
    NetworkModel one(HypothesisSet::indexed(3), {a});
    NetworkModel two(HypothesisSet::indexed(3), {a, a});
    CHECK(gamma2(one) == doctest::Approx(gamma2(two)).epsilon(1e-14));
  }
  SUBCASE("matches brute force over non-optimal hypotheses") {
    for (std::uint64_t seed = 200; seed < 210; ++seed) {
      const NetworkModel model = random_model(seed, 3, 5);
      const auto opt = optimal_set(model);
      const double c_star = group_confidence(model, opt.front());
      double gap = 1e300;
      for (int t = 0; t < model.m(); ++t) {
        if (std::find(opt.begin(), opt.end(), t) != opt.end()) continue;
        gap = std::min(gap, c_star - group_confidence(model, t));
      }
      CHECK(gamma2(model) ==
            doctest::Approx(gap / model.n()).epsilon(1e-12));
      CHECK(gamma2(model) > 0.0);
    }
  }
}

TEST_CASE("gamma1") {
  SUBCASE("single pair evaluates the formula at that pair") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.5, 0.5}, {0.25, 0.75}};
    NetworkModel model(HypothesisSet::indexed(2), {a, a});
    const double big_c = 4.0, lambda = 0.5;
    const auto g1 = gamma1(model, big_c, lambda);
    const auto h = h_vector(model, 1, 0);
    const double norm1 = std::abs(h[0]) + std::abs(h[1]);
    for (int i = 0; i < 2; ++i)
      CHECK(g1[static_cast<std::size_t>(i)] ==
            doctest::Approx(2.0 * big_c / (1.0 - lambda) * norm1 -
                            h[static_cast<std::size_t>(i)])
                .epsilon(1e-12));
  }
  SUBCASE("all-zero H gives zero (degenerate, validation off)") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.4, 0.6}, {0.4, 0.6}};
    const NetworkModel degenerate =
        NetworkModel::unchecked(HypothesisSet::indexed(2), {a});
    const auto g1 = gamma1(degenerate, 4.0, 0.5, std::vector<int>{0});
    CHECK(g1[0] == 0.0);
  }
  SUBCASE("matches brute-force pair enumeration") {
    for (std::uint64_t seed = 300; seed < 306; ++seed) {
      const NetworkModel model = random_model(seed, 3, 3);
      const double big_c = std::sqrt(2.0), lambda = 0.9;
      const auto opt = optimal_set(model);
      const auto g1 = gamma1(model, big_c, lambda);
      for (int i = 0; i < model.n(); ++i) {
        double expected = -1e300;
        for (int v = 0; v < model.m(); ++v) {
          if (std::find(opt.begin(), opt.end(), v) != opt.end()) continue;
          for (int w : opt) {
            const auto h = h_vector(model, v, w);
            double norm1 = 0.0;
            for (double x : h) norm1 += std::abs(x);
            expected = std::max(expected, 2.0 * big_c / (1.0 - lambda) * norm1 -
                                              h[static_cast<std::size_t>(i)]);
          }
        }
        CHECK(g1[static_cast<std::size_t>(i)] ==
              doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("n_rho") {
  // Frozen by direct high-precision evaluation: raw value 1152.4468...
  CHECK(n_rho(0.5, 1.0, 0.1, 0.05) == 1153);
  CHECK(n_rho(1.0, 1.0, 0.5, 0.5) == 1);   // log(alpha) = 0
  CHECK(n_rho(0.5, 1.0, 10.0, 0.9999999999999999) == 1);  // log(1/rho) ~ 1e-16

  CHECK_THROWS_AS(n_rho(0.0, 1.0, 0.1, 0.5), ValidationError);
  CHECK_THROWS_AS(n_rho(1.5, 1.0, 0.1, 0.5), ValidationError);
  CHECK_THROWS_AS(n_rho(0.5, 0.0, 0.1, 0.5), ValidationError);
  CHECK_THROWS_AS(n_rho(0.5, 1.0, 0.0, 0.5), ValidationError);
  CHECK_THROWS_AS(n_rho(0.5, 1.0, 0.1, 1.0), ValidationError);

  SUBCASE("monotonicity") {
    const std::int64_t base = n_rho(0.5, 0.8, 0.2, 0.1);
    CHECK(n_rho(0.5, 0.8, 0.2, 0.2) <= base);    // larger rho
    CHECK(n_rho(0.5, 0.8, 0.3, 0.1) <= base);    // larger gamma2
    CHECK(n_rho(0.5, 0.9, 0.2, 0.1) <= base);    // larger delta
    CHECK(n_rho(0.4, 0.8, 0.2, 0.1) >= base);    // smaller alpha
  }
}

TEST_CASE("belief_bound") {
  CHECK(belief_bound(0, 0.0, 0.3, 1.0) == 1.0);
  // Geometric recurrence in k.
  const double g2 = 0.17;
  CHECK(belief_bound(10, 1.0, g2, 0.5) ==
        doctest::Approx(belief_bound(8, 1.0, g2, 0.5) * std::exp(-g2))
            .epsilon(1e-14));
  // Crossover at k = 2*gamma1/(delta*gamma2), chosen integral here: k = 100.
  const double gamma1_i = 3.0, delta = 0.5, g2x = 0.12;
  CHECK(2.0 * gamma1_i / (delta * g2x) == 100.0);
  CHECK(log_belief_bound(100, gamma1_i, g2x, delta) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(belief_bound(100, gamma1_i, g2x, delta) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sample_signal") {
  SUBCASE("point mass") {
    AgentModel a;
    a.true_dist = {0.0, 1.0, 0.0};
    a.likelihoods = {{0.2, 0.6, 0.2}, {0.4, 0.3, 0.3}};
    RandomStream rng(7);
    for (int rep = 0; rep < 100; ++rep) CHECK(sample_signal(a, rng) == 1);
  }
  SUBCASE("fixed seed reproduces the sequence") {
    AgentModel a;
    a.true_dist = {0.2, 0.3, 0.5};
    a.likelihoods = {{0.2, 0.3, 0.5}, {0.5, 0.3, 0.2}};
    RandomStream rng1(99), rng2(99);
    for (int rep = 0; rep < 50; ++rep)
      CHECK(sample_signal(a, rng1) == sample_signal(a, rng2));
  }
  SUBCASE("frequencies within 4 sigma over 1e6 draws") {
    AgentModel a;
    a.true_dist = {0.1, 0.2, 0.3, 0.4};
    a.likelihoods = {{0.25, 0.25, 0.25, 0.25}, {0.4, 0.3, 0.2, 0.1}};
    RandomStream rng(20250810);
    const int draws = 1000000;
    std::vector<int> counts(4, 0);
    for (int rep = 0; rep < draws; ++rep)
      counts[static_cast<std::size_t>(sample_signal(a, rng))]++;
    for (int s = 0; s < 4; ++s) {
      const double p = a.true_dist[static_cast<std::size_t>(s)];
      const double sigma = std::sqrt(p * (1.0 - p) * draws);
      CHECK(std::abs(counts[static_cast<std::size_t>(s)] - p * draws) <= 4.0 * sigma);
    }
  }
}

TEST_CASE("model validation") {
  SUBCASE("m >= 2 required") {
    AgentModel a;
    a.true_dist = {1.0};
    a.likelihoods = {{1.0}};
    CHECK_THROWS_AS(NetworkModel(HypothesisSet::indexed(1), {a}), ValidationError);
  }
  SUBCASE("duplicate labels rejected") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.5, 0.5}, {0.4, 0.6}};
    HypothesisSet hyps;
    hyps.labels = {"same", "same"};
    CHECK_THROWS_AS(NetworkModel(hyps, {a}), ValidationError);
  }
  SUBCASE("support violation fatal at construction") {
    AgentModel a;
    a.true_dist = {0.5, 0.5};
    a.likelihoods = {{0.5, 0.5}, {1.0, 0.0}};
    CHECK_THROWS_AS(NetworkModel(HypothesisSet::indexed(2), {a}), DomainError);
  }
  SUBCASE("row sums checked to 1e-12") {
    AgentModel a;
    a.true_dist = {0.5, 0.6};
    a.likelihoods = {{0.5, 0.5}, {0.4, 0.6}};
    CHECK_THROWS_AS(NetworkModel(HypothesisSet::indexed(2), {a}), ValidationError);
  }
}

TEST_CASE("model file loading") {
  psl_test::TempDir dir("model_io");

  SUBCASE("round trip with labels and ragged alphabets") {
    const std::string path = dir.file("good.model");
    psl_test::write_file(path,
                         "# comment\n"
                         "m 2\n"
                         "n 2\n"
                         "hypotheses fair biased\n"
                         "agent 0\n"
                         "alphabet 2\n"
                         "true 0.5 0.5\n"
                         "lik 0.5 0.5\n"
                         "lik 0.25 0.75\n"
                         "agent 1\n"
                         "alphabet 3\n"
                         "true 0.2 0.3 0.5\n"
                         "lik 0.2 0.3 0.5\n"
                         "lik 0.5 0.25 0.25\n");
    const NetworkModel model = load_model_file(path);
    CHECK(model.n() == 2);
    CHECK(model.m() == 2);
    CHECK(model.hypotheses().labels[1] == "biased");
    CHECK(model.agent(1).alphabet() == 3);
    CHECK(optimal_set(model) == std::vector<int>{0});
  }

  SUBCASE("small row-sum deviation is normalized") {
    const std::string path = dir.file("norm.model");
    psl_test::write_file(path,
                         "m 2\nn 1\nagent 0\nalphabet 2\n"
                         "true 0.5 0.50000000001\n"  // deviation 1e-11 < 1e-9
                         "lik 0.5 0.5\nlik 0.3 0.7\n");
    const NetworkModel model = load_model_file(path);
    CHECK(model.agent(0).true_dist[0] + model.agent(0).true_dist[1] ==
          doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("large row-sum deviation is rejected") {
    const std::string path = dir.file("bad_sum.model");
    psl_test::write_file(path,
                         "m 2\nn 1\nagent 0\nalphabet 2\n"
                         "true 0.5 0.6\n"
                         "lik 0.5 0.5\nlik 0.3 0.7\n");
    CHECK_THROWS_WITH_AS(load_model_file(path), doctest::Contains("deviation"),
                         ValidationError);
  }

  SUBCASE("support violations are fatal at load") {
    const std::string path = dir.file("bad_support.model");
    psl_test::write_file(path,
                         "m 2\nn 1\nagent 0\nalphabet 2\n"
                         "true 0.5 0.5\n"
                         "lik 0.5 0.5\nlik 1 0\n");
    CHECK_THROWS_AS(load_model_file(path), DomainError);
  }

  SUBCASE("optimal set must be strict at load") {
    const std::string path = dir.file("tie.model");
    psl_test::write_file(path,
                         "m 2\nn 1\nagent 0\nalphabet 2\n"
                         "true 0.5 0.5\n"
                         "lik 0.4 0.6\nlik 0.4 0.6\n");
    CHECK_THROWS_AS(load_model_file(path), ValidationError);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model_file(dir.file("absent.model")), ValidationError);
  }
}
