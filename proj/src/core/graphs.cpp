#include "graphs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "random.hpp"
#include "util.hpp"

namespace psl {

Digraph::Digraph(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
  if (n < 1) throw ValidationError("digraph: node count must be >= 1");
  for (auto [j, i] : edges) {
    if (j < 0 || j >= n || i < 0 || i >= n)
      throw ValidationError("digraph: edge (" + std::to_string(j) + "," +
                            std::to_string(i) + ") out of range for n = " +
                            std::to_string(n));
  }
  for (int i = 0; i < n; ++i) edges.emplace_back(i, i);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  in_adj_.resize(static_cast<std::size_t>(n));
  out_adj_.resize(static_cast<std::size_t>(n));
  for (auto [j, i] : edges_) {
    out_adj_[static_cast<std::size_t>(j)].push_back(i);
    in_adj_[static_cast<std::size_t>(i)].push_back(j);
  }
}

Eigen::MatrixXd weight_matrix(const Digraph& g) {
  const int n = g.n();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (auto [j, i] : g.edges())
    a(i, j) = 1.0 / static_cast<double>(g.out_degree(j));
  return a;
}

namespace {

int sweep(const Digraph& g, bool reverse) {
  std::vector<char> seen(static_cast<std::size_t>(g.n()), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    const auto& next = reverse ? g.in_neighbors(u) : g.out_neighbors(u);
    for (int v : next) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count;
}

}  // namespace

bool is_strongly_connected(const Digraph& g) {
  return sweep(g, false) == g.n() && sweep(g, true) == g.n();
}

bool is_regular(const Digraph& g) {
  const int d_out = g.out_degree(0);
  const int d_in = g.in_degree(0);
  for (int v = 1; v < g.n(); ++v)
    if (g.out_degree(v) != d_out || g.in_degree(v) != d_in) return false;
  return true;
}

GraphSequence GraphSequence::make_static(Digraph g, int window_b) {
  if (window_b < 1) throw ValidationError("graph sequence: B must be >= 1");
  GraphSequence seq;
  seq.kind_ = Kind::Static;
  seq.n_ = g.n();
  seq.window_b_ = window_b;
  seq.graphs_.push_back(std::move(g));
  return seq;
}

GraphSequence GraphSequence::make_periodic(std::vector<Digraph> period,
                                           int window_b) {
  if (period.empty())
    throw ValidationError("graph sequence: periodic schedule needs >= 1 graph");
  if (window_b < 1) throw ValidationError("graph sequence: B must be >= 1");
  const int n = period.front().n();
  for (const Digraph& g : period)
    if (g.n() != n)
      throw ValidationError("graph sequence: all graphs must share node count");
  GraphSequence seq;
  seq.kind_ = Kind::Periodic;
  seq.n_ = n;
  seq.window_b_ = window_b;
  seq.graphs_ = std::move(period);
  return seq;
}

GraphSequence GraphSequence::make_random(int n, int window_b, double p,
                                         std::uint64_t seed) {
  if (n < 1) throw ValidationError("graph sequence: node count must be >= 1");
  if (window_b < 1) throw ValidationError("graph sequence: B must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw ValidationError("graph sequence: edge probability must lie in [0,1]");
  GraphSequence seq;
  seq.kind_ = Kind::SeededRandom;
  seq.n_ = n;
  seq.window_b_ = window_b;
  seq.p_ = p;
  seq.seed_ = seed;
  // Probe the first window so infeasible parameters fail at construction.
  (void)seq.generate_window(0);
  return seq;
}

std::vector<Digraph> GraphSequence::generate_window(std::int64_t w) const {
  constexpr std::uint64_t kWindowSalt = 0x57494E44ull;  // "WIND"
  constexpr int kMaxAttempts = 1000;
  RandomStream rng = RandomStream::keyed(seed_, kWindowSalt,
                                         static_cast<std::uint64_t>(w));
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<Digraph> graphs;
    std::vector<std::pair<int, int>> all_edges;
    graphs.reserve(static_cast<std::size_t>(window_b_));
    for (int step = 0; step < window_b_; ++step) {
      std::vector<std::pair<int, int>> edges;
      for (int j = 0; j < n_; ++j)
        for (int i = 0; i < n_; ++i) {
          if (i == j) continue;
          if (rng.next_uniform() < p_) edges.emplace_back(j, i);
        }
      all_edges.insert(all_edges.end(), edges.begin(), edges.end());
      graphs.emplace_back(n_, std::move(edges));
    }
    if (is_strongly_connected(Digraph(n_, std::move(all_edges)))) return graphs;
  }
  throw GenerationError(
      "graph sequence: window " + std::to_string(w) + " not strongly connected "
      "after " + std::to_string(kMaxAttempts) + " resamples (p = " +
      format_g17(p_) + ", n = " + std::to_string(n_) + ", B = " +
      std::to_string(window_b_) + ")");
}

Digraph GraphSequence::schedule(std::int64_t k) const {
  if (k < 0) throw ValidationError("graph sequence: negative step index");
  switch (kind_) {
    case Kind::Static:
      return graphs_.front();
    case Kind::Periodic:
      return graphs_[static_cast<std::size_t>(
          k % static_cast<std::int64_t>(graphs_.size()))];
    case Kind::SeededRandom: {
      const std::int64_t w = k / window_b_;
      return generate_window(w)[static_cast<std::size_t>(k % window_b_)];
    }
  }
  throw Error("graph sequence: unreachable kind");
}

Digraph GraphSequence::union_graph(std::int64_t k0, std::int64_t k1) const {
  std::vector<std::pair<int, int>> edges;
  for (std::int64_t k = k0; k <= k1; ++k) {
    const Digraph g = schedule(k);
    edges.insert(edges.end(), g.edges().begin(), g.edges().end());
  }
  return Digraph(n_, std::move(edges));
}

std::uint64_t GraphSequence::fingerprint() const {
  Fnv1a h;
  h.update(std::string("graph"));
  h.update_i64(static_cast<std::int64_t>(kind_));
  h.update_i64(n_);
  h.update_i64(window_b_);
  h.update(p_);
  h.update(seed_);
  for (const Digraph& g : graphs_)
    for (auto [j, i] : g.edges()) {
      h.update_i64(j);
      h.update_i64(i);
    }
  return h.digest();
}

AuditResult audit_b_connectivity(const GraphSequence& seq, int window_b,
                                 std::int64_t windows) {
  if (window_b < 1) throw ValidationError("audit: B must be >= 1");
  if (windows < 1) throw ValidationError("audit: window count must be >= 1");
  for (std::int64_t w = 0; w < windows; ++w) {
    const Digraph u = seq.union_graph(w * window_b, (w + 1) * window_b - 1);
    if (!is_strongly_connected(u)) return {false, w};
  }
  return {true, -1};
}

TheoremConstants theorem_constants(const GraphSequence& seq) {
  const int n = seq.n();
  const int b = seq.window();
  bool regular = b == 1 && seq.kind() != GraphSequence::Kind::SeededRandom &&
                 !seq.defining_graphs().empty();
  if (regular)
    for (const Digraph& g : seq.defining_graphs())
      if (!is_regular(g) || !is_strongly_connected(g)) {
        regular = false;
        break;
      }

  TheoremConstants out;
  out.regular_case = regular;
  if (regular) {
    out.big_c = std::sqrt(2.0);
    const double n3 = static_cast<double>(n) * n * n;
    out.lambda = 1.0 - 1.0 / (4.0 * n3);  // exponent 1/B is redundant at B = 1
    out.log_delta_floor = 0.0;
  } else {
    out.big_c = 4.0;
    const double log_n = std::log(static_cast<double>(n));
    out.log_delta_floor = -static_cast<double>(n) * b * log_n;
    const double floor = std::exp(out.log_delta_floor);  // n^-nB
    out.lambda = std::exp(std::log1p(-floor) / static_cast<double>(b));
  }
  return out;
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

}  // namespace

GraphSequence load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("graph file '" + path + "': cannot open");

  std::string kind;
  int n = -1, b = 1;
  double p = -1.0;
  std::uint64_t seed = 0;
  bool have_seed = false;
  std::vector<std::vector<std::pair<int, int>>> blocks;
  std::vector<std::pair<int, int>>* current = nullptr;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string& key = toks[0];

    if (current != nullptr) {
      if (key == "end") {
        current = nullptr;
      } else if (toks.size() == 2) {
        try {
          current->emplace_back(std::stoi(toks[0]), std::stoi(toks[1]));
        } catch (const std::exception&) {
          throw ValidationError(where + ": bad edge '" + line + "'");
        }
      } else {
        throw ValidationError(where + ": expected 'j i' edge pair or 'end'");
      }
      continue;
    }

    if (key == "kind") {
      if (toks.size() != 2) throw ValidationError(where + ": expected 'kind <name>'");
      kind = toks[1];
    } else if (key == "n") {
      n = std::stoi(toks.at(1));
    } else if (key == "B") {
      b = std::stoi(toks.at(1));
    } else if (key == "p") {
      p = std::stod(toks.at(1));
    } else if (key == "seed") {
      seed = std::stoull(toks.at(1));
      have_seed = true;
    } else if (key == "edges" || key == "step") {
      blocks.emplace_back();
      current = &blocks.back();
    } else {
      throw ValidationError(where + ": unknown key '" + key + "'");
    }
  }
  if (current != nullptr)
    throw ValidationError(path + ": unterminated edge block (missing 'end')");
  if (n < 1) throw ValidationError(path + ": missing or invalid 'n'");

  if (kind == "static") {
    if (blocks.size() != 1)
      throw ValidationError(path + ": static kind needs exactly one 'edges' block");
    return GraphSequence::make_static(Digraph(n, blocks.front()), b);
  }
  if (kind == "periodic") {
    if (blocks.empty())
      throw ValidationError(path + ": periodic kind needs >= 1 'step' block");
    std::vector<Digraph> period;
    period.reserve(blocks.size());
    for (auto& edges : blocks) period.emplace_back(n, std::move(edges));
    return GraphSequence::make_periodic(std::move(period), b);
  }
  if (kind == "random" || kind == "seeded-random") {
    if (!(p >= 0.0)) throw ValidationError(path + ": random kind needs 'p'");
    if (!have_seed) throw ValidationError(path + ": random kind needs 'seed'");
    return GraphSequence::make_random(n, b, p, seed);
  }
  throw ValidationError(path + ": unknown kind '" + kind + "'");
}

}  // namespace psl
