#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace psl {

/// Directed graph on n nodes. An edge (j, i) means "j transmits to i".
/// Self-loops are inserted on construction and always present in memory, so
/// every out-degree is at least 1.
class Digraph {
 public:
  Digraph(int n, std::vector<std::pair<int, int>> edges);

  int n() const { return n_; }
  const std::vector<int>& in_neighbors(int i) const {
    return in_adj_[static_cast<std::size_t>(i)];
  }
  const std::vector<int>& out_neighbors(int j) const {
    return out_adj_[static_cast<std::size_t>(j)];
  }
  int out_degree(int j) const {
    return static_cast<int>(out_adj_[static_cast<std::size_t>(j)].size());
  }
  int in_degree(int i) const {
    return static_cast<int>(in_adj_[static_cast<std::size_t>(i)].size());
  }
  /// Canonical sorted edge list, self-loops included.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool operator==(const Digraph& other) const {
    return n_ == other.n_ && edges_ == other.edges_;
  }

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> in_adj_;
  std::vector<std::vector<int>> out_adj_;
};

/// Column-stochastic mixing matrix: [A]_ij = 1/outdeg(j) when (j,i) is an
/// edge, 0 otherwise. Diagonal strictly positive (self-loops).
Eigen::MatrixXd weight_matrix(const Digraph& g);

/// Every node reaches every node (two reachability sweeps from node 0).
bool is_strongly_connected(const Digraph& g);

/// All out-degrees equal and all in-degrees equal, self-loops counted.
bool is_regular(const Digraph& g);

struct AuditResult {
  bool ok = true;
  std::int64_t first_failing_window = -1;
};

/// Deterministic schedule k -> digraph with a claimed connectivity window B.
class GraphSequence {
 public:
  enum class Kind { Static, Periodic, SeededRandom };

  static GraphSequence make_static(Digraph g, int window_b = 1);
  static GraphSequence make_periodic(std::vector<Digraph> period, int window_b);
  /// Each non-loop edge present independently with probability p each step;
  /// every B-window is resampled (up to 1000 attempts) until its edge union
  /// is strongly connected. Deterministic in seed.
  static GraphSequence make_random(int n, int window_b, double p,
                                   std::uint64_t seed);

  Digraph schedule(std::int64_t k) const;
  int n() const { return n_; }
  int window() const { return window_b_; }
  Kind kind() const { return kind_; }
  /// The defining graphs for static/periodic kinds; empty for seeded-random.
  const std::vector<Digraph>& defining_graphs() const { return graphs_; }
  double edge_probability() const { return p_; }
  std::uint64_t seed() const { return seed_; }

  /// Union of the scheduled edge sets over steps [k0, k1].
  Digraph union_graph(std::int64_t k0, std::int64_t k1) const;

  std::uint64_t fingerprint() const;

 private:
  GraphSequence() = default;
  std::vector<Digraph> generate_window(std::int64_t w) const;

  Kind kind_ = Kind::Static;
  int n_ = 0;
  int window_b_ = 1;
  std::vector<Digraph> graphs_;
  double p_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Checks strong connectivity of the edge union over each of the first
/// `windows` length-B windows; reports the first failure.
AuditResult audit_b_connectivity(const GraphSequence& seq, int window_b,
                                 std::int64_t windows);

/// Ergodicity constants of the product chain.
///   regular case (every graph regular, B = 1, each graph connected):
///     C = sqrt(2), lambda = 1 - 1/(4 n^3), delta floor = 1.
///   general case: C = 4, lambda = (1 - n^-nB)^(1/B),
///     delta floor = n^-nB (returned in log form to avoid underflow).
struct TheoremConstants {
  double big_c = 0.0;
  double lambda = 0.0;
  double log_delta_floor = 0.0;
  bool regular_case = false;
};

TheoremConstants theorem_constants(const GraphSequence& seq);

/// Load a graph-sequence file. Self-loops may be omitted in files; the
/// loader inserts them. See README for the format.
GraphSequence load_graph_file(const std::string& path);

}  // namespace psl
