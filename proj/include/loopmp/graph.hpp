#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace loopmp {

using NodeId = std::int32_t;
using EdgeId = std::int32_t;

// Undirected edge, stored with u < v.
struct Edge {
  NodeId u;
  NodeId v;
  double w;
};

struct Neighbor {
  NodeId node;
  EdgeId edge;
  double w;
};

// Undirected weighted graph, equivalently a sparse symmetric matrix: off-diagonal
// entries are edges, the diagonal is held separately. Immutable once built.
class Graph {
 public:
  Graph() = default;

  // Validates: ids in range, no self-loops, no duplicate undirected edges.
  // `diag` may be empty (all zeros) or have n entries.
  Graph(NodeId n, std::vector<Edge> edges, std::vector<double> diag = {});

  NodeId size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[static_cast<std::size_t>(e)]; }

  // Neighbors of i sorted by node id.
  std::span<const Neighbor> neighbors(NodeId i) const;
  int degree(NodeId i) const;

  double diag(NodeId i) const { return diag_[static_cast<std::size_t>(i)]; }
  std::span<const double> diagonal() const noexcept { return diag_; }

  std::optional<EdgeId> find_edge(NodeId u, NodeId v) const;
  bool adjacent(NodeId u, NodeId v) const { return find_edge(u, v).has_value(); }

  // All weights 1 and zero diagonal: a plain percolation graph.
  bool is_simple_unweighted() const;

  Eigen::MatrixXd to_dense() const;

  // Approximate heap footprint in bytes.
  std::size_t memory_bytes() const;

 private:
  NodeId n_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> diag_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
};

// Dense id -> original id, produced when ingesting with remapping.
struct IdMap {
  std::vector<std::int64_t> original;
};

// "u v [w]" per line, '#' starts a comment, missing w is 1.0.
// n = 1 + max id. Throws ParseError / ValidationError.
Graph load_edge_list(std::string_view text);
// Same, but ids are compacted to 0..n-1 in order of first appearance.
Graph load_edge_list(std::string_view text, IdMap& ids);

// "i j value" symmetric triplets. Only one triangle is needed; (i,j) and (j,i)
// may both appear if they agree. i == j goes to the diagonal.
Graph load_triplets(std::string_view text);
Graph load_triplets(std::string_view text, IdMap& ids);

// L = D - A. Requires a zero diagonal.
Graph laplacian(const Graph& g);

inline int degree(const Graph& g, NodeId i) { return g.degree(i); }

// Edge-list text for g (weights omitted when 1).
std::string to_edge_list(const Graph& g);

}  // namespace loopmp
