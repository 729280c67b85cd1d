#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "loopmp/graph.hpp"

namespace loopmp {

// Edge reference inside a neighborhood; `id` indexes Graph::edges().
struct EdgeRef {
  NodeId u;
  NodeId v;
  EdgeId id;

  bool touches(NodeId x) const noexcept { return u == x || v == x; }
  NodeId other(NodeId x) const noexcept { return u == x ? v : u; }
};

// Non-owning view of a neighborhood. `nodes` is sorted and excludes the focal
// node; `direct[k]` is set iff nodes[k] shares a neighborhood edge with focal.
// `edges` is sorted by edge id.
struct NeighborhoodView {
  NodeId focal = -1;
  std::span<const NodeId> nodes;
  std::span<const EdgeRef> edges;
  std::span<const std::uint8_t> direct;

  std::size_t size() const noexcept { return nodes.size(); }
  // Position of `node` in `nodes`, or -1.
  int local_index(NodeId node) const;
};

struct Neighborhood {
  NodeId focal = -1;
  int order = 0;
  std::vector<NodeId> nodes;
  std::vector<EdgeRef> edges;
  std::vector<std::uint8_t> direct;

  std::size_t size() const noexcept { return nodes.size(); }
  NeighborhoodView view() const { return {focal, nodes, edges, direct}; }
};

// N_i^(r): i's incident edges plus every edge on a simple path of at most r
// edges that joins two distinct neighbors of i without passing through i.
Neighborhood build_neighborhood(const Graph& g, NodeId i, int r);

// N_{j\i}^(r): edges of N_j^(r) not in N_i^(r), focal j, members recomputed
// from the surviving edges.
Neighborhood build_reduced(const Graph& g, NodeId i, NodeId j, int r);

// Members and direct flags recomputed from an edge set around `focal`.
Neighborhood neighborhood_from_edges(NodeId focal, int r, std::vector<EdgeRef> edges);

// Sorted edge-id set difference a \ b.
std::vector<EdgeRef> edge_difference(std::span<const EdgeRef> a, std::span<const EdgeRef> b);

struct TopologyOptions {
  // Upper bound on the summed edge count of all stored neighborhoods.
  std::size_t edge_budget = 200'000'000;
  int threads = 0;
};

// Every directed message (i <- j) for j in N_i^(r), each with its reduced
// neighborhood N_{j\i}^(r) and the indices of the messages (j <- k) it reads.
// Also stores the full N_i^(r) of each node. Immutable after construction.
class MessageTopology {
 public:
  MessageTopology() = default;

  int order() const noexcept { return order_; }
  NodeId node_count() const noexcept { return static_cast<NodeId>(node_offsets_.size()) - 1; }
  std::size_t message_count() const noexcept { return targets_.size(); }

  // Message m carries information from source(m) = j to target(m) = i.
  NodeId target(std::size_t m) const { return targets_[m]; }
  NodeId source(std::size_t m) const { return sources_[m]; }
  std::pair<NodeId, NodeId> message(std::size_t m) const { return {targets_[m], sources_[m]}; }

  // Index of message (i <- j), or -1.
  std::ptrdiff_t find(NodeId i, NodeId j) const;
  // Messages into node i, contiguous and ordered by source.
  std::pair<std::size_t, std::size_t> incoming(NodeId i) const {
    return {node_offsets_[static_cast<std::size_t>(i)], node_offsets_[static_cast<std::size_t>(i) + 1]};
  }

  NeighborhoodView reduced(std::size_t m) const;
  // deps(m)[k] is the message index of (source(m) <- reduced(m).nodes[k]).
  std::span<const std::uint32_t> deps(std::size_t m) const;

  NeighborhoodView full(NodeId i) const;
  // Message indices (i <- full(i).nodes[k]).
  std::span<const std::uint32_t> full_deps(NodeId i) const;

  std::size_t total_edges() const noexcept { return reduced_.edges.size() + full_.edges.size(); }
  std::size_t memory_bytes() const;

  friend MessageTopology build_topology(const Graph& g, int r, const TopologyOptions& opts);

 private:
  struct FlatSets {
    std::vector<std::size_t> node_off{0};
    std::vector<std::size_t> edge_off{0};
    std::vector<NodeId> nodes;
    std::vector<std::uint8_t> direct;
    std::vector<std::uint32_t> deps;
    std::vector<EdgeRef> edges;
    std::vector<NodeId> focal;

    void append(const Neighborhood& nb);
    NeighborhoodView view(std::size_t k) const;
    std::span<const std::uint32_t> deps_of(std::size_t k) const;
    std::size_t bytes() const;
  };

  int order_ = 0;
  std::vector<std::size_t> node_offsets_{0};
  std::vector<NodeId> targets_;
  std::vector<NodeId> sources_;
  FlatSets reduced_;
  FlatSets full_;
};

// Throws BudgetError when the stored neighborhoods exceed opts.edge_budget.
MessageTopology build_topology(const Graph& g, int r, const TopologyOptions& opts = {});

// Edge-list text block describing a neighborhood, for debugging.
std::string dump_neighborhood(const Graph& g, const Neighborhood& nb);

}  // namespace loopmp
