#include "loopmp/neighborhood.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "loopmp/errors.hpp"
#include "loopmp/parallel.hpp"

namespace loopmp {

int NeighborhoodView::local_index(NodeId node) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
  if (it == nodes.end() || *it != node) return -1;
  return static_cast<int>(it - nodes.begin());
}

namespace {

bool by_id(const EdgeRef& a, const EdgeRef& b) { return a.id < b.id; }

EdgeRef ref_of(const Graph& g, EdgeId id) {
  const auto& e = g.edge(id);
  return {e.u, e.v, id};
}

class PathCollector {
 public:
  PathCollector(const Graph& g, NodeId focal, int r) : g_(g), focal_(focal), r_(r) {
    for (const auto& nb : g.neighbors(focal)) is_nbr_.push_back(nb.node);
  }

  std::vector<EdgeId> collect() {
    if (r_ == 1) {
      collect_direct_links();
    } else {
      compute_distances();
      for (NodeId a : is_nbr_) {
        start_ = a;
        path_nodes_.assign(1, a);
        path_edges_.clear();
        dfs(a, 0);
      }
    }
    return std::move(found_);
  }

 private:
  bool is_neighbor(NodeId x) const { return std::binary_search(is_nbr_.begin(), is_nbr_.end(), x); }

  // r == 1: single edges between two neighbors of the focal node.
  void collect_direct_links() {
    for (NodeId a : is_nbr_) {
      for (const auto& nb : g_.neighbors(a)) {
        if (nb.node > a && nb.node != focal_ && is_neighbor(nb.node)) found_.push_back(nb.edge);
      }
    }
  }

  // Hop distance (avoiding the focal node) from the neighbor set, up to r.
  void compute_distances() {
    std::vector<NodeId> frontier = is_nbr_;
    for (NodeId a : frontier) dist_[a] = 0;
    for (int d = 1; d <= r_ && !frontier.empty(); ++d) {
      std::vector<NodeId> next;
      for (NodeId x : frontier) {
        for (const auto& nb : g_.neighbors(x)) {
          if (nb.node == focal_) continue;
          if (dist_.try_emplace(nb.node, d).second) next.push_back(nb.node);
        }
      }
      frontier = std::move(next);
    }
  }

  void dfs(NodeId x, int depth) {
    for (const auto& nb : g_.neighbors(x)) {
      const NodeId y = nb.node;
      if (y == focal_) continue;
      if (std::find(path_nodes_.begin(), path_nodes_.end(), y) != path_nodes_.end()) continue;
      const int next_depth = depth + 1;
      if (y > start_ && is_neighbor(y)) {
        found_.insert(found_.end(), path_edges_.begin(), path_edges_.end());
        found_.push_back(nb.edge);
      }
      if (next_depth >= r_) continue;
      auto it = dist_.find(y);
      if (it == dist_.end() || it->second > r_ - next_depth) continue;
      path_nodes_.push_back(y);
      path_edges_.push_back(nb.edge);
      dfs(y, next_depth);
      path_nodes_.pop_back();
      path_edges_.pop_back();
    }
  }

  const Graph& g_;
  NodeId focal_;
  int r_;
  std::vector<NodeId> is_nbr_;
  std::unordered_map<NodeId, int> dist_;
  NodeId start_ = -1;
  std::vector<NodeId> path_nodes_;
  std::vector<EdgeId> path_edges_;
  std::vector<EdgeId> found_;
};

}  // namespace

Neighborhood neighborhood_from_edges(NodeId focal, int r, std::vector<EdgeRef> edges) {
  Neighborhood nb;
  nb.focal = focal;
  nb.order = r;
  std::sort(edges.begin(), edges.end(), by_id);
  nb.edges = std::move(edges);
  for (const auto& e : nb.edges) {
    if (e.u != focal) nb.nodes.push_back(e.u);
    if (e.v != focal) nb.nodes.push_back(e.v);
  }
  std::sort(nb.nodes.begin(), nb.nodes.end());
  nb.nodes.erase(std::unique(nb.nodes.begin(), nb.nodes.end()), nb.nodes.end());
  nb.direct.assign(nb.nodes.size(), 0);
  const auto view = nb.view();
  for (const auto& e : nb.edges) {
    if (e.touches(focal)) nb.direct[static_cast<std::size_t>(view.local_index(e.other(focal)))] = 1;
  }
  return nb;
}

Neighborhood build_neighborhood(const Graph& g, NodeId i, int r) {
  if (i < 0 || i >= g.size()) throw ValidationError("node " + std::to_string(i) + " out of range");
  if (r < 0) throw ValidationError("order must be nonnegative");
  std::vector<EdgeId> ids;
  for (const auto& nb : g.neighbors(i)) ids.push_back(nb.edge);
  if (r >= 1 && g.degree(i) >= 2) {
    auto more = PathCollector(g, i, r).collect();
    ids.insert(ids.end(), more.begin(), more.end());
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<EdgeRef> edges;
  edges.reserve(ids.size());
  for (EdgeId id : ids) edges.push_back(ref_of(g, id));
  return neighborhood_from_edges(i, r, std::move(edges));
}

std::vector<EdgeRef> edge_difference(std::span<const EdgeRef> a, std::span<const EdgeRef> b) {
  std::vector<EdgeRef> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out), by_id);
  return out;
}

Neighborhood build_reduced(const Graph& g, NodeId i, NodeId j, int r) {
  const auto ni = build_neighborhood(g, i, r);
  const auto nj = build_neighborhood(g, j, r);
  return neighborhood_from_edges(j, r, edge_difference(nj.edges, ni.edges));
}

// --- MessageTopology -------------------------------------------------------

void MessageTopology::FlatSets::append(const Neighborhood& nb) {
  focal.push_back(nb.focal);
  nodes.insert(nodes.end(), nb.nodes.begin(), nb.nodes.end());
  direct.insert(direct.end(), nb.direct.begin(), nb.direct.end());
  edges.insert(edges.end(), nb.edges.begin(), nb.edges.end());
  node_off.push_back(nodes.size());
  edge_off.push_back(edges.size());
}

NeighborhoodView MessageTopology::FlatSets::view(std::size_t k) const {
  const auto nb = node_off[k], ne = node_off[k + 1];
  const auto eb = edge_off[k], ee = edge_off[k + 1];
  return {focal[k], std::span(nodes).subspan(nb, ne - nb), std::span(edges).subspan(eb, ee - eb),
          std::span(direct).subspan(nb, ne - nb)};
}

std::span<const std::uint32_t> MessageTopology::FlatSets::deps_of(std::size_t k) const {
  const auto nb = node_off[k], ne = node_off[k + 1];
  return std::span(deps).subspan(nb, ne - nb);
}

std::size_t MessageTopology::FlatSets::bytes() const {
  return node_off.capacity() * sizeof(std::size_t) + edge_off.capacity() * sizeof(std::size_t) +
         nodes.capacity() * sizeof(NodeId) + direct.capacity() + deps.capacity() * sizeof(std::uint32_t) +
         edges.capacity() * sizeof(EdgeRef) + focal.capacity() * sizeof(NodeId);
}

std::ptrdiff_t MessageTopology::find(NodeId i, NodeId j) const {
  if (i < 0 || i >= node_count()) return -1;
  const auto [b, e] = incoming(i);
  auto first = sources_.begin() + static_cast<std::ptrdiff_t>(b);
  auto last = sources_.begin() + static_cast<std::ptrdiff_t>(e);
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return -1;
  return it - sources_.begin();
}

NeighborhoodView MessageTopology::reduced(std::size_t m) const { return reduced_.view(m); }
std::span<const std::uint32_t> MessageTopology::deps(std::size_t m) const { return reduced_.deps_of(m); }
NeighborhoodView MessageTopology::full(NodeId i) const { return full_.view(static_cast<std::size_t>(i)); }
std::span<const std::uint32_t> MessageTopology::full_deps(NodeId i) const {
  return full_.deps_of(static_cast<std::size_t>(i));
}

std::size_t MessageTopology::memory_bytes() const {
  return node_offsets_.capacity() * sizeof(std::size_t) + (targets_.capacity() + sources_.capacity()) * sizeof(NodeId) +
         reduced_.bytes() + full_.bytes();
}

MessageTopology build_topology(const Graph& g, int r, const TopologyOptions& opts) {
  if (r < 0) throw ValidationError("order must be nonnegative");
  const auto n = static_cast<std::size_t>(g.size());
  MessageTopology topo;
  topo.order_ = r;

  std::vector<Neighborhood> full(n);
  parallel_for(n, opts.threads, [&](std::size_t i) { full[i] = build_neighborhood(g, static_cast<NodeId>(i), r); });

  std::size_t budget_used = 0;
  auto charge = [&](std::size_t edges) {
    budget_used += edges;
    if (budget_used > opts.edge_budget)
      throw BudgetError("neighborhood edge budget of " + std::to_string(opts.edge_budget) + " exceeded at order " +
                        std::to_string(r));
  };

  topo.node_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    charge(full[i].edges.size());
    topo.node_offsets_[i + 1] = topo.node_offsets_[i] + full[i].nodes.size();
  }
  const auto messages = topo.node_offsets_.back();
  if (messages > std::numeric_limits<std::uint32_t>::max()) throw BudgetError("too many messages");
  topo.targets_.resize(messages);
  topo.sources_.resize(messages);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < full[i].nodes.size(); ++k) {
      topo.targets_[topo.node_offsets_[i] + k] = static_cast<NodeId>(i);
      topo.sources_[topo.node_offsets_[i] + k] = full[i].nodes[k];
    }
  }

  auto dep_index = [&](NodeId j, NodeId k) {
    const auto& nj = full[static_cast<std::size_t>(j)];
    auto it = std::lower_bound(nj.nodes.begin(), nj.nodes.end(), k);
    assert(it != nj.nodes.end() && *it == k);
    return static_cast<std::uint32_t>(topo.node_offsets_[static_cast<std::size_t>(j)] +
                                      static_cast<std::size_t>(it - nj.nodes.begin()));
  };

  // Reduced sets are built in chunks so the transient owning copies stay small.
  constexpr std::size_t chunk = 1 << 14;
  std::vector<Neighborhood> batch;
  for (std::size_t start = 0; start < messages; start += chunk) {
    const auto count = std::min(chunk, messages - start);
    batch.assign(count, Neighborhood{});
    parallel_for(count, opts.threads, [&](std::size_t k) {
      const auto m = start + k;
      const auto i = static_cast<std::size_t>(topo.targets_[m]);
      const auto j = topo.sources_[m];
      batch[k] = neighborhood_from_edges(j, r, edge_difference(full[static_cast<std::size_t>(j)].edges, full[i].edges));
    });
    for (const auto& nb : batch) {
      charge(nb.edges.size());
      topo.reduced_.append(nb);
      for (NodeId k : nb.nodes) topo.reduced_.deps.push_back(dep_index(nb.focal, k));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    topo.full_.append(full[i]);
    for (std::size_t k = 0; k < full[i].nodes.size(); ++k)
      topo.full_.deps.push_back(static_cast<std::uint32_t>(topo.node_offsets_[i] + k));
    full[i] = Neighborhood{};
  }
  return topo;
}

std::string dump_neighborhood(const Graph& g, const Neighborhood& nb) {
  std::ostringstream os;
  os.precision(17);
  os << "# neighborhood focal=" << nb.focal << " r=" << nb.order << " nodes=" << nb.nodes.size()
     << " edges=" << nb.edges.size() << '\n';
  os << "# members:";
  for (std::size_t k = 0; k < nb.nodes.size(); ++k) os << ' ' << nb.nodes[k] << (nb.direct[k] ? "*" : "");
  os << '\n';
  for (const auto& e : nb.edges) {
    os << e.u << ' ' << e.v;
    const double w = g.edge(e.id).w;
    if (w != 1.0) os << ' ' << w;
    os << '\n';
  }
  return os.str();
}

}  // namespace loopmp
