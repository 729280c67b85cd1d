#include "loopmp/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>

#include "loopmp/errors.hpp"

namespace loopmp {

Graph::Graph(NodeId n, std::vector<Edge> edges, std::vector<double> diag)
    : n_(n), edges_(std::move(edges)), diag_(std::move(diag)) {
  if (n_ < 0) throw ValidationError("negative node count");
  if (diag_.empty()) diag_.assign(static_cast<std::size_t>(n_), 0.0);
  if (diag_.size() != static_cast<std::size_t>(n_))
    throw ValidationError("diagonal length does not match node count");
  if (edges_.size() > static_cast<std::size_t>(std::numeric_limits<EdgeId>::max()))
    throw ValidationError("too many edges");

  std::vector<std::size_t> deg(static_cast<std::size_t>(n_), 0);
  for (auto& e : edges_) {
    if (e.u < 0 || e.v < 0 || e.u >= n_ || e.v >= n_)
      throw ValidationError("edge endpoint out of range");
    if (e.u == e.v) throw ValidationError("self-loop on node " + std::to_string(e.u));
    if (e.u > e.v) std::swap(e.u, e.v);
    ++deg[static_cast<std::size_t>(e.u)];
    ++deg[static_cast<std::size_t>(e.v)];
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].u == edges_[k - 1].u && edges_[k].v == edges_[k - 1].v)
      throw ValidationError("duplicate edge (" + std::to_string(edges_[k].u) + "," +
                            std::to_string(edges_[k].v) + ")");
  }

  offsets_.assign(static_cast<std::size_t>(n_) + 1, 0);
  for (NodeId i = 0; i < n_; ++i)
    offsets_[static_cast<std::size_t>(i) + 1] = offsets_[static_cast<std::size_t>(i)] + deg[static_cast<std::size_t>(i)];
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    const auto id = static_cast<EdgeId>(k);
    adjacency_[fill[static_cast<std::size_t>(e.u)]++] = {e.v, id, e.w};
    adjacency_[fill[static_cast<std::size_t>(e.v)]++] = {e.u, id, e.w};
  }
  for (NodeId i = 0; i < n_; ++i) {
    auto first = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[static_cast<std::size_t>(i)]);
    auto last = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[static_cast<std::size_t>(i) + 1]);
    std::sort(first, last, [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
}

std::span<const Neighbor> Graph::neighbors(NodeId i) const {
  const auto b = offsets_[static_cast<std::size_t>(i)];
  const auto e = offsets_[static_cast<std::size_t>(i) + 1];
  return {adjacency_.data() + b, e - b};
}

int Graph::degree(NodeId i) const {
  return static_cast<int>(offsets_[static_cast<std::size_t>(i) + 1] - offsets_[static_cast<std::size_t>(i)]);
}

std::optional<EdgeId> Graph::find_edge(NodeId u, NodeId v) const {
  if (u < 0 || v < 0 || u >= n_ || v >= n_) return std::nullopt;
  auto nb = neighbors(u);
  auto it = std::lower_bound(nb.begin(), nb.end(), v,
                             [](const Neighbor& a, NodeId key) { return a.node < key; });
  if (it == nb.end() || it->node != v) return std::nullopt;
  return it->edge;
}

bool Graph::is_simple_unweighted() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.w == 1.0; }) &&
         std::all_of(diag_.begin(), diag_.end(), [](double d) { return d == 0.0; });
}

Eigen::MatrixXd Graph::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (NodeId i = 0; i < n_; ++i) m(i, i) = diag(i);
  for (const auto& e : edges_) {
    m(e.u, e.v) = e.w;
    m(e.v, e.u) = e.w;
  }
  return m;
}

std::size_t Graph::memory_bytes() const {
  return edges_.capacity() * sizeof(Edge) + diag_.capacity() * sizeof(double) +
         offsets_.capacity() * sizeof(std::size_t) + adjacency_.capacity() * sizeof(Neighbor);
}

namespace {

struct Triplet {
  std::int64_t u;
  std::int64_t v;
  double w;
  std::size_t line;
};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < s.size()) {
    while (k < s.size() && (s[k] == ' ' || s[k] == '\t' || s[k] == ',')) ++k;
    const auto b = k;
    while (k < s.size() && s[k] != ' ' && s[k] != '\t' && s[k] != ',') ++k;
    if (k > b) out.push_back(s.substr(b, k - b));
  }
  return out;
}

std::int64_t parse_id(std::string_view tok, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(line, "invalid node id '" + std::string(tok) + "'");
  if (v < 0) throw ParseError(line, "negative node id " + std::string(tok));
  return v;
}

double parse_weight(std::string_view tok, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw ParseError(line, "invalid weight '" + std::string(tok) + "'");
  return v;
}

std::vector<Triplet> parse_lines(std::string_view text, bool weight_required) {
  std::vector<Triplet> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    // Matrix Market style banner lines start with '%'.
    if (line.front() == '%') continue;
    const auto toks = split_ws(line);
    if (toks.size() < 2 || toks.size() > 3 || (weight_required && toks.size() != 3))
      throw ParseError(line_no, "expected " + std::string(weight_required ? "'i j value'" : "'u v [w]'"));
    Triplet t{parse_id(toks[0], line_no), parse_id(toks[1], line_no), 1.0, line_no};
    if (toks.size() == 3) t.w = parse_weight(toks[2], line_no);
    out.push_back(t);
  }
  return out;
}

// Rewrites ids in place to 0..n-1 in order of first appearance.
void remap(std::vector<Triplet>& ts, IdMap& ids) {
  std::unordered_map<std::int64_t, std::int64_t> dense;
  ids.original.clear();
  auto get = [&](std::int64_t id) {
    auto [it, inserted] = dense.try_emplace(id, static_cast<std::int64_t>(ids.original.size()));
    if (inserted) ids.original.push_back(id);
    return it->second;
  };
  for (auto& t : ts) {
    t.u = get(t.u);
    t.v = get(t.v);
  }
}

NodeId node_count(const std::vector<Triplet>& ts) {
  std::int64_t mx = -1;
  for (const auto& t : ts) {
    if (t.u > std::numeric_limits<NodeId>::max() - 1 || t.v > std::numeric_limits<NodeId>::max() - 1)
      throw ParseError(t.line, "node id too large (use an id map for sparse ids)");
    mx = std::max({mx, t.u, t.v});
  }
  return static_cast<NodeId>(mx + 1);
}

Graph build_from_edge_lines(std::vector<Triplet> ts) {
  const NodeId n = node_count(ts);
  std::vector<Edge> edges;
  edges.reserve(ts.size());
  std::unordered_map<std::uint64_t, std::size_t> seen;
  for (const auto& t : ts) {
    if (t.u == t.v) throw ValidationError("line " + std::to_string(t.line) + ": self-loop on node " + std::to_string(t.u));
    const auto a = static_cast<std::uint64_t>(std::min(t.u, t.v));
    const auto b = static_cast<std::uint64_t>(std::max(t.u, t.v));
    auto [it, inserted] = seen.try_emplace((a << 32) | b, t.line);
    if (!inserted)
      throw ValidationError("line " + std::to_string(t.line) + ": duplicate edge (" + std::to_string(a) + "," +
                            std::to_string(b) + "), first seen on line " + std::to_string(it->second));
    edges.push_back({static_cast<NodeId>(t.u), static_cast<NodeId>(t.v), t.w});
  }
  return Graph(n, std::move(edges));
}

Graph build_from_triplets(std::vector<Triplet> ts) {
  const NodeId n = node_count(ts);
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  std::vector<bool> diag_set(static_cast<std::size_t>(n), false);
  std::unordered_map<std::uint64_t, std::pair<double, std::size_t>> seen;
  std::vector<Edge> edges;
  for (const auto& t : ts) {
    if (t.u == t.v) {
      const auto i = static_cast<std::size_t>(t.u);
      if (diag_set[i]) throw ValidationError("line " + std::to_string(t.line) + ": duplicate diagonal entry " + std::to_string(t.u));
      diag_set[i] = true;
      diag[i] = t.w;
      continue;
    }
    const auto a = static_cast<std::uint64_t>(std::min(t.u, t.v));
    const auto b = static_cast<std::uint64_t>(std::max(t.u, t.v));
    const bool upper = t.u < t.v;
    // Key distinguishes the two orientations so a mirrored pair is accepted once.
    auto [it, inserted] = seen.try_emplace((a << 32) | b, std::pair{t.w, upper ? 1u : 2u});
    if (inserted) {
      edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b), t.w});
      continue;
    }
    const unsigned mask = upper ? 1u : 2u;
    if ((it->second.second & mask) != 0u)
      throw ValidationError("line " + std::to_string(t.line) + ": duplicate entry (" + std::to_string(t.u) + "," +
                            std::to_string(t.v) + ")");
    if (it->second.first != t.w)
      throw ValidationError("line " + std::to_string(t.line) + ": asymmetric entry (" + std::to_string(t.u) + "," +
                            std::to_string(t.v) + ")");
    it->second.second |= mask;
  }
  // Zero off-diagonal entries are structural zeros, not edges.
  std::erase_if(edges, [](const Edge& e) { return e.w == 0.0; });
  return Graph(n, std::move(edges), std::move(diag));
}

}  // namespace

Graph load_edge_list(std::string_view text) { return build_from_edge_lines(parse_lines(text, false)); }

Graph load_edge_list(std::string_view text, IdMap& ids) {
  auto ts = parse_lines(text, false);
  remap(ts, ids);
  return build_from_edge_lines(std::move(ts));
}

Graph load_triplets(std::string_view text) { return build_from_triplets(parse_lines(text, true)); }

Graph load_triplets(std::string_view text, IdMap& ids) {
  auto ts = parse_lines(text, true);
  remap(ts, ids);
  return build_from_triplets(std::move(ts));
}

Graph laplacian(const Graph& g) {
  std::vector<double> diag(static_cast<std::size_t>(g.size()), 0.0);
  std::vector<Edge> edges;
  edges.reserve(g.edge_count());
  for (NodeId i = 0; i < g.size(); ++i) {
    if (g.diag(i) != 0.0) throw ValidationError("laplacian requires a graph without self-loops");
  }
  for (const auto& e : g.edges()) {
    edges.push_back({e.u, e.v, -e.w});
    diag[static_cast<std::size_t>(e.u)] += e.w;
    diag[static_cast<std::size_t>(e.v)] += e.w;
  }
  return Graph(g.size(), std::move(edges), std::move(diag));
}

std::string to_edge_list(const Graph& g) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& e : g.edges()) {
    os << e.u << ' ' << e.v;
    if (e.w != 1.0) os << ' ' << e.w;
    os << '\n';
  }
  return os.str();
}

}  // namespace loopmp
