#include "loopmp/reach_gf.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "loopmp/errors.hpp"
#include "loopmp/union_find.hpp"

namespace loopmp {

namespace {

// Probability that a cluster with focal-escape probability q and member
// product x is counted: q + (1-q) x. Written so that x = 1 gives exactly 1.
inline double cluster_factor(double q, double x) { return 1.0 - (1.0 - q) * (1.0 - x); }

// Product of a set of factors that tolerates exact zeros, so that one factor
// can later be divided back out.
struct ZeroAwareProduct {
  double nonzero = 1.0;
  int zeros = 0;

  void mul(double f) {
    if (f == 0.0) ++zeros;
    else nonzero *= f;
  }
  void div(double f) {
    if (f == 0.0) --zeros;
    else nonzero /= f;
  }
  double value() const { return zeros > 0 ? 0.0 : nonzero; }
  // Product with factor f (already included) left out.
  double without(double f) const {
    if (f == 0.0) return zeros == 1 ? nonzero : 0.0;
    return zeros > 0 ? 0.0 : nonzero / f;
  }
};

}  // namespace

LocalStructure LocalStructure::of(NeighborhoodView nb) {
  LocalStructure s;
  s.members = static_cast<int>(nb.size());
  s.direct.assign(nb.direct.begin(), nb.direct.end());
  for (const auto& e : nb.edges) {
    if (e.touches(nb.focal)) continue;
    s.internal.emplace_back(nb.local_index(e.u), nb.local_index(e.v));
  }
  return s;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> binomial_row(int M, double p) {
  std::vector<double> row(static_cast<std::size_t>(M) + 1, 0.0);
  if (p <= 0.0) {
    row.front() = 1.0;
    return row;
  }
  if (p >= 1.0) {
    row.back() = 1.0;
    return row;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lm = std::lgamma(M + 1.0);
  for (int m = 0; m <= M; ++m)
    row[static_cast<std::size_t>(m)] = std::exp(lm - std::lgamma(m + 1.0) - std::lgamma(M - m + 1.0) + m * lp + (M - m) * lq);
  return row;
}

// --- brute force ---------------------------------------------------------------

GfResult eval_exhaustive(NeighborhoodView nb, std::span<const double> y, double p, int edge_budget) {
  const int k = static_cast<int>(nb.size());
  const int E = static_cast<int>(nb.edges.size());
  if (E > edge_budget || E > 30)
    throw BudgetError("neighborhood has " + std::to_string(E) + " edges, above the exhaustive budget of " +
                      std::to_string(edge_budget) + "; use the Monte Carlo estimator");
  if (static_cast<int>(y.size()) != k) throw ValidationError("argument vector does not match neighborhood size");

  std::vector<std::pair<std::uint32_t, std::uint32_t>> ends;
  const auto focal = static_cast<std::uint32_t>(k);
  auto local = [&](NodeId x) { return x == nb.focal ? focal : static_cast<std::uint32_t>(nb.local_index(x)); };
  for (const auto& e : nb.edges) ends.emplace_back(local(e.u), local(e.v));

  std::vector<double> pw(static_cast<std::size_t>(E) + 1);
  for (int c = 0; c <= E; ++c) pw[static_cast<std::size_t>(c)] = std::pow(p, c) * std::pow(1.0 - p, E - c);

  GfResult out;
  out.grad.assign(static_cast<std::size_t>(k), 0.0);
  UnionFind uf;
  std::vector<std::uint32_t> reached;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << E); ++mask) {
    uf.reset(static_cast<std::size_t>(k) + 1);
    for (int b = 0; b < E; ++b)
      if (mask >> b & 1u) uf.unite(ends[static_cast<std::size_t>(b)].first, ends[static_cast<std::size_t>(b)].second);
    const double w = pw[static_cast<std::size_t>(std::popcount(mask))];
    const auto root = uf.find(focal);
    reached.clear();
    ZeroAwareProduct prod;
    for (std::uint32_t j = 0; j < focal; ++j) {
      if (uf.find(j) == root) {
        reached.push_back(j);
        prod.mul(y[j]);
      }
    }
    out.value += w * prod.value();
    for (auto j : reached) out.grad[j] += w * prod.without(y[j]);
  }
  return out;
}

// --- Monte Carlo -----------------------------------------------------------------

MonteCarloTrace::MonteCarloTrace(LocalStructure local, int samples, std::uint64_t seed)
    : local_(std::move(local)), samples_(samples) {
  if (samples_ < 1) throw ValidationError("samples must be at least 1");
  const auto M = static_cast<std::size_t>(local_.internal_edges());
  orders_.resize(M * static_cast<std::size_t>(samples_));
  steps_.resize(M * static_cast<std::size_t>(samples_));
  std::mt19937_64 rng(seed);
  UnionFind uf;
  for (int s = 0; s < samples_; ++s) {
    auto order = std::span(orders_).subspan(M * static_cast<std::size_t>(s), M);
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    uf.reset(static_cast<std::size_t>(local_.members));
    for (std::size_t m = 0; m < M; ++m) {
      const auto [a, b] = local_.internal[order[m]];
      const auto [keep, absorbed] = uf.unite(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
      steps_[M * static_cast<std::size_t>(s) + m] =
          keep == absorbed ? Step{static_cast<std::int32_t>(keep), -1}
                           : Step{static_cast<std::int32_t>(keep), static_cast<std::int32_t>(absorbed)};
    }
  }
}

std::span<const std::uint32_t> MonteCarloTrace::order(int sample) const {
  const auto M = static_cast<std::size_t>(internal_edges());
  return std::span(orders_).subspan(M * static_cast<std::size_t>(sample), M);
}

std::span<const MonteCarloTrace::Step> MonteCarloTrace::script(int sample) const {
  const auto M = static_cast<std::size_t>(internal_edges());
  return std::span(steps_).subspan(M * static_cast<std::size_t>(sample), M);
}

double MonteCarloTrace::evaluate(std::span<const double> y, std::span<const double> q,
                                 std::span<const double> weights, std::span<double> grad) const {
  const auto k = static_cast<std::size_t>(local_.members);
  const auto M = static_cast<std::size_t>(internal_edges());
  const bool want_grad = !grad.empty();
  assert(y.size() == k && q.size() == k && weights.size() == M + 1);

  // Per-slot cluster state: product of nonzero member y's, count of zero
  // y's, focal-escape probability, current factor.
  thread_local std::vector<double> ynz, qc, f;
  thread_local std::vector<int> yz, label, next, tail;
  ynz.resize(k), qc.resize(k), f.resize(k), yz.resize(k), label.resize(k), next.resize(k), tail.resize(k);
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  double total = 0.0;
  for (int s = 0; s < samples_; ++s) {
    ZeroAwareProduct u;
    for (std::size_t j = 0; j < k; ++j) {
      yz[j] = y[j] == 0.0 ? 1 : 0;
      ynz[j] = yz[j] ? 1.0 : y[j];
      qc[j] = q[j];
      f[j] = cluster_factor(qc[j], y[j]);
      u.mul(f[j]);
      label[j] = static_cast<int>(j);
      next[j] = -1;
      tail[j] = static_cast<int>(j);
    }

    auto flush = [&](double w) {
      if (w == 0.0) return;
      total += w * u.value();
      if (!want_grad) return;
      for (std::size_t j = 0; j < k; ++j) {
        const auto c = static_cast<std::size_t>(label[j]);
        if (qc[c] == 1.0) continue;
        double xexcl = 0.0;
        if (y[j] != 0.0) xexcl = yz[c] == 0 ? ynz[c] / y[j] : 0.0;
        else xexcl = yz[c] == 1 ? ynz[c] : 0.0;
        grad[j] += w * u.without(f[c]) * (1.0 - qc[c]) * xexcl;
      }
    };

    const auto steps = script(s);
    double w = weights[0];
    for (std::size_t m = 1; m <= M; ++m) {
      const auto& st = steps[m - 1];
      if (st.absorb < 0) {
        w += weights[m];
        continue;
      }
      flush(w);
      const auto a = static_cast<std::size_t>(st.keep);
      const auto b = static_cast<std::size_t>(st.absorb);
      u.div(f[a]);
      u.div(f[b]);
      ynz[a] *= ynz[b];
      yz[a] += yz[b];
      qc[a] *= qc[b];
      f[a] = cluster_factor(qc[a], yz[a] ? 0.0 : ynz[a]);
      u.mul(f[a]);
      if (want_grad) {
        for (int x = static_cast<int>(b); x >= 0; x = next[static_cast<std::size_t>(x)])
          label[static_cast<std::size_t>(x)] = static_cast<int>(a);
        next[static_cast<std::size_t>(tail[a])] = static_cast<int>(b);
        tail[a] = tail[b];
      }
      w = weights[m];
    }
    flush(w);
  }

  const double inv = 1.0 / samples_;
  if (want_grad)
    for (auto& g : grad) g *= inv;
  return total * inv;
}

GfResult eval_monte_carlo(const MonteCarloTrace& trace, std::span<const double> y, double p, bool with_grad) {
  const auto& local = trace.local();
  if (static_cast<int>(y.size()) != local.members) throw ValidationError("argument vector does not match neighborhood size");
  std::vector<double> q(y.size());
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = local.direct[j] ? 1.0 - p : 1.0;
  const auto weights = binomial_row(trace.internal_edges(), p);
  GfResult out;
  if (with_grad) out.grad.assign(y.size(), 0.0);
  out.value = trace.evaluate(y, q, weights, out.grad);
  return out;
}

// --- exact pattern table -----------------------------------------------------------

namespace {

// Union-find without path compression so unions can be undone in LIFO order.
class RollbackUnionFind {
 public:
  explicit RollbackUnionFind(int n) : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) const {
    while (parent_[static_cast<std::size_t>(x)] != x) x = parent_[static_cast<std::size_t>(x)];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      history_.push_back(-1);
      return false;
    }
    if (size_[static_cast<std::size_t>(a)] < size_[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    size_[static_cast<std::size_t>(a)] += size_[static_cast<std::size_t>(b)];
    history_.push_back(b);
    return true;
  }
  void undo() {
    const int b = history_.back();
    history_.pop_back();
    if (b < 0) return;
    const int a = parent_[static_cast<std::size_t>(b)];
    size_[static_cast<std::size_t>(a)] -= size_[static_cast<std::size_t>(b)];
    parent_[static_cast<std::size_t>(b)] = b;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
  std::vector<int> history_;
};

}  // namespace

ExactTable::ExactTable(LocalStructure local) : local_(std::move(local)) {
  const int k = local_.members;
  const int M = local_.internal_edges();
  if (M > 30) throw BudgetError("too many internal edges for exact enumeration");

  // Canonical key: per member, the index of its cluster among direct-bearing
  // clusters (numbered by first member), or -1.
  std::map<std::vector<std::int16_t>, std::size_t> index;
  std::vector<std::vector<std::int16_t>> keys;
  RollbackUnionFind uf(k);
  std::vector<std::int16_t> key(static_cast<std::size_t>(k));
  std::vector<int> root_label(static_cast<std::size_t>(k));
  std::vector<std::uint8_t> root_direct(static_cast<std::size_t>(k));

  auto record = [&](int occupied) {
    std::fill(root_direct.begin(), root_direct.end(), 0);
    for (int j = 0; j < k; ++j)
      if (local_.direct[static_cast<std::size_t>(j)]) root_direct[static_cast<std::size_t>(uf.find(j))] = 1;
    std::fill(root_label.begin(), root_label.end(), -1);
    std::int16_t next_label = 0;
    for (int j = 0; j < k; ++j) {
      const auto r = static_cast<std::size_t>(uf.find(j));
      if (!root_direct[r]) {
        key[static_cast<std::size_t>(j)] = -1;
        continue;
      }
      if (root_label[r] < 0) root_label[r] = next_label++;
      key[static_cast<std::size_t>(j)] = static_cast<std::int16_t>(root_label[r]);
    }
    auto [it, inserted] = index.try_emplace(key, counts_.size());
    if (inserted) {
      keys.push_back(key);
      counts_.emplace_back(static_cast<std::size_t>(M) + 1, 0.0);
    }
    counts_[it->second][static_cast<std::size_t>(occupied)] += 1.0;
  };

  auto enumerate = [&](auto&& self, int e, int occupied) -> void {
    if (e == M) {
      record(occupied);
      return;
    }
    self(self, e + 1, occupied);
    const auto [a, b] = local_.internal[static_cast<std::size_t>(e)];
    uf.unite(a, b);
    self(self, e + 1, occupied + 1);
    uf.undo();
  };
  enumerate(enumerate, 0, 0);

  for (const auto& kk : keys) {
    int clusters = 0;
    for (auto l : kk) clusters = std::max(clusters, l + 1);
    for (int c = 0; c < clusters; ++c) {
      for (int j = 0; j < k; ++j)
        if (kk[static_cast<std::size_t>(j)] == c) cluster_members_.push_back(j);
      cluster_off_.push_back(static_cast<std::uint32_t>(cluster_members_.size()));
    }
    pattern_off_.push_back(static_cast<std::uint32_t>(cluster_off_.size() - 1));
  }
}

std::vector<double> ExactTable::pattern_weights(double p) const {
  const int M = local_.internal_edges();
  std::vector<double> per_subset(static_cast<std::size_t>(M) + 1);
  for (int m = 0; m <= M; ++m) per_subset[static_cast<std::size_t>(m)] = std::pow(p, m) * std::pow(1.0 - p, M - m);
  std::vector<double> w(counts_.size(), 0.0);
  for (std::size_t t = 0; t < counts_.size(); ++t)
    for (int m = 0; m <= M; ++m) w[t] += counts_[t][static_cast<std::size_t>(m)] * per_subset[static_cast<std::size_t>(m)];
  return w;
}

double ExactTable::evaluate(std::span<const double> y, std::span<const double> q, std::span<const double> pattern_weights,
                            std::span<double> grad) const {
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  thread_local std::vector<double> fc, qcs, ynzs;
  thread_local std::vector<int> yzs;
  double total = 0.0;
  for (std::size_t t = 0; t < counts_.size(); ++t) {
    const double w = pattern_weights[t];
    if (w == 0.0) continue;
    const auto cb = pattern_off_[t], ce = pattern_off_[t + 1];
    ZeroAwareProduct u;
    fc.resize(ce - cb), qcs.resize(ce - cb), ynzs.resize(ce - cb), yzs.resize(ce - cb);
    for (auto c = cb; c < ce; ++c) {
      double qq = 1.0, ynz = 1.0;
      int yz = 0;
      for (auto x = cluster_off_[c]; x < cluster_off_[c + 1]; ++x) {
        const auto j = static_cast<std::size_t>(cluster_members_[x]);
        qq *= q[j];
        if (y[j] == 0.0) ++yz;
        else ynz *= y[j];
      }
      const double f = cluster_factor(qq, yz ? 0.0 : ynz);
      u.mul(f);
      fc[c - cb] = f, qcs[c - cb] = qq, ynzs[c - cb] = ynz, yzs[c - cb] = yz;
    }
    total += w * u.value();
    if (!want_grad) continue;
    for (auto c = cb; c < ce; ++c) {
      const auto l = c - cb;
      const double rest = u.without(fc[l]) * (1.0 - qcs[l]);
      if (rest == 0.0) continue;
      for (auto x = cluster_off_[c]; x < cluster_off_[c + 1]; ++x) {
        const auto j = static_cast<std::size_t>(cluster_members_[x]);
        double xexcl = 0.0;
        if (y[j] != 0.0) xexcl = yzs[l] == 0 ? ynzs[l] / y[j] : 0.0;
        else xexcl = yzs[l] == 1 ? ynzs[l] : 0.0;
        grad[j] += w * rest * xexcl;
      }
    }
  }
  return total;
}

// --- ReachEstimator ----------------------------------------------------------------

ReachEstimator::ReachEstimator(NeighborhoodView nb, const EstimatorOptions& opts) {
  auto local = LocalStructure::of(nb);
  const int M = local.internal_edges();
  switch (opts.kind) {
    case Estimator::exhaustive:
      if (M > opts.exact_max_internal)
        throw BudgetError("neighborhood of node " + std::to_string(nb.focal) + " has " + std::to_string(M) +
                          " internal edges, above the exhaustive limit of " + std::to_string(opts.exact_max_internal) +
                          "; use the Monte Carlo estimator");
      impl_ = ExactTable(std::move(local));
      break;
    case Estimator::monte_carlo:
      impl_ = MonteCarloTrace(std::move(local), opts.samples, opts.seed);
      break;
    case Estimator::automatic:
      if (M <= opts.exact_max_internal) impl_ = ExactTable(std::move(local));
      else impl_ = MonteCarloTrace(std::move(local), opts.samples, opts.seed);
      break;
  }
}

const LocalStructure& ReachEstimator::local() const {
  return std::visit([](const auto& impl) -> const LocalStructure& { return impl.local(); }, impl_);
}

void ReachEstimator::bind(double p) {
  if (p == p_) return;
  p_ = p;
  const auto& loc = local();
  q_.resize(static_cast<std::size_t>(loc.members));
  for (std::size_t j = 0; j < q_.size(); ++j) q_[j] = loc.direct[j] ? 1.0 - p : 1.0;
  if (const auto* table = std::get_if<ExactTable>(&impl_)) weights_ = table->pattern_weights(p);
  else weights_ = binomial_row(loc.internal_edges(), p);
}

double ReachEstimator::value(std::span<const double> y) const {
  return std::visit([&](const auto& impl) { return impl.evaluate(y, q_, weights_, {}); }, impl_);
}

double ReachEstimator::value_and_grad(std::span<const double> y, std::span<double> grad) const {
  return std::visit([&](const auto& impl) { return impl.evaluate(y, q_, weights_, grad); }, impl_);
}

}  // namespace loopmp
