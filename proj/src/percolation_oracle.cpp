#include "loopmp/percolation_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "loopmp/errors.hpp"
#include "loopmp/parallel.hpp"
#include "loopmp/reach_gf.hpp"

namespace loopmp {

std::vector<ClusterDistribution> exhaustive_distributions(const Graph& g, double p, int edge_budget) {
  const auto m = static_cast<int>(g.edge_count());
  if (m > edge_budget || m > 30)
    throw BudgetError("graph has " + std::to_string(m) + " edges, above the enumeration budget of " +
                      std::to_string(edge_budget));
  const auto n = static_cast<std::size_t>(g.size());
  std::vector<ClusterDistribution> out(n, ClusterDistribution(n + 1, 0.0));
  std::vector<double> pw(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) pw[static_cast<std::size_t>(k)] = std::pow(p, k) * std::pow(1.0 - p, m - k);

  const auto edges = g.edges();
  UnionFind uf;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    uf.reset(n);
    for (int b = 0; b < m; ++b)
      if (mask >> b & 1u) uf.unite(static_cast<std::uint32_t>(edges[static_cast<std::size_t>(b)].u),
                                   static_cast<std::uint32_t>(edges[static_cast<std::size_t>(b)].v));
    const double w = pw[static_cast<std::size_t>(std::popcount(mask))];
    for (std::size_t i = 0; i < n; ++i) out[i][uf.cluster_size(static_cast<std::uint32_t>(i))] += w;
  }
  return out;
}

ClusterDistribution exhaustive_distribution(const Graph& g, double p, NodeId i, int edge_budget) {
  if (i < 0 || i >= g.size()) throw ValidationError("node out of range");
  return exhaustive_distributions(g, p, edge_budget)[static_cast<std::size_t>(i)];
}

double distribution_gf(const ClusterDistribution& pi, double z) {
  double acc = 0.0;
  for (std::size_t s = pi.size(); s-- > 1;) acc = (acc + pi[s]) * z;
  return acc;
}

double distribution_mean(const ClusterDistribution& pi) {
  double acc = 0.0;
  for (std::size_t s = 1; s < pi.size(); ++s) acc += static_cast<double>(s) * pi[s];
  return acc;
}

namespace {

// Binomial weights over occupation number with negligible tails trimmed.
struct Window {
  std::size_t first = 0;
  std::vector<double> w;
};

Window binomial_window(int m, double p) {
  auto row = binomial_row(m, p);
  const double peak = *std::max_element(row.begin(), row.end());
  std::size_t b = 0, e = row.size();
  while (b < e && row[b] < 1e-18 * peak) ++b;
  while (e > b && row[e - 1] < 1e-18 * peak) --e;
  return {b, std::vector<double>(row.begin() + static_cast<std::ptrdiff_t>(b), row.begin() + static_cast<std::ptrdiff_t>(e))};
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe summarize(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

}  // namespace

SimEstimate simulate(const Graph& g, const std::vector<double>& p_grid, int trials, std::uint64_t seed, int threads) {
  if (trials < 1) throw ValidationError("trials must be at least 1");
  for (double p : p_grid)
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0,1]");
  const auto n = static_cast<std::size_t>(g.size());
  const auto m = g.edge_count();
  const auto P = p_grid.size();
  const auto T = static_cast<std::size_t>(trials);

  std::vector<Window> windows;
  windows.reserve(P);
  for (double p : p_grid) windows.push_back(binomial_window(static_cast<int>(m), p));

  // Per trial and p: largest fraction, all-cluster mean, small-cluster mean.
  std::vector<double> largest(T * P), mean_all(T * P), mean_small(T * P);
  const double dn = static_cast<double>(n);

  parallel_for(T, threads, [&](std::size_t t) {
    thread_local std::vector<std::uint32_t> order;
    thread_local std::vector<double> q_largest, q_all, q_small;
    thread_local UnionFind uf;
    order.resize(m);
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::mt19937_64 rng(mix_seed(seed, t));
    std::shuffle(order.begin(), order.end(), rng);

    q_largest.resize(m + 1), q_all.resize(m + 1), q_small.resize(m + 1);
    uf.reset(n);
    double big = n ? 1.0 : 0.0;
    double sumsq = dn;
    auto record = [&](std::size_t k) {
      q_largest[k] = n ? big / dn : 0.0;
      q_all[k] = n ? sumsq / dn : 0.0;
      q_small[k] = dn > big ? (sumsq - big * big) / (dn - big) : 0.0;
    };
    record(0);
    for (std::size_t k = 0; k < m; ++k) {
      const auto& e = g.edge(static_cast<EdgeId>(order[k]));
      const auto a = uf.find(static_cast<std::uint32_t>(e.u));
      const auto b = uf.find(static_cast<std::uint32_t>(e.v));
      if (a != b) {
        const double sa = uf.cluster_size(a), sb = uf.cluster_size(b);
        uf.unite(a, b);
        sumsq += 2.0 * sa * sb;
        big = std::max(big, sa + sb);
      }
      record(k + 1);
    }
    for (std::size_t c = 0; c < P; ++c) {
      const auto& win = windows[c];
      double l = 0.0, a = 0.0, s = 0.0;
      for (std::size_t x = 0; x < win.w.size(); ++x) {
        const auto k = win.first + x;
        l += win.w[x] * q_largest[k];
        a += win.w[x] * q_all[k];
        s += win.w[x] * q_small[k];
      }
      largest[t * P + c] = l;
      mean_all[t * P + c] = a;
      mean_small[t * P + c] = s;
    }
  });

  SimEstimate est;
  est.trials = trials;
  est.seed = seed;
  std::vector<double> col(T);
  auto column = [&](const std::vector<double>& src, std::size_t c) {
    for (std::size_t t = 0; t < T; ++t) col[t] = src[t * P + c];
    return summarize(col);
  };
  for (std::size_t c = 0; c < P; ++c) {
    SimPoint pt;
    pt.p = p_grid[c];
    auto l = column(largest, c);
    auto a = column(mean_all, c);
    auto s = column(mean_small, c);
    pt.S = std::clamp(l.mean, 0.0, 1.0);
    pt.S_se = l.se;
    pt.mean_s = a.mean;
    pt.mean_s_se = a.se;
    pt.small_s = s.mean;
    pt.small_s_se = s.se;
    est.points.push_back(pt);
  }
  return est;
}

}  // namespace loopmp
