#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "loopmp/graph.hpp"
#include "loopmp/union_find.hpp"

namespace loopmp {

// pi[s] is the probability that the node's cluster has exactly s nodes
// (pi[0] is unused and zero).
using ClusterDistribution = std::vector<double>;

// Enumerates all 2^m occupation configurations. Throws BudgetError above
// `edge_budget` edges.
ClusterDistribution exhaustive_distribution(const Graph& g, double p, NodeId i, int edge_budget = 20);
// Same enumeration, every node at once.
std::vector<ClusterDistribution> exhaustive_distributions(const Graph& g, double p, int edge_budget = 20);

// sum_s pi(s) z^s
double distribution_gf(const ClusterDistribution& pi, double z);
// sum_s s pi(s)
double distribution_mean(const ClusterDistribution& pi);

struct SimPoint {
  double p = 0.0;
  // Largest-cluster fraction.
  double S = 0.0;
  double S_se = 0.0;
  // (1/n) sum_i s_i over all clusters.
  double mean_s = 0.0;
  double mean_s_se = 0.0;
  // Same average restricted to nodes outside the largest cluster; peaks at
  // the transition.
  double small_s = 0.0;
  double small_s_se = 0.0;
};

struct SimEstimate {
  std::vector<SimPoint> points;
  int trials = 0;
  std::uint64_t seed = 0;
};

// Newman-Ziff: each trial adds the edges in a random order tracking clusters
// with union-find, then observables at fixed p are binomial convolutions of
// the per-occupation-number values. Per-trial RNG streams derive from seed,
// so results do not depend on the thread count.
SimEstimate simulate(const Graph& g, const std::vector<double>& p_grid, int trials, std::uint64_t seed, int threads = 0);

}  // namespace loopmp
