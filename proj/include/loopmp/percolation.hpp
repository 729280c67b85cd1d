#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "loopmp/graph.hpp"
#include "loopmp/neighborhood.hpp"
#include "loopmp/reach_gf.hpp"

namespace loopmp {

struct PercolationParams {
  double p = 0.5;
  int order = 1;
  double z = 1.0;
  double tol = 1e-8;
  int max_iter = 10'000;
  EstimatorOptions estimator{};
  // h <- (1 - damping) * update + damping * h
  double damping = 0.0;
  // Starting value of every message.
  double initial = 0.5;
  int threads = 0;

  void validate() const;
};

// Messages H_{i<-j}(z), in MessageTopology order.
struct PercMessageState {
  double z = 1.0;
  std::vector<double> h;
  int iterations = 0;
  bool converged = false;

  // H'_{i<-j}(1); filled by solve_derivatives.
  std::vector<double> hprime;
  int derivative_iterations = 0;
  bool derivative_converged = false;
};

struct ClusterSizes {
  std::vector<double> per_node;
  double mean = 0.0;
  bool converged = false;
};

// Bond-percolation message passing on a fixed topology. Estimators (exact
// tables or Monte Carlo traces) are built once in the constructor and reused
// for every sweep and every p.
class PercolationSolver {
 public:
  PercolationSolver(const Graph& g, const MessageTopology& topo, const PercolationParams& params);

  const PercolationParams& params() const noexcept { return params_; }
  void set_p(double p);

  // Jacobi sweeps of h_{i<-j} <- z G_{i<-j}(h_{j<-.}) from params.initial, or
  // from `warm` when given.
  PercMessageState solve(double z, const PercMessageState* warm = nullptr) const;
  PercMessageState solve() const { return solve(params_.z); }

  // Linear iteration for H'_{i<-j}(1). `state` must be solved at z = 1.
  void solve_derivatives(PercMessageState& state) const;

  // H_i(z) = z G_i(h_{i<-.}(z)) at the state's z.
  double node_gf(const PercMessageState& state, NodeId i) const;
  // S = 1 - mean_i H_i(1), clamped to [0,1].
  double percolating_fraction(const PercMessageState& state) const;
  // <s_i> = H_i(1) + sum_j H'_{i<-j}(1) d_j G_i.
  ClusterSizes mean_cluster_size(const PercMessageState& state) const;

  std::size_t exact_neighborhoods() const;
  std::size_t sampled_neighborhoods() const;

 private:
  void gather(std::span<const std::uint32_t> deps, const std::vector<double>& values, std::vector<double>& out) const;

  const Graph& graph_;
  const MessageTopology& topo_;
  PercolationParams params_;
  std::vector<ReachEstimator> message_est_;
  std::vector<ReachEstimator> node_est_;
};

// One-shot conveniences over PercolationSolver.
PercMessageState solve_messages(const Graph& g, const MessageTopology& topo, const PercolationParams& params);
void solve_message_derivatives(const Graph& g, const MessageTopology& topo, const PercolationParams& params,
                               PercMessageState& state);
double percolating_fraction(const Graph& g, const MessageTopology& topo, const PercolationParams& params);
ClusterSizes mean_cluster_size(const Graph& g, const MessageTopology& topo, const PercolationParams& params);
double node_generating_function(const Graph& g, const MessageTopology& topo, const PercolationParams& params, NodeId i);

}  // namespace loopmp
