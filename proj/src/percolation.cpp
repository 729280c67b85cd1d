#include "loopmp/percolation.hpp"

#include <algorithm>
#include <cmath>

#include "loopmp/errors.hpp"
#include "loopmp/parallel.hpp"

namespace loopmp {

void PercolationParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0,1]");
  if (!(z >= 0.0 && z <= 1.0)) throw ValidationError("z must lie in [0,1]");
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");
  if (order < 0) throw ValidationError("order must be nonnegative");
  if (estimator.samples < 1) throw ValidationError("samples must be at least 1");
  if (!(damping >= 0.0 && damping < 1.0)) throw ValidationError("damping must lie in [0,1)");
}

PercolationSolver::PercolationSolver(const Graph& g, const MessageTopology& topo, const PercolationParams& params)
    : graph_(g), topo_(topo), params_(params) {
  params_.validate();
  if (topo.order() != params.order) throw ValidationError("topology was built at a different order");
  if (topo.node_count() != g.size()) throw ValidationError("topology does not match graph");

  const auto messages = topo.message_count();
  const auto n = static_cast<std::size_t>(g.size());
  message_est_.resize(messages);
  node_est_.resize(n);
  parallel_for(messages + n, params_.threads, [&](std::size_t k) {
    auto opts = params_.estimator;
    opts.seed = mix_seed(params_.estimator.seed, k);
    if (k < messages) message_est_[k] = ReachEstimator(topo.reduced(k), opts);
    else node_est_[k - messages] = ReachEstimator(topo.full(static_cast<NodeId>(k - messages)), opts);
  });
  set_p(params_.p);
}

void PercolationSolver::set_p(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0,1]");
  params_.p = p;
  parallel_for(message_est_.size() + node_est_.size(), params_.threads, [&](std::size_t k) {
    if (k < message_est_.size()) message_est_[k].bind(p);
    else node_est_[k - message_est_.size()].bind(p);
  });
}

void PercolationSolver::gather(std::span<const std::uint32_t> deps, const std::vector<double>& values,
                               std::vector<double>& out) const {
  out.resize(deps.size());
  for (std::size_t t = 0; t < deps.size(); ++t) out[t] = values[deps[t]];
}

PercMessageState PercolationSolver::solve(double z, const PercMessageState* warm) const {
  if (!(z >= 0.0 && z <= 1.0)) throw ValidationError("z must lie in [0,1]");
  const auto messages = topo_.message_count();
  PercMessageState state;
  state.z = z;
  state.h = warm ? warm->h : std::vector<double>(messages, params_.initial);
  if (state.h.size() != messages) throw ValidationError("warm start does not match topology");

  std::vector<double> next(messages);
  std::vector<double> delta(messages);
  for (int it = 1; it <= params_.max_iter; ++it) {
    parallel_for(messages, params_.threads, [&](std::size_t m) {
      thread_local std::vector<double> y;
      gather(topo_.deps(m), state.h, y);
      double v = z * message_est_[m].value(y);
      if (params_.damping > 0.0) v = (1.0 - params_.damping) * v + params_.damping * state.h[m];
      v = std::clamp(v, 0.0, 1.0);
      next[m] = v;
      delta[m] = std::abs(v - state.h[m]);
    });
    state.h.swap(next);
    state.iterations = it;
    const double change = messages ? *std::max_element(delta.begin(), delta.end()) : 0.0;
    if (change < params_.tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

void PercolationSolver::solve_derivatives(PercMessageState& state) const {
  if (state.z != 1.0) throw ValidationError("derivatives require messages solved at z = 1");
  const auto messages = topo_.message_count();

  // The Jacobian of the message map is fixed once h is; store it per dependency.
  std::vector<std::size_t> off(messages + 1, 0);
  for (std::size_t m = 0; m < messages; ++m) off[m + 1] = off[m] + topo_.deps(m).size();
  std::vector<double> jac(off.back());
  parallel_for(messages, params_.threads, [&](std::size_t m) {
    thread_local std::vector<double> y;
    gather(topo_.deps(m), state.h, y);
    message_est_[m].value_and_grad(y, std::span(jac).subspan(off[m], y.size()));
  });

  auto& hp = state.hprime;
  hp = state.h;
  std::vector<double> next(messages);
  std::vector<double> delta(messages);
  state.derivative_converged = false;
  state.derivative_iterations = 0;
  for (int it = 1; it <= params_.max_iter; ++it) {
    parallel_for(messages, params_.threads, [&](std::size_t m) {
      const auto deps = topo_.deps(m);
      double v = state.h[m];
      for (std::size_t t = 0; t < deps.size(); ++t) v += jac[off[m] + t] * hp[deps[t]];
      next[m] = v;
      delta[m] = std::abs(v - hp[m]) / std::max(1.0, std::abs(v));
    });
    hp.swap(next);
    state.derivative_iterations = it;
    bool finite = true;
    for (double v : hp) {
      if (!std::isfinite(v) || v > 1e15) {
        finite = false;
        break;
      }
    }
    if (!finite) break;
    const double change = messages ? *std::max_element(delta.begin(), delta.end()) : 0.0;
    if (change < params_.tol) {
      state.derivative_converged = true;
      break;
    }
  }
}

double PercolationSolver::node_gf(const PercMessageState& state, NodeId i) const {
  thread_local std::vector<double> y;
  gather(topo_.full_deps(i), state.h, y);
  return state.z * node_est_[static_cast<std::size_t>(i)].value(y);
}

double PercolationSolver::percolating_fraction(const PercMessageState& state) const {
  if (state.z != 1.0) throw ValidationError("percolating fraction requires messages solved at z = 1");
  const auto n = static_cast<std::size_t>(graph_.size());
  if (n == 0) return 0.0;
  std::vector<double> hi(n);
  parallel_for(n, params_.threads, [&](std::size_t i) { hi[i] = node_gf(state, static_cast<NodeId>(i)); });
  double sum = 0.0;
  for (double v : hi) sum += v;
  return std::clamp(1.0 - sum / static_cast<double>(n), 0.0, 1.0);
}

ClusterSizes PercolationSolver::mean_cluster_size(const PercMessageState& state) const {
  if (state.z != 1.0 || state.hprime.size() != state.h.size())
    throw ValidationError("mean cluster size requires a derivative solve at z = 1");
  const auto n = static_cast<std::size_t>(graph_.size());
  ClusterSizes out;
  out.per_node.resize(n);
  parallel_for(n, params_.threads, [&](std::size_t i) {
    thread_local std::vector<double> y, grad;
    const auto deps = topo_.full_deps(static_cast<NodeId>(i));
    gather(deps, state.h, y);
    grad.resize(y.size());
    double s = node_est_[i].value_and_grad(y, grad);
    for (std::size_t t = 0; t < deps.size(); ++t) s += state.hprime[deps[t]] * grad[t];
    out.per_node[i] = s;
  });
  double sum = 0.0;
  for (double v : out.per_node) sum += v;
  out.mean = n ? sum / static_cast<double>(n) : 0.0;
  out.converged = state.converged && state.derivative_converged;
  return out;
}

std::size_t PercolationSolver::exact_neighborhoods() const {
  return static_cast<std::size_t>(std::count_if(message_est_.begin(), message_est_.end(), [](const auto& e) { return e.exact(); }) +
                                  std::count_if(node_est_.begin(), node_est_.end(), [](const auto& e) { return e.exact(); }));
}

std::size_t PercolationSolver::sampled_neighborhoods() const {
  return message_est_.size() + node_est_.size() - exact_neighborhoods();
}

PercMessageState solve_messages(const Graph& g, const MessageTopology& topo, const PercolationParams& params) {
  return PercolationSolver(g, topo, params).solve();
}

void solve_message_derivatives(const Graph& g, const MessageTopology& topo, const PercolationParams& params,
                               PercMessageState& state) {
  PercolationSolver(g, topo, params).solve_derivatives(state);
}

double percolating_fraction(const Graph& g, const MessageTopology& topo, const PercolationParams& params) {
  PercolationSolver solver(g, topo, params);
  return solver.percolating_fraction(solver.solve(1.0));
}

ClusterSizes mean_cluster_size(const Graph& g, const MessageTopology& topo, const PercolationParams& params) {
  PercolationSolver solver(g, topo, params);
  auto state = solver.solve(1.0);
  solver.solve_derivatives(state);
  return solver.mean_cluster_size(state);
}

double node_generating_function(const Graph& g, const MessageTopology& topo, const PercolationParams& params, NodeId i) {
  PercolationSolver solver(g, topo, params);
  return solver.node_gf(solver.solve(params.z), i);
}

}  // namespace loopmp
