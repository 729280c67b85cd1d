#include "loopmp/spectra.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>

#include "loopmp/dense.hpp"
#include "loopmp/errors.hpp"
#include "loopmp/parallel.hpp"

namespace loopmp {

void SpectralParams::validate() const {
  if (order < 0) throw ValidationError("order must be nonnegative");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be strictly positive");
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!std::isfinite(grid[k])) throw ValidationError("grid values must be finite");
    if (k > 0 && grid[k] < grid[k - 1]) throw ValidationError("grid must be sorted");
  }
}

void SpectralSolver::Systems::append(const Graph& g, NeighborhoodView nb) {
  const auto base = v.size();
  v.resize(base + nb.size(), 0.0);
  std::vector<std::int32_t> compact(nb.size(), -1);
  const auto first = coupled.size();
  auto slot = [&](NodeId node) {
    const auto local = nb.local_index(node);
    auto& c = compact[static_cast<std::size_t>(local)];
    if (c < 0) {
      c = static_cast<std::int32_t>(coupled.size() - first);
      coupled.push_back(local);
    }
    return c;
  };
  for (const auto& e : nb.edges) {
    const double w = g.edge(e.id).w;
    if (e.touches(nb.focal)) {
      v[base + static_cast<std::size_t>(nb.local_index(e.other(nb.focal)))] = w;
    } else {
      entries.push_back({slot(e.u), slot(e.v), w});
    }
  }
  diag.push_back(g.diag(nb.focal));
  member_off.push_back(v.size());
  entry_off.push_back(entries.size());
  coupled_off.push_back(coupled.size());
}

std::size_t SpectralSolver::Systems::bytes() const {
  return (member_off.capacity() + entry_off.capacity() + coupled_off.capacity()) * sizeof(std::size_t) +
         (v.capacity() + diag.capacity()) * sizeof(double) + entries.capacity() * sizeof(Entry) +
         coupled.capacity() * sizeof(std::int32_t);
}

SpectralSolver::SpectralSolver(const Graph& g, const MessageTopology& topo, int threads)
    : graph_(g), topo_(topo), threads_(threads) {
  if (topo.node_count() != g.size()) throw ValidationError("topology does not match graph");
  for (std::size_t m = 0; m < topo.message_count(); ++m) messages_.append(g, topo.reduced(m));
  for (NodeId i = 0; i < g.size(); ++i) nodes_.append(g, topo.full(i));
}

std::size_t SpectralSolver::memory_bytes() const { return messages_.bytes() + nodes_.bytes(); }

std::optional<Complex> SpectralSolver::evaluate(const Systems& sys, std::size_t k, std::span<const std::uint32_t> deps,
                                                const SpectralMessageState& state) const {
  const auto mb = sys.member_off[k];
  const auto size = static_cast<Eigen::Index>(sys.member_off[k + 1] - mb);
  const auto eb = sys.entry_off[k], ee = sys.entry_off[k + 1];
  const double self = sys.diag[k];
  if (size == 0) return Complex(self);

  // Members without internal edges decouple: each adds w^2 / (z - h).
  const auto cb = sys.coupled_off[k], ce = sys.coupled_off[k + 1];
  thread_local std::vector<std::uint8_t> is_coupled;
  is_coupled.assign(static_cast<std::size_t>(size), 0);
  for (auto c = cb; c < ce; ++c) is_coupled[static_cast<std::size_t>(sys.coupled[c])] = 1;
  Complex acc = 0.0;
  for (Eigen::Index t = 0; t < size; ++t) {
    const double w = sys.v[mb + static_cast<std::size_t>(t)];
    if (w == 0.0 || is_coupled[static_cast<std::size_t>(t)]) continue;
    const Complex d = state.z - state.h[deps[static_cast<std::size_t>(t)]];
    if (d == Complex(0.0)) return std::nullopt;
    acc += w * w / d;
  }
  if (eb == ee) return acc + self;

  // Coupled block, in scratch storage that only ever grows.
  const auto dim = static_cast<Eigen::Index>(ce - cb);
  thread_local DenseMatrix<Complex> mbuf;
  thread_local DenseVector<Complex> vbuf;
  if (mbuf.rows() < dim) {
    mbuf.resize(dim, dim);
    vbuf.resize(dim);
  }
  auto m = mbuf.topLeftCorner(dim, dim);
  auto v = vbuf.head(dim);
  auto build = [&] {
    m.setZero();
    for (Eigen::Index c = 0; c < dim; ++c) {
      const auto t = static_cast<std::size_t>(sys.coupled[cb + static_cast<std::size_t>(c)]);
      m(c, c) = state.z - state.h[deps[t]];
      v(c) = sys.v[mb + t];
    }
    for (auto x = eb; x < ee; ++x) {
      const auto& e = sys.entries[x];
      m(e.a, e.b) -= e.w;
      m(e.b, e.a) -= e.w;
    }
  };
  build();
  auto q = symmetric_bilinear_inverse<Complex>(m, v);
  if (!q) {
    build();
    q = bilinear_inverse<Complex>(m, v);
  }
  if (!q) return std::nullopt;
  *q += acc;
  return *q + self;
}

std::optional<Complex> SpectralSolver::update_message(const SpectralMessageState& state, std::size_t m) const {
  return evaluate(messages_, m, topo_.deps(m), state);
}

std::optional<Complex> SpectralSolver::node_H(const SpectralMessageState& state, NodeId i) const {
  return evaluate(nodes_, static_cast<std::size_t>(i), topo_.full_deps(i), state);
}

SpectralMessageState SpectralSolver::solve(Complex z, double tol, int max_iter, const SpectralMessageState* warm) const {
  const auto count = topo_.message_count();
  SpectralMessageState state;
  state.z = z;
  state.h = warm ? warm->h : std::vector<Complex>(count, Complex(0.0));
  if (state.h.size() != count) throw ValidationError("warm start does not match topology");

  std::vector<Complex> next(count);
  std::vector<double> delta(count);
  std::vector<std::uint8_t> singular(count);
  for (int it = 1; it <= max_iter; ++it) {
    parallel_for(count, threads_, [&](std::size_t m) {
      const auto upd = update_message(state, m);
      singular[m] = upd ? 0 : 1;
      next[m] = upd ? *upd : state.h[m];
      delta[m] = std::abs(next[m] - state.h[m]);
    });
    state.h.swap(next);
    state.iterations = it;
    state.singular = static_cast<std::size_t>(std::count(singular.begin(), singular.end(), std::uint8_t{1}));
    double change = 0.0;
    bool finite = true;
    for (double d : delta) {
      if (!std::isfinite(d)) finite = false;
      change = std::max(change, d);
    }
    if (!finite) break;
    if (change < tol) {
      state.converged = state.singular == 0;
      break;
    }
  }
  return state;
}

double SpectralSolver::density(const SpectralMessageState& state) const {
  const auto n = static_cast<std::size_t>(graph_.size());
  if (n == 0) return 0.0;
  std::vector<double> part(n, 0.0);
  parallel_for(n, threads_, [&](std::size_t i) {
    const auto h = node_H(state, static_cast<NodeId>(i));
    // A singular local system poisons the estimate rather than hiding it.
    part[i] = h ? (1.0 / (state.z - *h)).imag() : std::numeric_limits<double>::quiet_NaN();
  });
  double sum = 0.0;
  for (double v : part) sum += v;
  return -sum / (static_cast<double>(n) * std::numbers::pi);
}

DensityCurve spectral_density(const Graph& g, const MessageTopology& topo, const SpectralParams& params) {
  params.validate();
  if (topo.order() != params.order) throw ValidationError("topology was built at a different order");
  SpectralSolver solver(g, topo, params.threads);
  DensityCurve curve;
  curve.eta = params.eta;
  curve.order = params.order;
  std::optional<SpectralMessageState> prev;
  for (double x : params.grid) {
    const Complex z(x, params.eta);
    const SpectralMessageState* warm = params.warm_start && prev && prev->converged ? &*prev : nullptr;
    auto state = solver.solve(z, params.tol, params.max_iter, warm);
    curve.x.push_back(x);
    curve.rho.push_back(solver.density(state));
    curve.converged.push_back(state.converged ? 1 : 0);
    curve.iterations.push_back(state.iterations);
    prev = std::move(state);
  }
  return curve;
}

DensityCurve spectral_density(const Graph& g, const SpectralParams& params) {
  params.validate();
  TopologyOptions opts;
  opts.threads = params.threads;
  const auto topo = build_topology(g, params.order, opts);
  return spectral_density(g, topo, params);
}

}  // namespace loopmp
