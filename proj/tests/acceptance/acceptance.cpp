// One line per criterion: "[PASS] n name: detail" or "[FAIL] ...". Exit status
// is the number of failed criteria. Tolerances are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "loopmp/neighborhood.hpp"
#include "loopmp/percolation.hpp"
#include "loopmp/percolation_oracle.hpp"
#include "loopmp/reach_gf.hpp"
#include "loopmp/spectra.hpp"
#include "loopmp/spectra_oracle.hpp"
#include "support/brute.hpp"
#include "support/generators.hpp"

using namespace loopmp;

namespace {

constexpr double tree_tol = 1e-8;
constexpr double tree_seconds = 5;
constexpr double loop_tol = 1e-8;
constexpr double loop_r0_min_error = 1e-3;
constexpr double loop_seconds = 10;
constexpr int mc_samples = 10'000;
constexpr double mc_sigmas = 4;
constexpr double mc_grad_rel = 1e-6;
constexpr double mc_seconds = 30;
constexpr double sim_S_tol = 0.01;
constexpr double sim_pc_margin = 0.05;
constexpr int sim_trials = 10'000;
constexpr double sim_seconds = 300;
constexpr double spectral_tol = 1e-6;
constexpr double spectral_seconds = 30;
constexpr double l1_tol = 0.05;
constexpr double l1_seconds = 120;
constexpr double scale_seconds = 60;
constexpr double scale_linear_slack = 1.25;
constexpr double invariant_seconds = 60;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PercolationParams perc(double p, int r) {
  PercolationParams params;
  params.p = p;
  params.order = r;
  return params;
}

// Max |MP - brute| over H_i(z) at the given z values and over <s_i>.
double percolation_error(const Graph& g, int r, double p, const std::vector<double>& zs) {
  auto pi = brute::cluster_distributions(g, p);
  auto topo = build_topology(g, r);
  PercolationSolver solver(g, topo, perc(p, r));
  double err = 0.0;
  for (double z : zs) {
    auto s = solver.solve(z);
    if (!s.converged) return INFINITY;
    for (NodeId i = 0; i < g.size(); ++i)
      err = std::max(err, std::abs(solver.node_gf(s, i) - brute::gf(pi[static_cast<std::size_t>(i)], z)));
  }
  auto s = solver.solve(1.0);
  solver.solve_derivatives(s);
  auto sizes = solver.mean_cluster_size(s);
  if (!sizes.converged) return INFINITY;
  for (NodeId i = 0; i < g.size(); ++i)
    err = std::max(err, std::abs(sizes.per_node[static_cast<std::size_t>(i)] - brute::mean(pi[static_cast<std::size_t>(i)])));
  return err;
}

Outcome tree_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  testgen::Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const NodeId n = std::uniform_int_distribution<NodeId>(2, 12)(rng);
    auto g = testgen::random_tree(n, rng);
    for (double p : {0.2, 0.5, 0.8}) worst = std::max(worst, percolation_error(g, 0, p, {0.25, 0.5, 1.0}));
  }
  const double secs = seconds_since(t0);
  return {worst <= tree_tol && secs < tree_seconds,
          fmt("20 trees, max error %.3g (tol %.0e), %.2f s (limit %.0f s)", worst, tree_tol, secs, tree_seconds)};
}

Outcome triangle_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, Graph>> graphs{{"triangle", testgen::triangle()}, {"bowtie", testgen::bowtie()}};
  testgen::Rng rng(202);
  while (graphs.size() < 12) {
    auto g = testgen::triangle_tree(std::uniform_int_distribution<int>(3, 7)(rng), rng);
    // Needs at least one triangle (edges > nodes - 1) and must stay brute-forceable.
    if (g.edge_count() + 1 == static_cast<std::size_t>(g.size()) || g.edge_count() > 18) continue;
    graphs.emplace_back("triangle tree", std::move(g));
  }
  double worst_r1 = 0.0, weakest_r0 = INFINITY;
  for (const auto& [name, g] : graphs) {
    double r0 = 0.0;
    for (double p : {0.2, 0.5, 0.8}) {
      worst_r1 = std::max(worst_r1, percolation_error(g, 1, p, {0.25, 0.5, 0.75, 1.0}));
      r0 = std::max(r0, percolation_error(g, 0, p, {0.25, 0.5, 0.75, 1.0}));
    }
    weakest_r0 = std::min(weakest_r0, r0);
  }
  auto tri = testgen::triangle();
  auto topo = build_topology(tri, 1);
  const double s = mean_cluster_size(tri, topo, perc(0.5, 1)).mean;
  const double secs = seconds_since(t0);
  const bool ok = worst_r1 <= loop_tol && weakest_r0 > loop_r0_min_error && std::abs(s - 2.25) <= loop_tol &&
                  secs < loop_seconds;
  return {ok, fmt("%zu graphs, r=1 max error %.3g (tol %.0e), smallest r=0 error %.3g (must exceed %.0e), "
                  "triangle <s>=%.12g, %.2f s (limit %.0f s)",
                  graphs.size(), worst_r1, loop_tol, weakest_r0, loop_r0_min_error, s, secs, loop_seconds)};
}

Outcome monte_carlo_estimator() {
  const auto t0 = std::chrono::steady_clock::now();
  testgen::Rng rng(303);
  int neighborhoods = 0;
  double worst_z = 0.0, worst_grad = 0.0;
  while (neighborhoods < 20) {
    auto g = testgen::er_with_triangles(14, 4.0, 8, rng);
    const NodeId i = std::uniform_int_distribution<NodeId>(0, g.size() - 1)(rng);
    auto nb = build_neighborhood(g, i, std::uniform_int_distribution<int>(1, 3)(rng));
    auto local = LocalStructure::of(nb.view());
    if (local.internal_edges() == 0 || nb.edges.size() > 20) continue;
    ++neighborhoods;
    const double p = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
    const std::uint64_t seed = rng();
    MonteCarloTrace trace(local, mc_samples, seed);
    // Spread of single-sample estimates gives the standard error.
    std::vector<MonteCarloTrace> singles;
    for (int s = 0; s < mc_samples; ++s) singles.emplace_back(local, 1, mix_seed(seed, static_cast<std::uint64_t>(s) + 1));
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> y(nb.size());
      for (auto& v : y) v = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
      const double exact = eval_exhaustive(nb.view(), y, p).value;
      double sum = 0.0, sumsq = 0.0;
      for (const auto& one : singles) {
        const double v = eval_monte_carlo(one, y, p, false).value;
        sum += v;
        sumsq += v * v;
      }
      const double mean = sum / mc_samples;
      const double se = std::sqrt(std::max(0.0, sumsq / mc_samples - mean * mean) / (mc_samples - 1));
      auto est = eval_monte_carlo(trace, y, p);
      const double dev = std::abs(est.value - exact);
      worst_z = std::max(worst_z, se > 0 ? dev / se : (dev < 1e-12 ? 0.0 : INFINITY));
      // G is linear in each y_j, so a central difference is exact up to rounding.
      for (std::size_t j = 0; j < y.size(); ++j) {
        const double h = 1e-3;
        auto a = y, b = y;
        a[j] += h;
        b[j] -= h;
        const double fd = (eval_monte_carlo(trace, a, p, false).value - eval_monte_carlo(trace, b, p, false).value) / (2 * h);
        worst_grad = std::max(worst_grad, std::abs(est.grad[j] - fd) / std::max(std::abs(est.grad[j]), 1e-300));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst_z <= mc_sigmas && worst_grad <= mc_grad_rel && secs < mc_seconds,
          fmt("20 neighborhoods x 5 y, worst |MC - exact| = %.2f s.e. (limit %.0f), worst gradient rel. error %.2g "
              "(limit %.0e), %.1f s (limit %.0f s)",
              worst_z, mc_sigmas, worst_grad, mc_grad_rel, secs, mc_seconds)};
}

Outcome simulation_agreement() {
  const auto t0 = std::chrono::steady_clock::now();
  testgen::Rng rng(404);
  auto g = testgen::er_with_triangles(5000, 3.0, 1500, rng);
  std::vector<double> grid;
  for (int k = 0; k <= 50; ++k) grid.push_back(k * 0.02);
  auto sim = simulate(g, grid, sim_trials, 7);

  // Threshold by scan: where the mean size of the small clusters peaks.
  std::size_t peak = 0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (sim.points[k].small_s > sim.points[peak].small_s) peak = k;
  const double pc = grid[peak];

  auto topo = build_topology(g, 2);
  auto params = perc(0.0, 2);
  params.estimator = {Estimator::monte_carlo, 8, 11};
  PercolationSolver solver(g, topo, params);
  double worst = 0.0, worst_p = 0.0, below = 0.0, above = 0.0;
  int compared = 0, unconverged = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::abs(grid[k] - pc) <= sim_pc_margin + 1e-12) continue;
    solver.set_p(grid[k]);
    auto s = solver.solve(1.0);
    if (!s.converged) ++unconverged;
    const double diff = std::abs(solver.percolating_fraction(s) - sim.points[k].S);
    ++compared;
    (grid[k] < pc ? below : above) = std::max(grid[k] < pc ? below : above, diff);
    if (diff > worst) {
      worst = diff;
      worst_p = grid[k];
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= sim_S_tol && unconverged == 0 && secs < sim_seconds,
          fmt("n=%d m=%zu, p_c~%.2f by scan, %d p values, max |S_mp - S_sim| = %.4f at p=%.2f (tol %.2f; "
              "below p_c %.4f, above p_c %.4f), %d unconverged, 8 samples per neighborhood, %.0f s (limit %.0f s)",
              g.size(), g.edge_count(), pc, compared, worst, worst_p, sim_S_tol, below, above, unconverged, secs,
              sim_seconds)};
}

double max_density_gap(const Graph& g, int r, double eta) {
  auto eig = dense_eigenvalues(g.to_dense()).values;
  std::vector<double> x;
  for (double v = eig.front() - 1.0; v <= eig.back() + 1.0; v += 0.01) x.push_back(v);
  SpectralParams params;
  params.order = r;
  params.eta = eta;
  params.grid = x;
  params.tol = 1e-10;
  auto mp = spectral_density(g, params);
  auto ref = smoothed_density(eig, x, eta);
  double gap = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!mp.converged[k]) return INFINITY;
    gap = std::max(gap, std::abs(mp.rho[k] - ref.rho[k]));
  }
  return gap;
}

Outcome spectral_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  const double eta = 0.05;
  const double path = max_density_gap(testgen::path(50), 0, eta);
  const double tri = max_density_gap(testgen::triangle(), 1, eta);
  testgen::Rng rng(505);
  double lap = 0.0;
  for (int t = 0; t < 5; ++t) lap = std::max(lap, max_density_gap(laplacian(testgen::triangle_tree(15, rng)), 1, eta));
  const double secs = seconds_since(t0);
  const double worst = std::max({path, tri, lap});
  return {worst <= spectral_tol && secs < spectral_seconds,
          fmt("max |rho_mp - rho_eig|: P50 (r=0) %.2g, C3 (r=1) %.2g, 5 triangle-tree Laplacians (r=1) %.2g "
              "(tol %.0e), %.1f s (limit %.0f s)",
              path, tri, lap, spectral_tol, secs, spectral_seconds)};
}

Outcome spectral_accuracy() {
  const auto t0 = std::chrono::steady_clock::now();
  testgen::Rng rng(606);
  auto g = testgen::er_with_triangles(500, 4.0, 100, rng);
  const double eta = 0.05, dx = 0.01;
  auto eig = dense_eigenvalues(g.to_dense()).values;
  std::vector<double> x;
  for (double v = eig.front() - 50 * eta; v <= eig.back() + 50 * eta; v += dx) x.push_back(v);
  SpectralParams params;
  params.order = 1;
  params.eta = eta;
  params.grid = x;
  auto mp = spectral_density(g, params);
  auto ref = smoothed_density(eig, x, eta);
  double l1 = 0.0;
  int unconverged = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    l1 += std::abs(mp.rho[k] - ref.rho[k]) * dx;
    if (!mp.converged[k]) ++unconverged;
  }
  const double secs = seconds_since(t0);
  return {l1 <= l1_tol && unconverged == 0 && secs < l1_seconds,
          fmt("n=500 m=%zu, L1(rho_mp r=1, rho_eig) = %.4f (tol %.2f), %d unconverged, %.1f s (limit %.0f s)",
              g.edge_count(), l1, l1_tol, unconverged, secs, l1_seconds)};
}

Outcome scaling() {
  testgen::Rng rng(707);
  std::vector<double> per_node;
  std::string sizes;
  double big_secs = 0.0;
  bool converged = true;
  for (NodeId n : {10'000, 30'000, 100'000}) {
    auto g = testgen::er_with_triangles(n, 4.0, n / 5, rng);
    const auto t0 = std::chrono::steady_clock::now();
    auto topo = build_topology(g, 1);
    SpectralParams params;
    params.order = 1;
    params.eta = 0.05;
    params.grid = {0.5};
    SpectralSolver solver(g, topo);
    auto state = solver.solve(Complex(0.5, 0.05), params.tol, params.max_iter);
    const double rho = solver.density(state);
    const double secs = seconds_since(t0);
    converged = converged && state.converged && std::isfinite(rho);
    const double bytes = static_cast<double>(g.memory_bytes() + topo.memory_bytes() + solver.memory_bytes());
    per_node.push_back(bytes / n);
    sizes += fmt("n=%d %.0f B/node %.1f s; ", n, bytes / n, secs);
    if (n == 100'000) big_secs = secs;
  }
  const double growth = per_node.back() / per_node.front();
  return {big_secs < scale_seconds && growth <= scale_linear_slack && converged,
          fmt("%sbytes/node growth 1e4->1e5 x%.3f (limit %.2f), 1e5 run %.1f s (limit %.0f s)", sizes.c_str(), growth,
              scale_linear_slack, big_secs, scale_seconds)};
}

Outcome invariants() {
  const auto t0 = std::chrono::steady_clock::now();
  testgen::Rng rng(808);
  int failures = 0;
  std::string first;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok && failures++ == 0) first = what;
  };

  // G(1) = 1 for both estimators.
  for (int t = 0; t < 50; ++t) {
    auto g = testgen::er_with_triangles(20, 4.0, 10, rng);
    const NodeId i = std::uniform_int_distribution<NodeId>(0, g.size() - 1)(rng);
    auto nb = build_neighborhood(g, i, std::uniform_int_distribution<int>(0, 3)(rng));
    const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::vector<double> ones(nb.size(), 1.0);
    ReachEstimator mc(nb.view(), {Estimator::monte_carlo, 8, rng()});
    mc.bind(p);
    expect(std::abs(mc.value(ones) - 1.0) <= 1e-12, "Monte Carlo G(1) != 1");
    if (LocalStructure::of(nb.view()).internal_edges() <= 20) {
      ReachEstimator ex(nb.view(), {Estimator::exhaustive});
      ex.bind(p);
      expect(std::abs(ex.value(ones) - 1.0) <= 1e-12, "exact G(1) != 1");
    }
  }

  // Message bounds, S bounds, determinism and trace reuse.
  for (int t = 0; t < 6; ++t) {
    auto g = testgen::er_with_triangles(120, 4.0, 40, rng);
    const int r = t % 3;
    auto topo = build_topology(g, r);
    const double p = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    auto params = perc(p, r);
    params.estimator = {Estimator::monte_carlo, 8, rng()};
    PercolationSolver a(g, topo, params), b(g, topo, params);
    for (double z : {0.3, 0.8, 1.0}) {
      auto s = a.solve(z);
      for (double h : s.h) expect(h >= 0.0 && h <= 1.0, "message outside [0,1]");
    }
    auto sa = a.solve(1.0), sb = b.solve(1.0);
    a.solve_derivatives(sa);
    b.solve_derivatives(sb);
    const double Sa = a.percolating_fraction(sa);
    expect(Sa >= 0.0 && Sa <= 1.0, "S outside [0,1]");
    expect(Sa == b.percolating_fraction(sb), "S differs under a fixed seed");
    auto ca = a.mean_cluster_size(sa), cb = b.mean_cluster_size(sb);
    expect(ca.converged == cb.converged && (!ca.converged || ca.mean == cb.mean), "<s> differs under a fixed seed");
    // The sampled traces are replayed on every sweep: restarting from the
    // fixed point reproduces it in one sweep.
    if (sa.converged) {
      auto again = a.solve(1.0, &sa);
      double drift = 0.0;
      for (std::size_t m = 0; m < sa.h.size(); ++m) drift = std::max(drift, std::abs(again.h[m] - sa.h[m]));
      expect(again.converged && again.iterations == 1 && drift < params.tol, "replayed traces drift at the fixed point");
    }
  }

  // Density nonnegativity and normalization.
  for (int t = 0; t < 4; ++t) {
    auto g = t % 2 ? laplacian(testgen::er_with_triangles(40, 3.0, 10, rng)) : testgen::er_with_triangles(40, 3.0, 10, rng);
    const double eta = 0.05;
    auto eig = dense_eigenvalues(g.to_dense()).values;
    std::vector<double> x;
    for (double v = eig.front() - 50 * eta; v <= eig.back() + 50 * eta; v += 0.01) x.push_back(v);
    SpectralParams params;
    params.order = 1;
    params.eta = eta;
    params.grid = x;
    auto c = spectral_density(g, params);
    double area = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (c.converged[k]) expect(c.rho[k] >= -1e-9, "negative density");
      if (k) area += 0.5 * (c.rho[k] + c.rho[k - 1]) * (x[k] - x[k - 1]);
    }
    expect(area >= 0.97 && area <= 1.0, fmt("density integrates to %.4f", area));
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < invariant_seconds,
          fmt("%d violations%s%s, %.1f s (limit %.0f s)", failures, failures ? ", first: " : "", first.c_str(), secs,
              invariant_seconds)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"tree exactness (percolation, r=0)", tree_exactness},
      {"r=1 exactness on triangle-bearing graphs", triangle_exactness},
      {"Monte Carlo estimator vs exhaustive", monte_carlo_estimator},
      {"percolation vs simulation at scale (r=2)", simulation_agreement},
      {"spectral exactness", spectral_exactness},
      {"spectral accuracy on a loopy graph (r=1)", spectral_accuracy},
      {"scaling to 1e5 nodes", scaling},
      {"invariant suite", invariants},
  };
  // Optional argument: run only criterion N.
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only && static_cast<int>(k) + 1 != only) continue;
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::printf("[%s] %zu %s: %s\n", out.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), out.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
