#include <cmath>
#include <random>

#include "doctest.h"
#include "loopmp/errors.hpp"
#include "loopmp/neighborhood.hpp"
#include "loopmp/percolation.hpp"
#include "support/brute.hpp"
#include "support/generators.hpp"

using namespace loopmp;

namespace {

PercolationParams at(double p, int r) {
  PercolationParams params;
  params.p = p;
  params.order = r;
  return params;
}

}  // namespace

TEST_CASE("trees pin every message to one at z=1") {
  testgen::Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    auto g = testgen::random_tree(12, rng);
    auto topo = build_topology(g, 0);
    for (double p : {0.1, 0.5, 0.99}) {
      auto s = solve_messages(g, topo, at(p, 0));
      CHECK(s.converged);
      for (double h : s.h) CHECK(h == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(percolating_fraction(g, topo, at(p, 0)) < 1e-8);
    }
  }
}

TEST_CASE("triangle at r=1 settles in one sweep") {
  auto g = testgen::triangle();
  auto topo = build_topology(g, 1);
  auto s = solve_messages(g, topo, at(0.7, 1));
  CHECK(s.converged);
  CHECK(s.iterations <= 2);
  for (double h : s.h) CHECK(h == 1.0);
  for (double p : {0.1, 0.5, 0.9}) CHECK(percolating_fraction(g, topo, at(p, 1)) == 0.0);
}

TEST_CASE("K2") {
  auto g = load_edge_list("0 1");
  auto topo = build_topology(g, 1);
  auto params = at(0.5, 1);
  params.z = 0.5;
  auto s = solve_messages(g, topo, params);
  for (double h : s.h) CHECK(h == doctest::Approx(0.5));
  for (double p : {0.0, 0.3, 0.8}) {
    auto sizes = mean_cluster_size(g, topo, at(p, 1));
    CHECK(sizes.converged);
    CHECK(sizes.mean == doctest::Approx(1 + p).epsilon(1e-12));
    for (double z : {0.2, 0.6, 1.0}) {
      auto pz = at(p, 1);
      pz.z = z;
      CHECK(node_generating_function(g, topo, pz, 0) == doctest::Approx(z * (1 - p) + p * z * z).epsilon(1e-12));
    }
  }
}

TEST_CASE("triangle mean cluster size") {
  auto g = testgen::triangle();
  auto topo = build_topology(g, 1);
  auto sizes = mean_cluster_size(g, topo, at(0.5, 1));
  CHECK(sizes.converged);
  for (double s : sizes.per_node) CHECK(s == doctest::Approx(2.25).epsilon(1e-12));
  // Tree approximation misses the loop.
  auto topo0 = build_topology(g, 0);
  CHECK(std::abs(mean_cluster_size(g, topo0, at(0.5, 0)).mean - 2.25) > 1e-3);
}

TEST_CASE("p = 0") {
  testgen::Rng rng(4);
  auto g = testgen::er_with_triangles(30, 3.0, 10, rng);
  for (int r : {0, 1, 2}) {
    auto topo = build_topology(g, r);
    CHECK(percolating_fraction(g, topo, at(0.0, r)) == 0.0);
    auto sizes = mean_cluster_size(g, topo, at(0.0, r));
    for (double s : sizes.per_node) CHECK(s == doctest::Approx(1.0));
  }
}

TEST_CASE("isolated nodes") {
  Graph g(3, {{0, 1, 1.0}});
  auto topo = build_topology(g, 1);
  for (double z : {0.0, 0.3, 1.0}) {
    auto params = at(0.4, 1);
    params.z = z;
    CHECK(node_generating_function(g, topo, params, 2) == doctest::Approx(z));
  }
}

TEST_CASE("exactness on triangle trees") {
  testgen::Rng rng(6);
  for (int t = 0; t < 5; ++t) {
    auto g = testgen::triangle_tree(6, rng);
    if (g.edge_count() > 16) continue;
    auto topo = build_topology(g, 1);
    for (double p : {0.3, 0.7}) {
      auto pi = brute::cluster_distributions(g, p);
      PercolationSolver solver(g, topo, at(p, 1));
      for (double z : {0.25, 0.5, 0.75, 1.0}) {
        auto s = solver.solve(z);
        REQUIRE(s.converged);
        for (NodeId i = 0; i < g.size(); ++i)
          CHECK(solver.node_gf(s, i) == doctest::Approx(brute::gf(pi[static_cast<std::size_t>(i)], z)).epsilon(1e-9));
      }
      auto s = solver.solve(1.0);
      solver.solve_derivatives(s);
      auto sizes = solver.mean_cluster_size(s);
      for (NodeId i = 0; i < g.size(); ++i)
        CHECK(sizes.per_node[static_cast<std::size_t>(i)] ==
              doctest::Approx(brute::mean(pi[static_cast<std::size_t>(i)])).epsilon(1e-9));
    }
  }
}

TEST_CASE("4-cycle needs r=2") {
  auto g = testgen::cycle(4);
  auto pi = brute::cluster_distributions(g, 0.5);
  auto t2 = build_topology(g, 2);
  auto t1 = build_topology(g, 1);
  CHECK(mean_cluster_size(g, t2, at(0.5, 2)).mean == doctest::Approx(brute::mean(pi[0])).epsilon(1e-9));
  CHECK(std::abs(mean_cluster_size(g, t1, at(0.5, 1)).mean - brute::mean(pi[0])) > 1e-3);
}

TEST_CASE("messages stay in [0,1] and S in [0,1]") {
  testgen::Rng rng(8);
  for (int t = 0; t < 5; ++t) {
    auto g = testgen::er_with_triangles(80, 4.0, 30, rng);
    for (int r : {0, 1, 2}) {
      auto topo = build_topology(g, r);
      for (double p : {0.2, 0.5, 0.8}) {
        auto params = at(p, r);
        params.estimator.kind = Estimator::monte_carlo;
        PercolationSolver solver(g, topo, params);
        for (double z : {0.3, 1.0}) {
          auto s = solver.solve(z);
          for (double h : s.h) {
            CHECK(h >= 0.0);
            CHECK(h <= 1.0);
          }
        }
        auto s = solver.solve(1.0);
        const double S = solver.percolating_fraction(s);
        CHECK(S >= 0.0);
        CHECK(S <= 1.0);
        solver.solve_derivatives(s);
        auto sizes = solver.mean_cluster_size(s);
        // <s_i> counts finite clusters only, so it is bounded by H_i(1),
        // which is 1 below the transition.
        if (sizes.converged) {
          for (NodeId i = 0; i < g.size(); ++i) {
            const double v = sizes.per_node[static_cast<std::size_t>(i)];
            CHECK(v >= solver.node_gf(s, i) - 1e-9);
            if (S < 1e-12) CHECK(v >= 1.0 - 1e-9);
          }
        }
      }
    }
  }
}

TEST_CASE("a giant cluster appears on a dense graph") {
  testgen::Rng rng(10);
  auto g = testgen::er_with_triangles(300, 4.0, 50, rng);
  auto topo = build_topology(g, 1);
  CHECK(percolating_fraction(g, topo, at(0.9, 1)) > 0.5);
  CHECK(percolating_fraction(g, topo, at(0.05, 1)) < 1e-6);
}

TEST_CASE("deterministic under a fixed seed") {
  testgen::Rng rng(12);
  auto g = testgen::er_with_triangles(150, 5.0, 80, rng);
  auto topo = build_topology(g, 2);
  auto params = at(0.6, 2);
  params.estimator = {Estimator::monte_carlo, 8, 99};
  auto run = [&](int threads) {
    auto p = params;
    p.threads = threads;
    PercolationSolver solver(g, topo, p);
    auto s = solver.solve(1.0);
    solver.solve_derivatives(s);
    return std::pair{solver.percolating_fraction(s), solver.mean_cluster_size(s).mean};
  };
  auto a = run(1), b = run(1), c = run(3);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first == c.first);
  CHECK(a.second == c.second);
  params.estimator.seed = 100;
  PercolationSolver other(g, topo, params);
  CHECK(other.percolating_fraction(other.solve(1.0)) != a.first);
}

TEST_CASE("a converged state is a fixed point of the replayed traces") {
  // Reusing the same samples on every sweep means restarting from the
  // answer changes nothing.
  testgen::Rng rng(14);
  auto g = testgen::er_with_triangles(150, 5.0, 80, rng);
  auto topo = build_topology(g, 2);
  auto params = at(0.7, 2);
  params.estimator = {Estimator::monte_carlo, 8, 5};
  PercolationSolver solver(g, topo, params);
  auto s = solver.solve(1.0);
  REQUIRE(s.converged);
  auto again = solver.solve(1.0, &s);
  CHECK(again.iterations == 1);
  for (std::size_t m = 0; m < s.h.size(); ++m) CHECK(std::abs(again.h[m] - s.h[m]) < 1e-8);
}

TEST_CASE("damping reaches the same fixed point") {
  testgen::Rng rng(16);
  auto g = testgen::er_with_triangles(100, 4.0, 40, rng);
  auto topo = build_topology(g, 1);
  auto plain = solve_messages(g, topo, at(0.6, 1));
  auto damped_params = at(0.6, 1);
  damped_params.damping = 0.5;
  auto damped = solve_messages(g, topo, damped_params);
  REQUIRE(plain.converged);
  REQUIRE(damped.converged);
  for (std::size_t m = 0; m < plain.h.size(); ++m) CHECK(damped.h[m] == doctest::Approx(plain.h[m]).epsilon(1e-6));
}

TEST_CASE("parameter validation") {
  auto g = testgen::triangle();
  auto topo = build_topology(g, 1);
  CHECK_THROWS_AS(solve_messages(g, topo, at(1.5, 1)), ValidationError);
  CHECK_THROWS_AS(solve_messages(g, topo, at(0.5, 2)), ValidationError);
  auto bad = at(0.5, 1);
  bad.tol = 0.0;
  CHECK_THROWS_AS(solve_messages(g, topo, bad), ValidationError);
}
