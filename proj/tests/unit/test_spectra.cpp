#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "loopmp/errors.hpp"
#include "loopmp/spectra.hpp"
#include "loopmp/spectra_oracle.hpp"
#include "support/generators.hpp"

using namespace loopmp;

namespace {

std::vector<double> grid(double a, double b, double step) {
  std::vector<double> g;
  for (double x = a; x <= b + 1e-12; x += step) g.push_back(x);
  return g;
}

double max_gap(const DensityCurve& a, const DensityCurve& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.rho.size(); ++k) m = std::max(m, std::abs(a.rho[k] - b.rho[k]));
  return m;
}

DensityCurve oracle(const Graph& g, const std::vector<double>& x, double eta) {
  return smoothed_density(dense_eigenvalues(g.to_dense()).values, x, eta);
}

SpectralParams params(int r, double eta, std::vector<double> x) {
  SpectralParams p;
  p.order = r;
  p.eta = eta;
  p.grid = std::move(x);
  return p;
}

}  // namespace

TEST_CASE("leaf and K2 messages") {
  auto g = load_edge_list("0 1");
  auto topo = build_topology(g, 0);
  SpectralSolver solver(g, topo);
  SpectralMessageState s;
  s.z = Complex(0.3, 0.1);
  s.h.assign(topo.message_count(), Complex(5.0, 1.0));
  for (std::size_t m = 0; m < topo.message_count(); ++m) CHECK(*solver.update_message(s, m) == Complex(0.0));

  auto w = load_triplets("0 1 1\n1 1 0.75\n");
  auto wt = build_topology(w, 1);
  SpectralSolver ws(w, wt);
  s.h.assign(wt.message_count(), Complex(0.0));
  CHECK(*ws.update_message(s, static_cast<std::size_t>(wt.find(0, 1))) == Complex(0.75));
}

TEST_CASE("single node") {
  auto g = load_triplets("0 0 0.5\n");
  auto topo = build_topology(g, 1);
  SpectralSolver solver(g, topo);
  auto s = solver.solve(Complex(0.0, 0.1), 1e-10, 100);
  CHECK(s.converged);
  CHECK(topo.message_count() == 0);
  CHECK(*solver.node_H(s, 0) == Complex(0.5));
}

TEST_CASE("triangle cavity field") {
  auto g = testgen::triangle();
  auto topo = build_topology(g, 1);
  SpectralSolver solver(g, topo);
  const Complex z(0.4, 0.05);
  auto s = solver.solve(z, 1e-12, 100);
  CHECK(s.converged);
  // Messages vanish (empty reduced sets); H_0 = [1 1] (z - A_12)^{-1} [1 1]^T.
  const Complex expect = 2.0 / (z - 1.0);
  CHECK(std::abs(*solver.node_H(s, 0) - expect) < 1e-12);
}

TEST_CASE("exact on trees, triangle trees and short cycles") {
  const double eta = 0.05;
  auto x = grid(-3.5, 3.5, 0.01);
  CHECK(max_gap(spectral_density(testgen::path(20), params(0, eta, x)), oracle(testgen::path(20), x, eta)) < 1e-6);
  CHECK(max_gap(spectral_density(testgen::triangle(), params(1, eta, x)), oracle(testgen::triangle(), x, eta)) < 1e-6);
  CHECK(max_gap(spectral_density(testgen::cycle(5), params(3, eta, x)), oracle(testgen::cycle(5), x, eta)) < 1e-6);
  testgen::Rng rng(2);
  auto tt = testgen::triangle_tree(12, rng);
  CHECK(max_gap(spectral_density(tt, params(1, eta, x)), oracle(tt, x, eta)) < 1e-6);
}

TEST_CASE("conjugate symmetry") {
  testgen::Rng rng(4);
  auto g = testgen::er_with_triangles(60, 3.0, 20, rng);
  auto topo = build_topology(g, 1);
  SpectralSolver solver(g, topo);
  const Complex z(0.7, 0.1);
  auto a = solver.solve(z, 1e-12, 10000);
  auto b = solver.solve(std::conj(z), 1e-12, 10000);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  for (NodeId i = 0; i < g.size(); i += 7) CHECK(std::abs(*solver.node_H(a, i) - std::conj(*solver.node_H(b, i))) < 1e-9);
}

TEST_CASE("nonnegative and normalized") {
  testgen::Rng rng(6);
  for (int t = 0; t < 3; ++t) {
    auto g = testgen::er_with_triangles(80, 3.0, 20, rng);
    const double eta = 0.05;
    auto eig = dense_eigenvalues(g.to_dense()).values;
    auto x = grid(eig.front() - 50 * eta, eig.back() + 50 * eta, 0.005);
    auto curve = spectral_density(g, params(1, eta, x));
    double area = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (curve.converged[k]) CHECK(curve.rho[k] >= -1e-9);
      if (k) area += 0.5 * (curve.rho[k] + curve.rho[k - 1]) * (x[k] - x[k - 1]);
    }
    CHECK(area >= 0.97);
    CHECK(area <= 1.0);
  }
}

TEST_CASE("weights scale the support") {
  auto g = testgen::bowtie();
  std::vector<Edge> scaled;
  const double c = 2.5;
  for (const auto& e : g.edges()) scaled.push_back({e.u, e.v, c * e.w});
  Graph h(g.size(), scaled);
  auto x = grid(-2.5, 2.5, 0.05);
  std::vector<double> cx;
  for (double v : x) cx.push_back(c * v);
  auto a = spectral_density(g, params(1, 0.05, x));
  auto b = spectral_density(h, params(1, 0.05 * c, cx));
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(a.rho[k] == doctest::Approx(b.rho[k] * c).epsilon(1e-8));
}

TEST_CASE("laplacian of a triangle tree") {
  testgen::Rng rng(8);
  auto l = laplacian(testgen::triangle_tree(8, rng));
  auto x = grid(-0.5, 7.0, 0.01);
  CHECK(max_gap(spectral_density(l, params(1, 0.05, x)), oracle(l, x, 0.05)) < 1e-6);
}

TEST_CASE("warm start does not change the answer") {
  testgen::Rng rng(10);
  auto g = testgen::er_with_triangles(100, 4.0, 30, rng);
  auto x = grid(-3, 3, 0.25);
  auto warm = params(1, 0.05, x);
  auto cold = warm;
  cold.warm_start = false;
  auto a = spectral_density(g, warm), b = spectral_density(g, cold);
  CHECK(max_gap(a, b) < 1e-7);
}

TEST_CASE("validation") {
  auto g = testgen::triangle();
  CHECK_THROWS_AS(spectral_density(g, params(1, 0.0, {0.0})), ValidationError);
  CHECK_THROWS_AS(spectral_density(g, params(-1, 0.1, {0.0})), ValidationError);
  CHECK_THROWS_AS(spectral_density(g, params(1, 0.1, {1.0, 0.0})), ValidationError);
}
