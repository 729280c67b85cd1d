#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "loopmp/graph.hpp"
#include "loopmp/neighborhood.hpp"

namespace loopmp {

using Complex = std::complex<double>;

struct SpectralParams {
  int order = 1;
  double eta = 0.05;
  std::vector<double> grid;
  double tol = 1e-10;
  int max_iter = 10'000;
  int threads = 0;
  // Start each grid point from the previous point's messages.
  bool warm_start = true;

  void validate() const;
};

struct SpectralMessageState {
  Complex z;
  std::vector<Complex> h;
  int iterations = 0;
  bool converged = false;
  // Message updates skipped in the last sweep because the local system was singular.
  std::size_t singular = 0;
};

struct DensityCurve {
  std::vector<double> x;
  std::vector<double> rho;
  std::vector<std::uint8_t> converged;
  std::vector<int> iterations;
  double eta = 0.0;
  int order = 0;
};

// Spectral-density message passing. For message (i <- j) with reduced
// neighborhood R = N_{j\i}:
//
//   H_{i<-j}(z) = v^T (D - A_R)^{-1} v + A_jj,   D_kk = z - H_{j<-k}(z)
//
// where v_k = A_jk for R-edges at j and A_R holds R's remaining edges.
class SpectralSolver {
 public:
  SpectralSolver(const Graph& g, const MessageTopology& topo, int threads = 0);

  // Right-hand side for one message given the current state; nullopt if singular.
  std::optional<Complex> update_message(const SpectralMessageState& state, std::size_t m) const;

  SpectralMessageState solve(Complex z, double tol, int max_iter, const SpectralMessageState* warm = nullptr) const;

  // Same identity over the full neighborhood N_i: H_i = v^T (D - A_N)^{-1} v + A_ii.
  std::optional<Complex> node_H(const SpectralMessageState& state, NodeId i) const;

  // rho = -(1/(n pi)) Im sum_i 1/(z - H_i) at the state's z.
  double density(const SpectralMessageState& state) const;

  std::size_t memory_bytes() const;

 private:
  // Local linear system of one neighborhood, flattened.
  struct Systems {
    std::vector<std::size_t> member_off{0};
    std::vector<std::size_t> entry_off{0};
    std::vector<double> v;
    std::vector<double> diag;
    struct Entry {
      std::int32_t a;
      std::int32_t b;
      double w;
    };
    // Entries index into the coupled members of their system (members that
    // touch at least one non-focal edge); every other member decouples.
    std::vector<Entry> entries;
    std::vector<std::size_t> coupled_off{0};
    std::vector<std::int32_t> coupled;

    void append(const Graph& g, NeighborhoodView nb);
    std::size_t bytes() const;
  };

  std::optional<Complex> evaluate(const Systems& sys, std::size_t k, std::span<const std::uint32_t> deps,
                                  const SpectralMessageState& state) const;

  const Graph& graph_;
  const MessageTopology& topo_;
  int threads_;
  Systems messages_;
  Systems nodes_;
};

// Builds the order-r topology and sweeps the grid.
DensityCurve spectral_density(const Graph& g, const SpectralParams& params);
DensityCurve spectral_density(const Graph& g, const MessageTopology& topo, const SpectralParams& params);

}  // namespace loopmp
