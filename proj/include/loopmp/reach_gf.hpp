#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "loopmp/neighborhood.hpp"

namespace loopmp {

// Reachability generating function of a neighborhood under bond percolation:
//
//   G(y) = < prod_{j reachable from focal} y_j >
//
// averaged over independent occupation (probability p) of the neighborhood's
// edges. y is indexed like NeighborhoodView::nodes.
struct GfResult {
  double value = 0.0;
  std::vector<double> grad;
};

// Members relabelled 0..k-1; internal edges are the edges not touching focal.
struct LocalStructure {
  int members = 0;
  std::vector<std::uint8_t> direct;
  std::vector<std::pair<int, int>> internal;

  static LocalStructure of(NeighborhoodView nb);
  int internal_edges() const noexcept { return static_cast<int>(internal.size()); }
};

// Brute force over all 2^E configurations of every neighborhood edge, focal
// edges included. Throws BudgetError above `edge_budget` edges.
GfResult eval_exhaustive(NeighborhoodView nb, std::span<const double> y, double p, int edge_budget = 20);

// C(M,m) p^m (1-p)^(M-m) for m = 0..M.
std::vector<double> binomial_row(int M, double p);

// Fixed random orders of the internal edges and their union-find merge
// scripts, one per sample. Independent of p, y and message values, so a trace
// is built once and replayed on every evaluation.
class MonteCarloTrace {
 public:
  // A step of the script: clusters `keep` and `absorb` (slot ids) merge.
  // absorb < 0 marks an edge whose endpoints were already joined.
  struct Step {
    std::int32_t keep;
    std::int32_t absorb;
  };

  MonteCarloTrace() = default;
  MonteCarloTrace(LocalStructure local, int samples, std::uint64_t seed);

  const LocalStructure& local() const noexcept { return local_; }
  int samples() const noexcept { return samples_; }
  int internal_edges() const noexcept { return local_.internal_edges(); }
  std::span<const std::uint32_t> order(int sample) const;
  std::span<const Step> script(int sample) const;

  // `q[j]` is 1-p for direct members and 1 otherwise; `weights` is binomial_row(M, p).
  // grad may be empty (value only) or sized like y.
  double evaluate(std::span<const double> y, std::span<const double> q, std::span<const double> weights,
                  std::span<double> grad) const;

 private:
  LocalStructure local_;
  int samples_ = 0;
  std::vector<std::uint32_t> orders_;
  std::vector<Step> steps_;
};

GfResult eval_monte_carlo(const MonteCarloTrace& trace, std::span<const double> y, double p, bool with_grad = true);

// Exact G from an enumeration of the internal edges only; focal edges are
// summed analytically per cluster. Each distinct cluster pattern is stored
// once with its subset counts by number of occupied internal edges.
class ExactTable {
 public:
  ExactTable() = default;
  explicit ExactTable(LocalStructure local);

  const LocalStructure& local() const noexcept { return local_; }
  std::size_t pattern_count() const noexcept { return counts_.size(); }

  // Per-pattern probability for occupation probability p.
  std::vector<double> pattern_weights(double p) const;
  double evaluate(std::span<const double> y, std::span<const double> q, std::span<const double> pattern_weights,
                  std::span<double> grad) const;

 private:
  LocalStructure local_;
  // Pattern k covers clusters [pattern_off_[k], pattern_off_[k+1]); cluster c
  // holds members [cluster_off_[c], cluster_off_[c+1]). Only clusters with a
  // direct member are kept; the rest contribute a factor of one.
  std::vector<std::uint32_t> pattern_off_{0};
  std::vector<std::uint32_t> cluster_off_{0};
  std::vector<std::int32_t> cluster_members_;
  std::vector<std::vector<double>> counts_;
};

enum class Estimator { automatic, exhaustive, monte_carlo };

struct EstimatorOptions {
  Estimator kind = Estimator::automatic;
  int samples = 8;
  std::uint64_t seed = 1;
  // automatic picks the exact table when M is at most this.
  int exact_max_internal = 20;
};

// One neighborhood's G, either exact or sampled, bound to a value of p.
class ReachEstimator {
 public:
  ReachEstimator() = default;
  ReachEstimator(NeighborhoodView nb, const EstimatorOptions& opts);

  void bind(double p);
  double p() const noexcept { return p_; }
  bool exact() const noexcept { return std::holds_alternative<ExactTable>(impl_); }
  int members() const noexcept { return local().members; }
  int internal_edges() const noexcept { return local().internal_edges(); }

  double value(std::span<const double> y) const;
  double value_and_grad(std::span<const double> y, std::span<double> grad) const;

 private:
  const LocalStructure& local() const;

  std::variant<ExactTable, MonteCarloTrace> impl_;
  double p_ = -1.0;
  std::vector<double> q_;
  std::vector<double> weights_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace loopmp
