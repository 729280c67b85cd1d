#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "loopmp/graph.hpp"
#include "loopmp/reach_gf.hpp"

namespace loopmp {

// "a:b:step" with a <= b and step > 0; both ends included.
struct Grid {
  double first = 0.0;
  double last = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
  std::string str() const;
};

Grid parse_grid(std::string_view spec);

enum class Command { percolate, simulate, spectrum, eig_oracle, dump_neighborhood };
enum class OutputFormat { csv, json };
enum class InputFormat { edges, triplets };
enum class MatrixKind { adjacency, laplacian };

struct RunConfig {
  Command command = Command::percolate;
  std::string input;
  InputFormat input_format = InputFormat::edges;
  // Non-empty: compact node ids on load and write the dense->original map here.
  std::string id_map;
  std::string output;  // empty: standard output
  OutputFormat format = OutputFormat::csv;
  int threads = 0;

  int order = 1;
  std::optional<double> tol;
  int max_iter = 10'000;
  std::size_t edge_budget = 200'000'000;

  // percolate / simulate
  Grid p_grid{0.0, 1.0, 0.05};
  std::vector<double> z_values;
  int samples = 8;
  std::uint64_t seed = 1;
  Estimator estimator = Estimator::automatic;
  int exact_max_internal = 20;
  int trials = 1000;

  // spectrum / eig-oracle
  MatrixKind matrix = MatrixKind::adjacency;
  double eta = 0.05;
  Grid x_grid{-4.0, 4.0, 0.05};

  // dump-neighborhood
  NodeId node = 0;

  void validate() const;
};

using Cell = std::variant<double, std::int64_t>;

// Result rows plus the run's parameters, which CSV writes as "# key=value"
// comment lines ahead of the column header.
struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string to_csv(const Table& t);
std::string to_json(const Table& t);
// Shortest representation that reads back to the same double.
std::string format_number(double v);

// Loads the configured input. Throws on unreadable or invalid input.
Graph load_input(const RunConfig& cfg, IdMap* ids = nullptr);

// Produces the serialized result of a run without touching the filesystem
// beyond reading the input.
std::string render(const RunConfig& cfg);

// Runs and writes the result. Diagnostics go to `err`; returns the process
// exit status. Output files are only created after a successful run.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace loopmp
