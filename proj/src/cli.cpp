#include "loopmp/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "loopmp/errors.hpp"
#include "loopmp/neighborhood.hpp"
#include "loopmp/percolation.hpp"
#include "loopmp/percolation_oracle.hpp"
#include "loopmp/spectra.hpp"
#include "loopmp/spectra_oracle.hpp"

namespace loopmp {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<double> Grid::values() const {
  const auto count = static_cast<long long>(std::floor((last - first) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long long k = 0; k < count; ++k) out.push_back(first + static_cast<double>(k) * step);
  return out;
}

std::string Grid::str() const { return format_number(first) + ":" + format_number(last) + ":" + format_number(step); }

Grid parse_grid(std::string_view spec) {
  std::vector<double> parts;
  std::size_t pos = 0;
  while (true) {
    const auto colon = spec.find(':', pos);
    const auto tok = spec.substr(pos, colon == std::string_view::npos ? std::string_view::npos : colon - pos);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v))
      throw ValidationError("malformed grid '" + std::string(spec) + "', expected a:b:step");
    parts.push_back(v);
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
  }
  if (parts.size() != 3) throw ValidationError("malformed grid '" + std::string(spec) + "', expected a:b:step");
  Grid g{parts[0], parts[1], parts[2]};
  if (!(g.step > 0.0)) throw ValidationError("grid step must be positive");
  if (g.first > g.last) throw ValidationError("grid start must not exceed its end");
  if ((g.last - g.first) / g.step > 1e7) throw ValidationError("grid has too many points");
  return g;
}

void RunConfig::validate() const {
  if (order < 0) throw ValidationError("r must be nonnegative");
  if (tol && !(*tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");
  if (samples < 1) throw ValidationError("samples must be at least 1");
  if (trials < 1) throw ValidationError("trials must be at least 1");
  if (!(eta > 0.0)) throw ValidationError("eta must be strictly positive");
  if (command == Command::percolate || command == Command::simulate) {
    if (p_grid.first < 0.0 || p_grid.last > 1.0 + 1e-12) throw ValidationError("p grid must lie within [0,1]");
    for (double z : z_values)
      if (!(z >= 0.0 && z <= 1.0)) throw ValidationError("z values must lie in [0,1]");
  }
}

// --- serialization -------------------------------------------------------------

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return format_number(std::get<double>(c));
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (const auto& [k, v] : t.meta) out += "# " + k + "=" + v + "\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + cell_text(row[c]);
    out += "\n";
  }
  return out;
}

std::string to_json(const Table& t) {
  nlohmann::ordered_json doc;
  auto& meta = doc["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : t.meta) meta[k] = v;
  doc["columns"] = t.columns;
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    auto obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (const auto* i = std::get_if<std::int64_t>(&row[c])) {
        obj[t.columns[c]] = *i;
      } else {
        const double v = std::get<double>(row[c]);
        // JSON has no NaN/Inf; these become null.
        if (std::isfinite(v)) obj[t.columns[c]] = v;
        else obj[t.columns[c]] = nullptr;
      }
    }
    rows.push_back(std::move(obj));
  }
  return doc.dump(2) + "\n";
}

// --- commands --------------------------------------------------------------------

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read input file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::automatic: return "auto";
    case Estimator::exhaustive: return "exhaustive";
    case Estimator::monte_carlo: return "monte-carlo";
  }
  return "?";
}

void common_meta(Table& t, const RunConfig& cfg, const Graph& g, const char* command) {
  t.meta.emplace_back("command", command);
  t.meta.emplace_back("input", cfg.input);
  t.meta.emplace_back("input_format", cfg.input_format == InputFormat::edges ? "edges" : "triplets");
  t.meta.emplace_back("nodes", std::to_string(g.size()));
  t.meta.emplace_back("edges", std::to_string(g.edge_count()));
}

Table run_percolate(const RunConfig& cfg, const Graph& g) {
  if (!g.is_simple_unweighted())
    throw ValidationError("percolation needs an unweighted graph without self-loops");
  PercolationParams params;
  params.order = cfg.order;
  params.tol = cfg.tol.value_or(1e-8);
  params.max_iter = cfg.max_iter;
  params.estimator = {cfg.estimator, cfg.samples, cfg.seed, cfg.exact_max_internal};
  params.threads = cfg.threads;
  const auto grid = cfg.p_grid.values();
  params.p = grid.empty() ? 0.0 : std::clamp(grid.front(), 0.0, 1.0);

  TopologyOptions topts;
  topts.edge_budget = cfg.edge_budget;
  topts.threads = cfg.threads;
  const auto topo = build_topology(g, cfg.order, topts);
  PercolationSolver solver(g, topo, params);

  Table t;
  common_meta(t, cfg, g, "percolate");
  t.meta.emplace_back("r", std::to_string(cfg.order));
  t.meta.emplace_back("p_grid", cfg.p_grid.str());
  t.meta.emplace_back("samples", std::to_string(cfg.samples));
  t.meta.emplace_back("seed", std::to_string(cfg.seed));
  t.meta.emplace_back("tol", format_number(params.tol));
  t.meta.emplace_back("max_iter", std::to_string(cfg.max_iter));
  t.meta.emplace_back("estimator", estimator_name(cfg.estimator));
  t.meta.emplace_back("exact_max_internal", std::to_string(cfg.exact_max_internal));
  t.meta.emplace_back("messages", std::to_string(topo.message_count()));
  t.meta.emplace_back("exact_neighborhoods", std::to_string(solver.exact_neighborhoods()));
  t.meta.emplace_back("sampled_neighborhoods", std::to_string(solver.sampled_neighborhoods()));
  if (!cfg.z_values.empty()) {
    std::string zs;
    for (double z : cfg.z_values) zs += (zs.empty() ? "" : ",") + format_number(z);
    t.meta.emplace_back("z", zs);
  }

  t.columns = {"p", "S", "mean_s", "converged", "iterations"};
  for (double z : cfg.z_values) t.columns.push_back("H(" + format_number(z) + ")");

  for (double p : grid) {
    p = std::clamp(p, 0.0, 1.0);
    solver.set_p(p);
    auto state = solver.solve(1.0);
    solver.solve_derivatives(state);
    const double S = solver.percolating_fraction(state);
    const auto sizes = solver.mean_cluster_size(state);
    std::vector<Cell> row{p, S, sizes.converged ? sizes.mean : std::numeric_limits<double>::quiet_NaN(),
                          std::int64_t{sizes.converged ? 1 : 0}, std::int64_t{state.iterations}};
    for (double z : cfg.z_values) {
      const auto zs = solver.solve(z);
      double acc = 0.0;
      for (NodeId i = 0; i < g.size(); ++i) acc += solver.node_gf(zs, i);
      row.emplace_back(g.size() ? acc / g.size() : 0.0);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table run_simulate(const RunConfig& cfg, const Graph& g) {
  auto grid = cfg.p_grid.values();
  for (auto& p : grid) p = std::clamp(p, 0.0, 1.0);
  const auto est = simulate(g, grid, cfg.trials, cfg.seed, cfg.threads);
  Table t;
  common_meta(t, cfg, g, "simulate");
  t.meta.emplace_back("p_grid", cfg.p_grid.str());
  t.meta.emplace_back("trials", std::to_string(cfg.trials));
  t.meta.emplace_back("seed", std::to_string(cfg.seed));
  t.columns = {"p", "S_hat", "S_se", "mean_s_hat", "mean_s_se"};
  for (const auto& pt : est.points) t.rows.push_back({pt.p, pt.S, pt.S_se, pt.mean_s, pt.mean_s_se});
  return t;
}

Graph matrix_of(const RunConfig& cfg, const Graph& g) {
  return cfg.matrix == MatrixKind::laplacian ? laplacian(g) : g;
}

void spectral_meta(Table& t, const RunConfig& cfg) {
  t.meta.emplace_back("matrix", cfg.matrix == MatrixKind::laplacian ? "laplacian" : "adjacency");
  t.meta.emplace_back("eta", format_number(cfg.eta));
  t.meta.emplace_back("x_grid", cfg.x_grid.str());
}

Table curve_table(Table t, const DensityCurve& c) {
  t.columns = {"x", "rho", "converged", "iterations"};
  for (std::size_t k = 0; k < c.x.size(); ++k)
    t.rows.push_back({c.x[k], c.rho[k], std::int64_t{c.converged[k]}, std::int64_t{c.iterations[k]}});
  return t;
}

Table run_spectrum(const RunConfig& cfg, const Graph& g0) {
  const auto g = matrix_of(cfg, g0);
  SpectralParams params;
  params.order = cfg.order;
  params.eta = cfg.eta;
  params.grid = cfg.x_grid.values();
  params.tol = cfg.tol.value_or(1e-10);
  params.max_iter = cfg.max_iter;
  params.threads = cfg.threads;
  TopologyOptions topts;
  topts.edge_budget = cfg.edge_budget;
  topts.threads = cfg.threads;
  const auto topo = build_topology(g, cfg.order, topts);
  const auto curve = spectral_density(g, topo, params);

  Table t;
  common_meta(t, cfg, g, "spectrum");
  spectral_meta(t, cfg);
  t.meta.emplace_back("r", std::to_string(cfg.order));
  t.meta.emplace_back("tol", format_number(params.tol));
  t.meta.emplace_back("max_iter", std::to_string(cfg.max_iter));
  t.meta.emplace_back("messages", std::to_string(topo.message_count()));
  return curve_table(std::move(t), curve);
}

Table run_eig_oracle(const RunConfig& cfg, const Graph& g0) {
  const auto g = matrix_of(cfg, g0);
  const auto eig = dense_eigenvalues(g.to_dense());
  const auto curve = smoothed_density(eig.values, cfg.x_grid.values(), cfg.eta);
  Table t;
  common_meta(t, cfg, g, "eig-oracle");
  spectral_meta(t, cfg);
  t.meta.emplace_back("jacobi_sweeps", std::to_string(eig.sweeps));
  return curve_table(std::move(t), curve);
}

std::string run_dump(const RunConfig& cfg, const Graph& g) {
  if (cfg.node < 0 || cfg.node >= g.size()) throw ValidationError("node " + std::to_string(cfg.node) + " out of range");
  const auto nb = build_neighborhood(g, cfg.node, cfg.order);
  if (cfg.format == OutputFormat::csv) return dump_neighborhood(g, nb);
  nlohmann::ordered_json doc;
  doc["focal"] = nb.focal;
  doc["r"] = nb.order;
  doc["nodes"] = nb.nodes;
  doc["direct"] = nb.direct;
  auto& edges = doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : nb.edges) edges.push_back({e.u, e.v, g.edge(e.id).w});
  return doc.dump(2) + "\n";
}

}  // namespace

Graph load_input(const RunConfig& cfg, IdMap* ids) {
  const auto text = read_file(cfg.input);
  if (cfg.input_format == InputFormat::triplets) return ids ? load_triplets(text, *ids) : load_triplets(text);
  return ids ? load_edge_list(text, *ids) : load_edge_list(text);
}

std::string render(const RunConfig& cfg) {
  cfg.validate();
  IdMap ids;
  const auto g = load_input(cfg, cfg.id_map.empty() ? nullptr : &ids);
  if (cfg.command == Command::dump_neighborhood) return run_dump(cfg, g);
  Table t;
  switch (cfg.command) {
    case Command::percolate: t = run_percolate(cfg, g); break;
    case Command::simulate: t = run_simulate(cfg, g); break;
    case Command::spectrum: t = run_spectrum(cfg, g); break;
    case Command::eig_oracle: t = run_eig_oracle(cfg, g); break;
    case Command::dump_neighborhood: break;
  }
  if (!cfg.id_map.empty()) t.meta.emplace_back("id_map", cfg.id_map);
  t.meta.emplace_back("threads", std::to_string(cfg.threads));
  return cfg.format == OutputFormat::json ? to_json(t) : to_csv(t);
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::string body;
  IdMap ids;
  try {
    body = render(cfg);
    if (!cfg.id_map.empty()) load_input(cfg, &ids);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    if (!cfg.id_map.empty()) {
      std::ofstream map(cfg.id_map);
      if (!map) throw std::runtime_error("cannot write id map '" + cfg.id_map + "'");
      map << "# dense original\n";
      for (std::size_t k = 0; k < ids.original.size(); ++k) map << k << ' ' << ids.original[k] << '\n';
    }
    if (cfg.output.empty()) {
      out << body;
    } else {
      std::ofstream file(cfg.output, std::ios::binary);
      if (!file) throw std::runtime_error("cannot write output file '" + cfg.output + "'");
      file << body;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace loopmp
