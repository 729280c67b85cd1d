#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "loopmp/cli.hpp"

using namespace loopmp;

namespace {

struct GridValidator : CLI::Validator {
  GridValidator() {
    name_ = "GRID";
    func_ = [](const std::string& s) {
      try {
        parse_grid(s);
      } catch (const std::exception& e) {
        return std::string(e.what());
      }
      return std::string();
    };
  }
};

void common(CLI::App* sub, RunConfig& cfg) {
  static const std::map<std::string, OutputFormat> formats{{"csv", OutputFormat::csv}, {"json", OutputFormat::json}};
  static const std::map<std::string, InputFormat> inputs{{"edges", InputFormat::edges},
                                                         {"triplets", InputFormat::triplets}};
  sub->add_option("--input,-i", cfg.input, "graph file")->required();
  sub->add_option("--input-format", cfg.input_format, "input layout")
      ->transform(CLI::CheckedTransformer(inputs, CLI::ignore_case))
      ->option_text("edges|triplets");
  sub->add_option("--output,-o", cfg.output, "result file (default: stdout)");
  sub->add_option("--format", cfg.format, "output format")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
      ->option_text("csv|json");
  sub->add_option("--threads", cfg.threads, "worker threads, 0 = hardware")->check(CLI::NonNegativeNumber);
  sub->add_option("--id-map", cfg.id_map, "compact sparse node ids and write the mapping here");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop-aware message passing for percolation and spectra on sparse networks"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string p_grid = cfg.p_grid.str(), x_grid = cfg.x_grid.str();
  double tol = 0.0;
  static const std::map<std::string, Estimator> estimators{
      {"auto", Estimator::automatic}, {"exhaustive", Estimator::exhaustive}, {"monte-carlo", Estimator::monte_carlo}};
  static const std::map<std::string, MatrixKind> matrices{{"adjacency", MatrixKind::adjacency},
                                                          {"laplacian", MatrixKind::laplacian}};

  auto* perc = app.add_subcommand("percolate", "bond percolation by message passing");
  common(perc, cfg);
  perc->add_option("--r", cfg.order, "neighborhood order")->check(CLI::NonNegativeNumber);
  perc->add_option("--p-grid", p_grid, "a:b:step")->check(GridValidator());
  perc->add_option("--z", cfg.z_values, "also report the mean H_i(z) at these z")->delimiter(',');
  perc->add_option("--samples", cfg.samples, "Monte Carlo samples per large neighborhood")->check(CLI::PositiveNumber);
  perc->add_option("--seed", cfg.seed, "random seed");
  auto* perc_tol = perc->add_option("--tol", tol, "convergence tolerance (default 1e-8)");
  perc->add_option("--max-iter", cfg.max_iter, "iteration cap")->check(CLI::PositiveNumber);
  perc->add_option("--estimator", cfg.estimator, "generating-function estimator")
      ->transform(CLI::CheckedTransformer(estimators, CLI::ignore_case))
      ->option_text("auto|exhaustive|monte-carlo");
  perc->add_option("--exact-max-edges", cfg.exact_max_internal,
                   "largest internal edge count evaluated exactly under --estimator auto");

  auto* sim = app.add_subcommand("simulate", "direct percolation simulation (Newman-Ziff)");
  common(sim, cfg);
  sim->add_option("--p-grid", p_grid, "a:b:step")->check(GridValidator());
  sim->add_option("--trials", cfg.trials, "independent edge orderings")->check(CLI::PositiveNumber);
  sim->add_option("--seed", cfg.seed, "random seed");

  auto* spec = app.add_subcommand("spectrum", "spectral density by message passing");
  auto* eig = app.add_subcommand("eig-oracle", "spectral density from dense diagonalization");
  CLI::Option* spec_tol = nullptr;
  for (auto* sub : {spec, eig}) {
    common(sub, cfg);
    sub->add_option("--matrix", cfg.matrix, "which matrix of the graph")
        ->transform(CLI::CheckedTransformer(matrices, CLI::ignore_case))
        ->option_text("adjacency|laplacian");
    sub->add_option("--eta", cfg.eta, "Lorentzian broadening")->check(CLI::PositiveNumber);
    sub->add_option("--x-grid", x_grid, "a:b:step")->check(GridValidator());
  }
  spec->add_option("--r", cfg.order, "neighborhood order")->check(CLI::NonNegativeNumber);
  spec_tol = spec->add_option("--tol", tol, "convergence tolerance (default 1e-10)");
  spec->add_option("--max-iter", cfg.max_iter, "iteration cap")->check(CLI::PositiveNumber);

  auto* dump = app.add_subcommand("dump-neighborhood", "print the edges of N_i at order r");
  common(dump, cfg);
  dump->add_option("node", cfg.node, "focal node")->required();
  dump->add_option("r", cfg.order, "neighborhood order")->required()->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (perc->parsed()) cfg.command = Command::percolate;
  if (sim->parsed()) cfg.command = Command::simulate;
  if (spec->parsed()) cfg.command = Command::spectrum;
  if (eig->parsed()) cfg.command = Command::eig_oracle;
  if (dump->parsed()) cfg.command = Command::dump_neighborhood;
  if (perc_tol->count() > 0 || spec_tol->count() > 0) cfg.tol = tol;
  try {
    cfg.p_grid = parse_grid(p_grid);
    cfg.x_grid = parse_grid(x_grid);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return run(cfg, std::cout, std::cerr);
}
