#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "nbfrom/cli.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Neural basis function surrogates for hypersonic flow fields"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool force = false;
  int threads = 0;
  app.add_option("--config", config_path, "JSON run config (defaults when omitted)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Run directory (overrides output_dir)");
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--force", force, "Overwrite existing outputs");

  std::string model = "nbf", which = "eval", param = "15,26", source = "dataset", grid = "-0.25,0.02,41,41,0.005";

  auto* generate = app.add_subcommand("generate", "Sample the mesh and write the manufactured dataset");
  auto* train = app.add_subcommand("train", "Train one model kind on the training split");
  train->add_option("--model", model, "nbf or onet")->check(CLI::IsMember({"nbf", "onet"}));
  auto* evaluate = app.add_subcommand("evaluate", "Write the relative-error report for a split");
  evaluate->add_option("--model", model, "nbf, onet or oracle")->check(CLI::IsMember({"nbf", "onet", "oracle"}));
  evaluate->add_option("--split", which, "train or eval")->check(CLI::IsMember({"train", "eval"}));
  auto* resid = app.add_subcommand("residuals", "Steady Navier-Stokes residuals on a probe grid");
  resid->add_option("--source", source, "dataset, model or uniform")
      ->check(CLI::IsMember({"dataset", "model", "uniform"}));
  resid->add_option("--model", model, "Model kind when --source model")->check(CLI::IsMember({"nbf", "onet"}));
  resid->add_option("--param", param, "Configuration as '<mach>,<alt_km>'");
  resid->add_option("--grid", grid, "Probe grid as 'x0,y0,nx,ny,h'");
  auto* plots = app.add_subcommand("export-plots", "Per-variable x,y,true,pred,abs_err CSVs");
  plots->add_option("--model", model, "nbf, onet or oracle")->check(CLI::IsMember({"nbf", "onet", "oracle"}));
  plots->add_option("--param", param, "Configuration as '<mach>,<alt_km>'");

  // Global options are accepted after the subcommand too.
  for (CLI::App* sub : {generate, train, evaluate, resid, plots}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (threads > 0) omp_set_num_threads(threads);
    const auto ctx = nbfrom::make_context(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path),
                                          out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir), force,
                                          &std::cout);
    if (*generate) {
      nbfrom::cmd_generate(ctx);
    } else if (*train) {
      nbfrom::cmd_train(ctx, model);
    } else if (*evaluate) {
      nbfrom::cmd_evaluate(ctx, model, which);
    } else if (*resid) {
      nbfrom::cmd_residuals(ctx, source, model, nbfrom::parse_param(param), nbfrom::parse_grid(grid));
    } else if (*plots) {
      nbfrom::cmd_export_plots(ctx, model, nbfrom::parse_param(param));
    }
  } catch (const std::exception& e) {
    std::cerr << "nbfrom: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
