#pragma once

// Pipeline commands behind the nbfrom executable. Each command reads the run
// directory layout:
//
//   <out>/config.json              resolved config written by generate
//   <out>/dataset/                 mesh.csv, params.csv, fields/<id>.csv, manifest.json
//   <out>/models/<nbf|onet>/       model archive
//   <out>/reports/<model>_<split>.json
//   <out>/residuals/<source>_<mach>_<alt>.csv
//   <out>/plots/<model>_<mach>_<alt>_<var>.csv

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nbfrom/config.hpp"
#include "nbfrom/eval.hpp"
#include "nbfrom/physics.hpp"

namespace nbfrom {

struct CommandContext {
  RunConfig config;
  std::filesystem::path out;
  bool force = false;
  std::ostream* log = nullptr;  // progress messages; null silences them
};

/// Loads `config_path` (defaults when empty) and picks the output directory:
/// `out_override` if given, else the config's output_dir.
CommandContext make_context(const std::optional<std::filesystem::path>& config_path,
                            const std::optional<std::filesystem::path>& out_override, bool force,
                            std::ostream* log);

/// "<mach>,<alt_km>" -> ParamVector.
ParamVector parse_param(const std::string& text);

struct GridSpec {
  double x0 = -0.25;
  double y0 = 0.02;
  std::size_t nx = 41;
  std::size_t ny = 41;
  double h = 0.005;
};
/// "x0,y0,nx,ny,h".
GridSpec parse_grid(const std::string& text);

/// Returns the dataset directory.
std::filesystem::path cmd_generate(const CommandContext& ctx);
/// kind is "nbf" or "onet". Returns the archive directory.
std::filesystem::path cmd_train(const CommandContext& ctx, const std::string& kind);
/// kind is "nbf", "onet" or "oracle"; split is "train" or "eval". Returns the report path.
std::filesystem::path cmd_evaluate(const CommandContext& ctx, const std::string& kind, const std::string& split);
/// source is "dataset", "model" or "uniform"; kind selects the model for source "model".
std::filesystem::path cmd_residuals(const CommandContext& ctx, const std::string& source,
                                    const std::string& kind, const ParamVector& psi, const GridSpec& grid);
/// Returns the four per-variable CSV paths.
std::vector<std::filesystem::path> cmd_export_plots(const CommandContext& ctx, const std::string& kind,
                                                    const ParamVector& psi);

}  // namespace nbfrom
