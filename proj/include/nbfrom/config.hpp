#pragma once

// Run configuration: a JSON document whose every key is optional. Missing keys
// take the defaults below; unknown keys and wrongly typed values are errors.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "nbfrom/dataset.hpp"
#include "nbfrom/geometry.hpp"
#include "nbfrom/nbf.hpp"
#include "nbfrom/onet.hpp"

namespace nbfrom {

struct RunConfig {
  ConeGeometry geometry;
  std::size_t mesh_points = 2000;
  std::uint64_t mesh_seed = 1;
  ParamGridSpec grid;
  SplitSpec split{10, 1};
  std::array<bool, kNumVariables> log_flags{false, false, true, false};
  NbfHyper nbf;
  std::uint64_t nbf_seed = 7;
  OnetHyper onet;
  std::uint64_t onet_seed = 7;
  std::string output_dir = "run";

  /// Hyperparameters with the shared normalization flags filled in.
  NbfHyper nbf_hyper() const;
  OnetHyper onet_hyper() const;

  /// Semantic checks beyond the schema (positive sizes, split fits the grid).
  void validate() const;
};

/// Parses and validates a config document. Errors start with `source`.
RunConfig parse_config(std::string_view text, std::string_view source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config, every key present, pretty-printed JSON.
std::string config_to_json(const RunConfig& config);

/// FNV-1a over the canonical JSON of everything except output_dir.
std::string config_hash(const RunConfig& config);
/// Same, restricted to what determines the generated dataset (geometry, mesh, grid).
std::string dataset_hash(const RunConfig& config);

}  // namespace nbfrom
