#pragma once

// Relative L2 error, per-split reports and plot-ready field exports.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nbfrom/dataset.hpp"
#include "nbfrom/surrogate.hpp"

namespace nbfrom {

/// sqrt(sum (pred - truth)^2 / sum truth^2). Throws std::invalid_argument on
/// length mismatch, empty input, or an all-zero truth.
double relative_error(std::span<const double> pred, std::span<const double> truth);

struct ErrorStats {
  double mean = 0.0;
  double std = 0.0;  // population
};

ErrorStats summarize(std::span<const double> errors);

struct ConfigErrors {
  std::size_t id = 0;
  ParamVector params;
  std::array<double, kNumVariables> error{};
};

struct EvalReport {
  std::string model;
  std::string split;
  std::array<ErrorStats, kNumVariables> variables;
  std::vector<ConfigErrors> per_config;

  std::size_t configs() const { return per_config.size(); }
};

/// Errors in physical units for every snapshot and variable. Predictions are
/// requested in blocks of configurations; a failure names the config.
EvalReport evaluate_model(const Surrogate& model, const Mesh& mesh,
                          std::span<const FieldSnapshot> snapshots, const std::string& split);

/// {"model", "split", "configs", "variables": {u1: {mean, std}, ...},
///  "per_config": [...]}, newline-terminated.
std::string report_json(const EvalReport& report);
/// Aligned table with one row per variable.
std::string report_text(const EvalReport& report);

/// Returns the stored fields for known parameters. Throws std::out_of_range
/// for parameters absent from the dataset.
class OracleModel : public Surrogate {
 public:
  explicit OracleModel(std::vector<FieldSnapshot> snapshots, Mesh mesh);

  std::string kind() const override { return "oracle"; }
  DenseMatrix predict(const Mesh& mesh, std::span<const ParamVector> configs,
                      Variable v) const override;

 private:
  std::vector<FieldSnapshot> snapshots_;
  Mesh mesh_;
};

/// CSV with x, y, true, pred, abs_err over the mesh for one variable.
std::string field_csv(const Surrogate& model, const Mesh& mesh, const FieldSnapshot& truth,
                      Variable v);
void export_field(const std::filesystem::path& path, const Surrogate& model, const Mesh& mesh,
                  const FieldSnapshot& truth, Variable v);

/// Snapshot whose parameters equal `psi`; throws std::out_of_range otherwise.
const FieldSnapshot& find_snapshot(std::span<const FieldSnapshot> snapshots, const ParamVector& psi);

}  // namespace nbfrom
