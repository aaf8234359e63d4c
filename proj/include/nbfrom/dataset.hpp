#pragma once

// Parameter grid, manufactured flow fields, normalization, train/eval splits
// and the on-disk dataset directory.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbfrom/geometry.hpp"
#include "nbfrom/linalg.hpp"

namespace nbfrom {

struct ParamVector {
  double mach = 0.0;
  double altitude_km = 0.0;

  bool operator==(const ParamVector&) const = default;
};

/// Throws std::invalid_argument unless mach > 0 and altitude >= 0 (both finite).
void validate(const ParamVector& p);

enum class Variable { U1 = 0, U2 = 1, Rho = 2, T = 3 };
inline constexpr std::size_t kNumVariables = 4;
inline constexpr std::array<Variable, kNumVariables> kAllVariables{Variable::U1, Variable::U2,
                                                                   Variable::Rho, Variable::T};

std::string_view variable_name(Variable v);  // "u1", "u2", "rho", "T"
std::optional<Variable> parse_variable(std::string_view name);
inline std::size_t index(Variable v) { return static_cast<std::size_t>(v); }

/// One configuration's fields: N x 4 values, columns u1, u2, rho, T.
struct FieldSnapshot {
  std::size_t id = 0;
  ParamVector params;
  DenseMatrix values;

  std::vector<double> variable(Variable v) const { return values.column(index(v)); }
  bool operator==(const FieldSnapshot&) const = default;
};

struct Dataset {
  Mesh mesh;
  std::vector<FieldSnapshot> snapshots;  // ascending id

  /// Throws std::out_of_range if `id` is absent.
  const FieldSnapshot& by_id(std::size_t id) const;
};

struct ParamGridSpec {
  double mach_start = 10.0;
  double mach_step = 1.0;
  std::size_t mach_count = 21;
  double alt_start_km = 20.0;
  double alt_step_km = 2.0;
  std::size_t alt_count = 21;

  void validate() const;
};

/// Altitude-major grid (altitude outer, Mach inner). The default spec gives
/// 21 x 21: altitudes 20..60 km step 2, Mach 10..30 step 1.
std::vector<ParamVector> generate_param_grid(const ParamGridSpec& spec = {});

// ---------------------------------------------------------------------------
// Manufactured fields

struct FlowState {
  double u1, u2, rho, T;
};

inline constexpr double kWallTemperature = 1200.0;
inline constexpr double kDensityScaleHeightKm = 7.0;
inline constexpr double kSeaLevelDensity = 1.225;

/// Closed-form state at one point. Features: a detached shock ridge whose
/// standoff shrinks with Mach, exponentially stratified density with a
/// compression layer behind the ridge, no-slip velocity and a 1200 K wall
/// temperature reached through boundary-layer profiles. Throws
/// std::out_of_range for points outside the domain.
FlowState manufactured_state(const ConeGeometry& geom, Point p, const ParamVector& params);

FieldSnapshot generate_snapshot(const ConeGeometry& geom, const Mesh& mesh,
                                const ParamVector& params, std::size_t id = 0);

/// Snapshots for the given grid ids, generated in parallel.
std::vector<FieldSnapshot> generate_snapshots(const ConeGeometry& geom, const Mesh& mesh,
                                              const std::vector<ParamVector>& grid,
                                              std::span<const std::size_t> ids);

// ---------------------------------------------------------------------------
// Normalization

struct Normalizer {
  bool log_transform = false;
  double mean = 0.0;
  double std = 1.0;

  double apply(double v) const { return ((log_transform ? std::log(v) : v) - mean) / std; }
  double invert(double z) const {
    const double v = z * std + mean;
    return log_transform ? std::exp(v) : v;
  }
};

inline constexpr double kStdFloor = 1e-12;

/// Mean and population std of the (optionally logged) variable over every
/// point of every snapshot. Throws if a logged value is not positive.
Normalizer fit_normalizer(std::span<const FieldSnapshot> train, Variable v, bool log_flag);

/// One normalizer per variable; log applies where `log_flags` is set.
std::array<Normalizer, kNumVariables> fit_normalizers(std::span<const FieldSnapshot> train,
                                                      const std::array<bool, kNumVariables>& log_flags);

/// z-score of Mach and altitude over the training configurations.
struct ParamNormalizer {
  double mach_mean = 0.0, mach_std = 1.0;
  double alt_mean = 0.0, alt_std = 1.0;

  std::array<double, 2> apply(const ParamVector& p) const {
    return {(p.mach - mach_mean) / mach_std, (p.altitude_km - alt_mean) / alt_std};
  }
};

ParamNormalizer fit_param_normalizer(std::span<const ParamVector> train);

/// z-score of the mesh coordinates, used for every network taking x as input.
struct CoordNormalizer {
  double x_mean = 0.0, x_std = 1.0;
  double y_mean = 0.0, y_std = 1.0;

  /// N x 2 matrix of normalized coordinates.
  DenseMatrix apply(const Mesh& mesh) const;
};

CoordNormalizer fit_coord_normalizer(const Mesh& mesh);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  std::size_t n_train = 10;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::size_t> train_ids;  // ascending
  std::vector<std::size_t> eval_ids;   // ascending
};

/// Uniform sample of n_train ids without replacement; the rest are eval.
/// Throws std::invalid_argument unless 1 <= n_train < ids.size().
Split split(std::span<const std::size_t> ids, const SplitSpec& spec);
Split split(std::size_t n_configs, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Files: mesh.csv (x,y), params.csv (id,mach,altitude_km), fields/<id>.csv
// (u1,u2,rho,T). Malformed input raises std::runtime_error naming the file
// and line.

void save_mesh(const std::filesystem::path& path, const Mesh& mesh);
Mesh load_mesh(const std::filesystem::path& path);

void save_params(const std::filesystem::path& path, std::span<const FieldSnapshot> snapshots);
void save_field(const std::filesystem::path& path, const DenseMatrix& values);
DenseMatrix load_field(const std::filesystem::path& path, std::size_t expected_rows);

void save_dataset(const std::filesystem::path& dir, const Mesh& mesh,
                  std::span<const FieldSnapshot> snapshots);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace nbfrom
