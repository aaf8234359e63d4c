#include "nbfrom/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "nbfrom/io.hpp"
#include "nbfrom/random.hpp"

namespace nbfrom {

void validate(const ParamVector& p) {
  if (!(p.mach > 0.0) || !std::isfinite(p.mach)) {
    throw std::invalid_argument("parameters: mach must be positive, got " + format_double(p.mach));
  }
  if (!(p.altitude_km >= 0.0) || !std::isfinite(p.altitude_km)) {
    throw std::invalid_argument("parameters: altitude must be non-negative, got " +
                                format_double(p.altitude_km));
  }
}

std::string_view variable_name(Variable v) {
  switch (v) {
    case Variable::U1: return "u1";
    case Variable::U2: return "u2";
    case Variable::Rho: return "rho";
    case Variable::T: return "T";
  }
  return "?";
}

std::optional<Variable> parse_variable(std::string_view name) {
  for (Variable v : kAllVariables) {
    if (variable_name(v) == name) return v;
  }
  return std::nullopt;
}

const FieldSnapshot& Dataset::by_id(std::size_t id) const {
  const auto it = std::ranges::lower_bound(snapshots, id, {}, &FieldSnapshot::id);
  if (it == snapshots.end() || it->id != id) {
    throw std::out_of_range("dataset has no configuration " + std::to_string(id));
  }
  return *it;
}

void ParamGridSpec::validate() const {
  if (mach_count == 0 || alt_count == 0) throw std::invalid_argument("parameter grid is empty");
  if (!(mach_step > 0.0) || !(alt_step_km > 0.0)) throw std::invalid_argument("parameter grid steps must be positive");
  for (const ParamVector& p : {ParamVector{mach_start, alt_start_km},
                               ParamVector{mach_start + mach_step * double(mach_count - 1),
                                           alt_start_km + alt_step_km * double(alt_count - 1)}}) {
    nbfrom::validate(p);
  }
}

std::vector<ParamVector> generate_param_grid(const ParamGridSpec& spec) {
  spec.validate();
  std::vector<ParamVector> grid;
  grid.reserve(spec.mach_count * spec.alt_count);
  for (std::size_t a = 0; a < spec.alt_count; ++a) {
    for (std::size_t m = 0; m < spec.mach_count; ++m) {
      grid.push_back({spec.mach_start + spec.mach_step * double(m), spec.alt_start_km + spec.alt_step_km * double(a)});
    }
  }
  return grid;
}

namespace {

constexpr double kGamma = 1.4;
constexpr double kGasConstant = 287.0;

// Smooth ramp: ~0 upstream of the nose, ~x downstream.
double softplus(double x, double width) {
  const double z = x / width;
  return width * (z > 30.0 ? z : std::log1p(std::exp(z)));
}

double freestream_temperature(double altitude_km) {
  return 216.65 + 27.0 * (1.0 + std::tanh((altitude_km - 42.0) / 7.0));
}

}  // namespace

FlowState manufactured_state(const ConeGeometry& geom, Point p, const ParamVector& params) {
  constexpr double kDomainTol = 1e-9;
  const double outside = domain_violation(geom, p);
  if (outside > kDomainTol) {
    throw std::out_of_range("manufactured_state: point (" + format_double(p.x) + ", " +
                            format_double(p.y) + ") lies outside the domain");
  }
  const double mach = params.mach;
  const double alt = params.altitude_km;

  const WallFrame frame = wall_frame(geom, p);
  const double d = std::max(frame.distance, 0.0);
  const double ramp = softplus(p.x, 0.1);

  // Shock ridge: standoff from the nose correlation, widening downstream.
  const double standoff = geom.nose_radius * 0.386 * std::exp(4.67 / (mach * mach));
  const double shock_d = standoff + (0.05 + 0.6 / mach) * ramp;
  const double s = 0.5 * (1.0 + std::tanh((d - shock_d) / 0.04));  // 1 upstream, 0 behind

  // Velocity: freestream direction upstream, wall-tangent behind the ridge.
  const double t_inf = freestream_temperature(alt);
  const double u_inf = mach * std::sqrt(kGamma * kGasConstant * t_inf);
  const double speed_ratio = 0.3 + 0.55 * (1.0 - std::exp(-ramp / 0.25));
  const double bl = 0.03 + 0.001 * alt;
  const double no_slip = -std::expm1(-std::pow(d / bl, 3));
  double dx = s + (1.0 - s) * frame.normal.y;
  double dy = (1.0 - s) * -frame.normal.x;
  const double len = std::hypot(dx, dy);
  dx /= len;
  dy /= len;
  const double speed = u_inf * (s + (1.0 - s) * speed_ratio) * no_slip;

  // Density: stratified freestream, compressed behind the ridge, thinned in
  // the hot layer next to the wall. Only the first factor depends on altitude.
  const double thermal = 0.05;
  const double wall_layer = std::exp(-d / thermal);
  const double jump = (kGamma + 1.0) * mach * mach / ((kGamma - 1.0) * mach * mach + 2.0);
  const double compression =
      1.0 + (jump - 1.0) * (1.0 - s) * (0.35 + 0.65 * std::exp(-ramp / 0.4));
  const double rho = kSeaLevelDensity * std::exp(-alt / kDensityScaleHeightKm) * compression *
                     (1.0 - 0.5 * wall_layer);

  const double heating = 0.04 * mach * mach * (0.5 + 0.5 * std::exp(-ramp / 0.5));
  const double t_edge = t_inf * (s + (1.0 - s) * (1.0 + heating));
  const double temp = t_edge + (kWallTemperature - t_edge) * wall_layer;

  return {speed * dx, speed * dy, rho, temp};
}

FieldSnapshot generate_snapshot(const ConeGeometry& geom, const Mesh& mesh,
                                const ParamVector& params, std::size_t id) {
  if (mesh.size() == 0) throw std::invalid_argument("generate_snapshot: empty mesh");
  validate(params);
  FieldSnapshot snap{id, params, DenseMatrix(mesh.size(), kNumVariables)};
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const FlowState s = manufactured_state(geom, mesh.points[i], params);
    auto row = snap.values.row(i);
    row[0] = s.u1;
    row[1] = s.u2;
    row[2] = s.rho;
    row[3] = s.T;
  }
  return snap;
}

std::vector<FieldSnapshot> generate_snapshots(const ConeGeometry& geom, const Mesh& mesh,
                                              const std::vector<ParamVector>& grid,
                                              std::span<const std::size_t> ids) {
  for (std::size_t id : ids) {
    if (id >= grid.size()) throw std::out_of_range("no grid entry " + std::to_string(id));
  }
  std::vector<FieldSnapshot> out(ids.size());
  std::vector<std::string> errors(ids.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < ids.size(); ++i) {
    try {
      out[i] = generate_snapshot(geom, mesh, grid[ids[i]], ids[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i].empty()) throw std::runtime_error("config " + std::to_string(ids[i]) + ": " + errors[i]);
  }
  return out;
}

Normalizer fit_normalizer(std::span<const FieldSnapshot> train, Variable v, bool log_flag) {
  if (train.empty()) throw std::invalid_argument("fit_normalizer: no training snapshots");
  const std::size_t col = index(v);
  double sum = 0.0;
  std::size_t count = 0;
  for (const FieldSnapshot& snap : train) {
    for (std::size_t i = 0; i < snap.values.rows(); ++i) {
      const double x = snap.values(i, col);
      if (log_flag && !(x > 0.0)) {
        throw std::domain_error("fit_normalizer: " + std::string(variable_name(v)) + " = " +
                                format_double(x) + " at point " + std::to_string(i) +
                                " of config " + std::to_string(snap.id) +
                                " cannot be log-transformed");
      }
      sum += log_flag ? std::log(x) : x;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("fit_normalizer: snapshots have no points");
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (const FieldSnapshot& snap : train) {
    for (std::size_t i = 0; i < snap.values.rows(); ++i) {
      const double x = snap.values(i, col);
      const double r = (log_flag ? std::log(x) : x) - mean;
      sq += r * r;
    }
  }
  const double std = std::sqrt(sq / static_cast<double>(count));
  return {log_flag, mean, std::max(std, kStdFloor)};
}

std::array<Normalizer, kNumVariables> fit_normalizers(std::span<const FieldSnapshot> train,
                                                      const std::array<bool, kNumVariables>& log_flags) {
  std::array<Normalizer, kNumVariables> out;
  for (Variable v : kAllVariables) out[index(v)] = fit_normalizer(train, v, log_flags[index(v)]);
  return out;
}

ParamNormalizer fit_param_normalizer(std::span<const ParamVector> train) {
  if (train.empty()) throw std::invalid_argument("fit_param_normalizer: no configurations");
  const auto stats = [&](auto field) {
    double mean = 0.0;
    for (const auto& p : train) mean += p.*field;
    mean /= static_cast<double>(train.size());
    double sq = 0.0;
    for (const auto& p : train) sq += (p.*field - mean) * (p.*field - mean);
    return std::pair{mean, std::max(std::sqrt(sq / static_cast<double>(train.size())), kStdFloor)};
  };
  const auto [mm, ms] = stats(&ParamVector::mach);
  const auto [am, as] = stats(&ParamVector::altitude_km);
  return {mm, ms, am, as};
}

DenseMatrix CoordNormalizer::apply(const Mesh& mesh) const {
  DenseMatrix m(mesh.size(), 2);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    m(i, 0) = (mesh.points[i].x - x_mean) / x_std;
    m(i, 1) = (mesh.points[i].y - y_mean) / y_std;
  }
  return m;
}

CoordNormalizer fit_coord_normalizer(const Mesh& mesh) {
  if (mesh.size() == 0) throw std::invalid_argument("fit_coord_normalizer: empty mesh");
  const double n = static_cast<double>(mesh.size());
  double mx = 0.0, my = 0.0;
  for (const Point& p : mesh.points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sx = 0.0, sy = 0.0;
  for (const Point& p : mesh.points) {
    sx += (p.x - mx) * (p.x - mx);
    sy += (p.y - my) * (p.y - my);
  }
  return {mx, std::max(std::sqrt(sx / n), kStdFloor), my, std::max(std::sqrt(sy / n), kStdFloor)};
}

Split split(std::span<const std::size_t> ids, const SplitSpec& spec) {
  if (spec.n_train == 0 || spec.n_train >= ids.size()) {
    throw std::invalid_argument("split: n_train must be between 1 and " +
                                std::to_string(ids.size()) + " - 1, got " +
                                std::to_string(spec.n_train));
  }
  std::vector<std::size_t> order(ids.begin(), ids.end());
  std::ranges::sort(order);
  if (std::ranges::adjacent_find(order) != order.end()) throw std::invalid_argument("split: duplicate ids");
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));
  Split s;
  s.train_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.n_train));
  s.eval_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(spec.n_train), order.end());
  std::ranges::sort(s.train_ids);
  std::ranges::sort(s.eval_ids);
  return s;
}

Split split(std::size_t n_configs, const SplitSpec& spec) {
  std::vector<std::size_t> ids(n_configs);
  std::iota(ids.begin(), ids.end(), 0);
  return split(ids, spec);
}

namespace {

void expect_header(LineReader& reader, std::string_view header) {
  std::string_view line;
  if (!reader.next(line)) reader.fail("empty file, expected header '" + std::string(header) + "'");
  if (line != header) reader.fail("expected header '" + std::string(header) + "', got '" + std::string(line) + "'");
}

std::vector<double> parse_row(LineReader& reader, std::string_view line, std::size_t width) {
  const auto fields = split_csv(line);
  if (fields.size() != width) {
    reader.fail("expected " + std::to_string(width) + " columns, got " + std::to_string(fields.size()));
  }
  std::vector<double> values(width);
  for (std::size_t i = 0; i < width; ++i) {
    try {
      values[i] = parse_double(fields[i]);
    } catch (const std::invalid_argument& e) {
      reader.fail(e.what());
    }
  }
  return values;
}

std::filesystem::path field_path(const std::filesystem::path& dir, std::size_t id) {
  return dir / "fields" / (std::to_string(id) + ".csv");
}

}  // namespace

void save_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  std::string out = "x,y\n";
  out.reserve(mesh.size() * 48);
  for (const Point& p : mesh.points) {
    append_double(out, p.x);
    out += ',';
    append_double(out, p.y);
    out += '\n';
  }
  write_file_atomic(path, out);
}

Mesh load_mesh(const std::filesystem::path& path) {
  LineReader reader(path);
  expect_header(reader, "x,y");
  Mesh mesh;
  std::string_view line;
  while (reader.next(line)) {
    const auto v = parse_row(reader, line, 2);
    mesh.points.push_back({v[0], v[1]});
  }
  if (mesh.size() == 0) reader.fail("mesh has no points");
  return mesh;
}

void save_params(const std::filesystem::path& path, std::span<const FieldSnapshot> snapshots) {
  std::string out = "id,mach,altitude_km\n";
  for (const FieldSnapshot& s : snapshots) {
    out += std::to_string(s.id);
    out += ',';
    append_double(out, s.params.mach);
    out += ',';
    append_double(out, s.params.altitude_km);
    out += '\n';
  }
  write_file_atomic(path, out);
}

void save_field(const std::filesystem::path& path, const DenseMatrix& values) {
  std::string out = "u1,u2,rho,T\n";
  out.reserve(values.rows() * 96);
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t c = 0; c < values.cols(); ++c) {
      if (c) out += ',';
      append_double(out, values(i, c));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

DenseMatrix load_field(const std::filesystem::path& path, std::size_t expected_rows) {
  LineReader reader(path);
  expect_header(reader, "u1,u2,rho,T");
  DenseMatrix values(expected_rows, kNumVariables);
  std::size_t row = 0;
  std::string_view line;
  while (reader.next(line)) {
    if (row == expected_rows) reader.fail("more rows than the " + std::to_string(expected_rows) + " mesh points");
    const auto v = parse_row(reader, line, kNumVariables);
    std::ranges::copy(v, values.row(row).begin());
    ++row;
  }
  if (row != expected_rows) {
    reader.fail("has " + std::to_string(row) + " rows but the mesh has " + std::to_string(expected_rows) + " points");
  }
  return values;
}

void save_dataset(const std::filesystem::path& dir, const Mesh& mesh,
                  std::span<const FieldSnapshot> snapshots) {
  for (const FieldSnapshot& s : snapshots) {
    if (s.values.rows() != mesh.size() || s.values.cols() != kNumVariables) {
      throw std::invalid_argument("save_dataset: config " + std::to_string(s.id) + " has shape " +
                                  s.values.shape() + " for a mesh of " + std::to_string(mesh.size()));
    }
  }
  save_mesh(dir / "mesh.csv", mesh);
  for (const FieldSnapshot& s : snapshots) save_field(field_path(dir, s.id), s.values);
  save_params(dir / "params.csv", snapshots);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.mesh = load_mesh(dir / "mesh.csv");
  LineReader reader(dir / "params.csv");
  expect_header(reader, "id,mach,altitude_km");
  std::string_view line;
  std::map<std::size_t, ParamVector> params;
  while (reader.next(line)) {
    const auto fields = split_csv(line);
    if (fields.size() != 3) reader.fail("expected 3 columns, got " + std::to_string(fields.size()));
    std::size_t id = 0;
    const auto res = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), id);
    if (res.ec != std::errc{} || res.ptr != fields[0].data() + fields[0].size()) {
      reader.fail("bad config id '" + std::string(fields[0]) + "'");
    }
    ParamVector p;
    try {
      p = {parse_double(fields[1]), parse_double(fields[2])};
      validate(p);
    } catch (const std::invalid_argument& e) {
      reader.fail(e.what());
    }
    if (!params.emplace(id, p).second) reader.fail("duplicate config id " + std::to_string(id));
  }
  if (params.empty()) reader.fail("no configurations listed");
  for (const auto& [id, p] : params) {
    const auto path = field_path(dir, id);
    if (!std::filesystem::exists(path)) {
      throw std::runtime_error("missing fields file for config " + std::to_string(id) + ": " + path.string());
    }
    ds.snapshots.push_back({id, p, load_field(path, ds.mesh.size())});
  }
  return ds;
}

}  // namespace nbfrom
