#include "nbfrom/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "nbfrom/archive.hpp"
#include "nbfrom/io.hpp"

namespace nbfrom {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr double kUniformU1 = 3000.0;
constexpr double kUniformRho = 0.01;
constexpr double kUniformT = 250.0;

fs::path dataset_dir(const CommandContext& ctx) { return ctx.out / "dataset"; }
fs::path model_dir(const CommandContext& ctx, const std::string& kind) { return ctx.out / "models" / kind; }

void say(const CommandContext& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << msg << '\n' << std::flush;
}

void check_kind(const std::string& kind, bool allow_oracle) {
  if (kind == "nbf" || kind == "onet" || (allow_oracle && kind == "oracle")) return;
  throw std::invalid_argument("unknown model kind '" + kind + "' (expected nbf, onet" +
                              std::string(allow_oracle ? " or oracle)" : ")"));
}

// Refuses to replace an existing output unless forced; forced directories are
// removed so no stale files survive.
void claim_output(const CommandContext& ctx, const fs::path& path) {
  if (!fs::exists(path)) return;
  if (!ctx.force) throw std::runtime_error(path.string() + " already exists (use --force to overwrite)");
  if (fs::is_directory(path)) fs::remove_all(path);
}

std::string param_tag(const ParamVector& p) { return format_double(p.mach) + "_" + format_double(p.altitude_km); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Loads the dataset after checking it was generated from this config.
Dataset open_dataset(const CommandContext& ctx) {
  const fs::path dir = dataset_dir(ctx);
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) throw std::runtime_error("no dataset at " + dir.string() + " (run generate first)");
  std::string stored;
  try {
    stored = json::parse(read_file(manifest)).at("dataset_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw std::runtime_error(manifest.string() + ": " + e.what());
  }
  const std::string expected = dataset_hash(ctx.config);
  if (stored != expected) {
    throw std::runtime_error("dataset at " + dir.string() + " was generated from a different config (hash " + stored +
                             ", config gives " + expected + ")");
  }
  return load_dataset(dir);
}

std::vector<std::size_t> ids_of(const Dataset& ds) {
  std::vector<std::size_t> ids;
  for (const FieldSnapshot& s : ds.snapshots) ids.push_back(s.id);
  return ids;
}

std::vector<FieldSnapshot> select(const Dataset& ds, const std::vector<std::size_t>& ids) {
  std::vector<FieldSnapshot> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(ds.by_id(id));
  return out;
}

struct LoadedModel {
  std::unique_ptr<Surrogate> model;
  std::vector<std::size_t> train_ids;
};

LoadedModel open_model(const CommandContext& ctx, const std::string& kind, const Dataset& ds) {
  LoadedModel out;
  if (kind == "oracle") {
    out.model = std::make_unique<OracleModel>(ds.snapshots, ds.mesh);
    out.train_ids = split(ids_of(ds), ctx.config.split).train_ids;
    return out;
  }
  const fs::path dir = model_dir(ctx, kind);
  ArchiveInfo info;
  if (kind == "nbf") {
    out.model = std::make_unique<NbfModel>(load_nbf_archive(dir, &info));
  } else {
    out.model = std::make_unique<OnetModel>(load_onet_archive(dir, &info));
  }
  const std::string mesh_hash = hex64(mesh_fingerprint(ds.mesh));
  if (info.mesh_points != ds.mesh.size() || info.mesh_hash != mesh_hash) {
    throw std::runtime_error("model at " + dir.string() + " was trained on a different mesh (" +
                             std::to_string(info.mesh_points) + " points, hash " + info.mesh_hash + ") than the dataset (" +
                             std::to_string(ds.mesh.size()) + " points, hash " + mesh_hash + ")");
  }
  out.train_ids = info.train_ids;
  return out;
}

}  // namespace

CommandContext make_context(const std::optional<fs::path>& config_path, const std::optional<fs::path>& out_override,
                            bool force, std::ostream* log) {
  CommandContext ctx;
  ctx.config = config_path ? load_config(*config_path) : parse_config("{}");
  ctx.out = out_override ? *out_override : fs::path(ctx.config.output_dir);
  if (ctx.out.empty()) throw std::invalid_argument("output directory is empty");
  ctx.force = force;
  ctx.log = log;
  return ctx;
}

ParamVector parse_param(const std::string& text) {
  const auto fields = split_csv(text);
  if (fields.size() != 2) throw std::invalid_argument("--param expects '<mach>,<alt_km>', got '" + text + "'");
  ParamVector p{parse_double(fields[0]), parse_double(fields[1])};
  validate(p);
  return p;
}

GridSpec parse_grid(const std::string& text) {
  const auto fields = split_csv(text);
  if (fields.size() != 5) throw std::invalid_argument("--grid expects 'x0,y0,nx,ny,h', got '" + text + "'");
  const auto count = [&](std::string_view f) {
    const double v = parse_double(f);
    if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw std::invalid_argument("--grid node counts must be positive integers, got '" + std::string(f) + "'");
    }
    return static_cast<std::size_t>(v);
  };
  return {parse_double(fields[0]), parse_double(fields[1]), count(fields[2]), count(fields[3]),
          parse_double(fields[4])};
}

fs::path cmd_generate(const CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  const fs::path dir = dataset_dir(ctx);
  claim_output(ctx, dir);
  const auto t0 = std::chrono::steady_clock::now();
  const Mesh mesh = sample_mesh(c.geometry, c.mesh_points, c.mesh_seed);
  const std::vector<ParamVector> grid = generate_param_grid(c.grid);
  std::vector<std::size_t> ids(grid.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const std::vector<FieldSnapshot> snaps = generate_snapshots(c.geometry, mesh, grid, ids);
  save_dataset(dir, mesh, snaps);
  json manifest = {{"dataset_hash", dataset_hash(c)},
                   {"mesh_points", mesh.size()},
                   {"mesh_hash", hex64(mesh_fingerprint(mesh))},
                   {"configs", snaps.size()}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  write_file_atomic(ctx.out / "config.json", config_to_json(c));
  say(ctx, "generated " + std::to_string(snaps.size()) + " configs on " + std::to_string(mesh.size()) +
               " mesh points in " + fixed(seconds_since(t0), 1) + " s -> " + dir.string());
  return dir;
}

fs::path cmd_train(const CommandContext& ctx, const std::string& kind) {
  check_kind(kind, false);
  const RunConfig& c = ctx.config;
  const Dataset ds = open_dataset(ctx);
  const fs::path dir = model_dir(ctx, kind);
  claim_output(ctx, dir);
  const Split sp = split(ids_of(ds), c.split);
  const std::vector<FieldSnapshot> train = select(ds, sp.train_ids);

  ArchiveInfo info;
  info.config_hash = config_hash(c);
  info.mesh_points = ds.mesh.size();
  info.mesh_hash = hex64(mesh_fingerprint(ds.mesh));
  info.train_ids = sp.train_ids;
  const auto t0 = std::chrono::steady_clock::now();
  if (kind == "nbf") {
    NbfTrainingLog log;
    const NbfModel model = train_nbf(ds.mesh, train, c.nbf_hyper(), c.nbf_seed, &log);
    info.seed = c.nbf_seed;
    info.epochs = c.nbf.basis.epochs;
    save_nbf_archive(dir, model, info, &log);
  } else {
    OnetTrainingLog log;
    const OnetModel model = train_onet(ds.mesh, train, c.onet_hyper(), c.onet_seed, &log);
    info.seed = c.onet_seed;
    info.epochs = c.onet.epochs;
    save_onet_archive(dir, model, info, &log);
  }
  say(ctx, "trained " + kind + " on " + std::to_string(train.size()) + " configs in " +
               fixed(seconds_since(t0), 1) + " s -> " + dir.string());
  return dir;
}

fs::path cmd_evaluate(const CommandContext& ctx, const std::string& kind, const std::string& which) {
  check_kind(kind, true);
  if (which != "train" && which != "eval") {
    throw std::invalid_argument("unknown split '" + which + "' (expected train or eval)");
  }
  const Dataset ds = open_dataset(ctx);
  const LoadedModel lm = open_model(ctx, kind, ds);
  const fs::path path = ctx.out / "reports" / (kind + "_" + which + ".json");
  claim_output(ctx, path);

  std::vector<std::size_t> ids;
  if (which == "train") {
    ids = lm.train_ids;
  } else {
    for (std::size_t id : ids_of(ds)) {
      if (std::find(lm.train_ids.begin(), lm.train_ids.end(), id) == lm.train_ids.end()) ids.push_back(id);
    }
  }
  const std::vector<FieldSnapshot> snaps = select(ds, ids);
  const EvalReport report = evaluate_model(*lm.model, ds.mesh, snaps, which);
  write_file_atomic(path, report_json(report));
  say(ctx, report_text(report) + "-> " + path.string());
  return path;
}

fs::path cmd_residuals(const CommandContext& ctx, const std::string& source, const std::string& kind,
                       const ParamVector& psi, const GridSpec& g) {
  if (source != "dataset" && source != "model" && source != "uniform") {
    throw std::invalid_argument("unknown residual source '" + source + "' (expected dataset, model or uniform)");
  }
  if (g.nx < 3 || g.ny < 3) {
    throw std::invalid_argument("residuals: grid must be at least 3 x 3, got " + std::to_string(g.nx) + " x " +
                                std::to_string(g.ny));
  }
  const ConeGeometry& geom = ctx.config.geometry;
  check_probe_grid(geom, g.x0, g.y0, g.nx, g.ny, g.h);
  std::string tag = source;
  ProbeGrid grid;
  if (source == "uniform") {
    grid = sample_probe_grid(geom, g.x0, g.y0, g.nx, g.ny, g.h,
                             [](Point) { return FlowState{kUniformU1, 0.0, kUniformRho, kUniformT}; });
  } else {
    const Dataset ds = open_dataset(ctx);
    find_snapshot(ds.snapshots, psi);
    if (source == "dataset") {
      grid = sample_probe_grid(geom, g.x0, g.y0, g.nx, g.ny, g.h,
                               [&](Point p) { return manufactured_state(geom, p, psi); });
    } else {
      check_kind(kind, false);
      tag = kind;
      const LoadedModel lm = open_model(ctx, kind, ds);
      grid = make_probe_grid(g.x0, g.y0, g.nx, g.ny, g.h, std::vector<FlowState>(g.nx * g.ny));
      const Mesh nodes = grid.as_mesh();
      const ParamVector configs[1] = {psi};
      for (Variable v : kAllVariables) {
        const DenseMatrix pred = lm.model->predict(nodes, configs, v);
        for (std::size_t n = 0; n < nodes.size(); ++n) {
          FlowState& s = grid.values[n];
          (v == Variable::U1 ? s.u1 : v == Variable::U2 ? s.u2 : v == Variable::Rho ? s.rho : s.T) = pred(n, 0);
        }
      }
    }
    tag += "_" + param_tag(psi);
  }
  const fs::path path = ctx.out / "residuals" / (tag + ".csv");
  claim_output(ctx, path);
  const ResidualField r = residuals(grid);
  save_residuals(path, grid, r);
  say(ctx, "wrote " + std::to_string(grid.size()) + " residual nodes -> " + path.string());
  return path;
}

std::vector<fs::path> cmd_export_plots(const CommandContext& ctx, const std::string& kind, const ParamVector& psi) {
  check_kind(kind, true);
  const Dataset ds = open_dataset(ctx);
  const FieldSnapshot& truth = find_snapshot(ds.snapshots, psi);
  const LoadedModel lm = open_model(ctx, kind, ds);
  std::vector<fs::path> paths;
  for (Variable v : kAllVariables) {
    paths.push_back(ctx.out / "plots" / (kind + "_" + param_tag(psi) + "_" + std::string(variable_name(v)) + ".csv"));
    claim_output(ctx, paths.back());
  }
  for (Variable v : kAllVariables) export_field(paths[index(v)], *lm.model, ds.mesh, truth, v);
  say(ctx, "wrote " + std::to_string(paths.size()) + " plot files for config " + std::to_string(truth.id) + " -> " +
               (ctx.out / "plots").string());
  return paths;
}

}  // namespace nbfrom
