#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "nbfrom/archive.hpp"
#include "nbfrom/cli.hpp"
#include "nbfrom/config.hpp"
#include "nbfrom/io.hpp"

using namespace nbfrom;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "mesh": {"points": 200, "seed": 4},
  "grid": {"mach_count": 4, "alt_count": 3},
  "split": {"n_train": 5, "seed": 2},
  "nbf": {"n_bf": 3, "basis": {"hidden_units": 8, "hidden_layers": 2, "epochs": 4, "batch_size": 50},
          "coef": {"hidden_units": 8, "hidden_layers": 2, "epochs": 30}},
  "onet": {"latent": 8, "encoder_units": 8, "decoder_units": 16, "decoder_layers": 1, "epochs": 2, "batch_size": 100}
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nbfrom_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

CommandContext tiny(const fs::path& out, const char* text = kTinyConfig) {
  CommandContext ctx;
  ctx.config = parse_config(text);
  ctx.out = out;
  return ctx;
}

std::string error_of(const auto& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("default config carries the published hyperparameters") {
  const RunConfig c = parse_config("{}");
  CHECK(c.nbf.n_bf == 10);
  CHECK(c.nbf.basis.hidden_units == 40);
  CHECK(c.nbf.basis.hidden_layers == 7);
  CHECK(c.nbf.basis.epochs == 100);
  CHECK(c.nbf.basis.schedule.step_size == 45);
  CHECK(c.nbf.basis.schedule.gamma == 0.9);
  CHECK(c.nbf.coef.hidden_units == 100);
  CHECK(c.nbf.coef.epochs == 10000);
  CHECK(c.nbf.coef.schedule.step_size == 800);
  CHECK(c.nbf.finetune_epochs == 1);
  CHECK(c.nbf.finetune_schedule.step_size == 8);
  CHECK(c.nbf.finetune_schedule.gamma == 0.1);
  CHECK(c.nbf.finetune_schedule.initial_lr == 1e-5);
  CHECK(c.onet.epochs == 97);
  CHECK(c.onet.decoder_units == 256);
  CHECK(c.onet.weight_decay == 1e-4);
  CHECK(c.split.n_train == 10);
  CHECK(c.log_flags == std::array<bool, 4>{false, false, true, false});
  CHECK(generate_param_grid(c.grid).size() == 441);
}

TEST_CASE("config values override defaults and round trip") {
  const RunConfig c = parse_config(kTinyConfig);
  CHECK(c.mesh_points == 200);
  CHECK(c.nbf.basis.batch_size == 50);
  CHECK(c.nbf.basis.hidden_units == 8);
  CHECK(c.onet.latent == 8);
  const RunConfig again = parse_config(config_to_json(c));
  CHECK(config_to_json(again) == config_to_json(c));
  CHECK(config_hash(again) == config_hash(c));
  CHECK(config_hash(c) != config_hash(parse_config("{}")));
  RunConfig moved = c;
  moved.output_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  moved.nbf_seed += 1;
  CHECK(config_hash(moved) != config_hash(c));
  CHECK(dataset_hash(moved) == dataset_hash(c));
}

TEST_CASE("config schema errors name the key") {
  CHECK(error_of([] { parse_config(R"({"nbf": {"epochs": 3}})"); }).find("'nbf.epochs' is not a recognised key") !=
        std::string::npos);
  CHECK(error_of([] { parse_config(R"({"mesh": {"points": "many"}})"); }).find("'mesh.points'") != std::string::npos);
  CHECK(error_of([] { parse_config(R"({"mesh": {"points": -3}})"); }).find("non-negative integer") !=
        std::string::npos);
  CHECK(error_of([] { parse_config(R"({"normalization": {"log": {"rho": 1}}})"); }).find("true or false") !=
        std::string::npos);
  CHECK(error_of([] { parse_config(R"({"split": {"n_train": 441}})"); }).find("split.n_train") != std::string::npos);
  CHECK(error_of([] { parse_config(R"([1, 2])"); }).find("object") != std::string::npos);
  CHECK(error_of([] { parse_config("{", "run.json"); }).find("run.json") == 0);
  CHECK_THROWS(parse_config(R"({"geometry": {"half_cone_angle_deg": 95}})"));
}

TEST_CASE("parameter and grid flags parse strictly") {
  const ParamVector p = parse_param("15,26");
  CHECK(p.mach == 15.0);
  CHECK(p.altitude_km == 26.0);
  CHECK_THROWS(parse_param("15"));
  CHECK_THROWS(parse_param("15,x"));
  const GridSpec g = parse_grid("-0.2,0.05,11,9,0.01");
  CHECK(g.nx == 11);
  CHECK(g.ny == 9);
  CHECK(g.h == 0.01);
  CHECK_THROWS(parse_grid("0,0,2.5,3,0.1"));
  CHECK_THROWS(parse_grid("0,0,3,3"));
}

TEST_CASE("generate writes a reproducible dataset") {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  cmd_generate(tiny(a));
  cmd_generate(tiny(b));
  const Dataset ds = load_dataset(a / "dataset");
  CHECK(ds.mesh.size() == 200);
  CHECK(ds.snapshots.size() == 12);
  for (const char* f : {"mesh.csv", "params.csv", "fields/0.csv", "fields/11.csv", "manifest.json"}) {
    CHECK(read_file(a / "dataset" / f) == read_file(b / "dataset" / f));
  }
  CHECK(error_of([&] { cmd_generate(tiny(a)); }).find("--force") != std::string::npos);
  CommandContext forced = tiny(a);
  forced.force = true;
  CHECK_NOTHROW(cmd_generate(forced));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("pipeline runs end to end and is byte-for-byte reproducible") {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  for (const fs::path& dir : {a, b}) {
    const CommandContext ctx = tiny(dir);
    cmd_generate(ctx);
    cmd_train(ctx, "nbf");
    cmd_train(ctx, "onet");
    cmd_evaluate(ctx, "nbf", "eval");
    cmd_evaluate(ctx, "nbf", "train");
    cmd_evaluate(ctx, "onet", "eval");
    cmd_evaluate(ctx, "oracle", "eval");
  }
  for (const char* f : {"nbf_eval.json", "nbf_train.json", "onet_eval.json", "oracle_eval.json"}) {
    CHECK(read_file(a / "reports" / f) == read_file(b / "reports" / f));
  }
  for (const char* f : {"manifest.json", "normalizers.txt", "basis_rho.csv", "coef_T_2.bin", "phi_u1_0.bin"}) {
    CHECK(read_file(a / "models/nbf" / f) == read_file(b / "models/nbf" / f));
  }

  const auto report = nlohmann::json::parse(read_file(a / "reports/nbf_eval.json"));
  CHECK(report["configs"] == 7);
  CHECK(report["variables"].size() == 4);
  CHECK(nlohmann::json::parse(read_file(a / "reports/nbf_train.json"))["configs"] == 5);
  const auto oracle = nlohmann::json::parse(read_file(a / "reports/oracle_eval.json"));
  for (const char* v : {"u1", "u2", "rho", "T"}) CHECK(oracle["variables"][v]["mean"] == 0.0);

  const auto manifest = nlohmann::json::parse(read_file(a / "models/nbf/manifest.json"));
  CHECK(manifest["n_bf"] == 3);
  CHECK(manifest["train_ids"].size() == 5);
  CHECK(manifest["config_hash"] == config_hash(parse_config(kTinyConfig)));
  CHECK(fs::exists(a / "models/nbf/phi_T_2.bin"));
  CHECK(fs::exists(a / "models/nbf/loss_pretrain_rho.csv"));
  CHECK(nlohmann::json::parse(read_file(a / "models/onet/manifest.json"))["epochs"] == 2);
  CHECK(fs::exists(a / "models/onet/loss_u2.csv"));

  const CommandContext ctx = tiny(a);
  const auto plots = cmd_export_plots(ctx, "nbf", {11.0, 22.0});
  REQUIRE(plots.size() == 4);
  std::istringstream rows(read_file(plots[3]));
  std::size_t lines = 0;
  for (std::string line; std::getline(rows, line);) ++lines;
  CHECK(lines == 201);
  CHECK(error_of([&] { cmd_export_plots(ctx, "nbf", {11.5, 22.0}); }).find("11.5") != std::string::npos);

  const fs::path res = cmd_residuals(ctx, "dataset", "nbf", {11.0, 22.0}, {});
  CHECK(res.filename() == "dataset_11_22.csv");
  CHECK(fs::exists(cmd_residuals(ctx, "model", "onet", {11.0, 22.0}, {})));
  CHECK(error_of([&] { cmd_residuals(ctx, "dataset", "nbf", {11.0, 22.0}, {-0.25, 0.02, 2, 2, 0.005}); })
            .find("3 x 3") != std::string::npos);
  CHECK(error_of([&] { cmd_residuals(ctx, "dataset", "nbf", {11.0, 22.0}, {0.0, 0.0, 4, 4, 0.05}); })
            .find("outside the domain") != std::string::npos);

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("uniform residual source gives zero continuity") {
  const fs::path dir = scratch("uniform");
  const fs::path path = cmd_residuals(tiny(dir), "uniform", "nbf", {15, 26}, {});
  std::istringstream rows(read_file(path));
  std::string line;
  std::getline(rows, line);
  std::size_t n = 0;
  while (std::getline(rows, line)) {
    CHECK(std::abs(parse_double(split_csv(line)[2])) < 1e-9);
    ++n;
  }
  CHECK(n == 41 * 41);
  fs::remove_all(dir);
}

TEST_CASE("mismatched artifacts are rejected") {
  const fs::path dir = scratch("mismatch");
  const CommandContext ctx = tiny(dir);
  CHECK(error_of([&] { cmd_train(ctx, "nbf"); }).find("run generate first") != std::string::npos);
  cmd_generate(ctx);
  CHECK(error_of([&] { cmd_train(ctx, "svm"); }).find("unknown model kind") != std::string::npos);
  CHECK(error_of([&] { cmd_evaluate(ctx, "nbf", "eval"); }).find("manifest.json") != std::string::npos);
  CHECK(error_of([&] { cmd_evaluate(ctx, "oracle", "test"); }).find("unknown split") != std::string::npos);
  cmd_train(ctx, "onet");

  // Same data config under a different mesh: the dataset check fires first.
  const std::string other = std::string(kTinyConfig).replace(std::string(kTinyConfig).find("\"seed\": 4"), 9, "\"seed\": 5");
  CommandContext moved = tiny(dir, other.c_str());
  CHECK(error_of([&] { cmd_train(moved, "nbf"); }).find("different config") != std::string::npos);

  // Regenerate with the new mesh, then evaluate the old archive against it.
  moved.force = true;
  cmd_generate(moved);
  CHECK(error_of([&] { cmd_evaluate(moved, "onet", "eval"); }).find("different mesh") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("archives reload to identical predictions") {
  const fs::path dir = scratch("archive");
  const CommandContext ctx = tiny(dir);
  cmd_generate(ctx);
  cmd_train(ctx, "nbf");
  cmd_train(ctx, "onet");
  const Dataset ds = load_dataset(dir / "dataset");
  ArchiveInfo info;
  const NbfModel nbf = load_nbf_archive(dir / "models/nbf", &info);
  CHECK(info.kind == "nbf");
  CHECK(info.mesh_points == 200);
  const ParamVector cfg[2] = {{12, 24}, {13, 22}};
  const fs::path copy = dir / "copy";
  save_nbf_archive(copy, nbf, info);
  const NbfModel again = load_nbf_archive(copy);
  for (Variable v : kAllVariables) CHECK(nbf.predict(ds.mesh, cfg, v) == again.predict(ds.mesh, cfg, v));
  CHECK(read_archive_info(dir / "models/onet").kind == "onet");
  CHECK_THROWS(load_onet_archive(dir / "models/nbf"));
  fs::remove(dir / "models/nbf/coef_u2_1.bin");
  CHECK_THROWS(load_nbf_archive(dir / "models/nbf"));
  fs::remove_all(dir);
}
