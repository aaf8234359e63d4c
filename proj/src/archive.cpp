#include "nbfrom/archive.hpp"

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "nbfrom/io.hpp"

namespace nbfrom {

using json = nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

std::string var(Variable v) { return std::string(variable_name(v)); }

std::string net_file(const std::string& prefix, Variable v, std::size_t j) {
  return prefix + "_" + var(v) + "_" + std::to_string(j) + ".bin";
}

void append_stats(std::string& out, const std::string& name, double mean, double std) {
  out += name;
  out += ' ';
  append_double(out, mean);
  out += ' ';
  append_double(out, std);
  out += '\n';
}

void save_normalizers(const std::filesystem::path& path,
                      const std::array<Normalizer, kNumVariables>& norms, const ParamNormalizer& p,
                      const CoordNormalizer& c) {
  std::string out = "# name [log] mean std\n";
  for (Variable v : kAllVariables) {
    const Normalizer& n = norms[index(v)];
    append_stats(out, var(v) + (n.log_transform ? " 1" : " 0"), n.mean, n.std);
  }
  append_stats(out, "mach", p.mach_mean, p.mach_std);
  append_stats(out, "altitude_km", p.alt_mean, p.alt_std);
  append_stats(out, "x", c.x_mean, c.x_std);
  append_stats(out, "y", c.y_mean, c.y_std);
  write_file_atomic(path, out);
}

void load_normalizers(const std::filesystem::path& path, std::array<Normalizer, kNumVariables>& norms,
                      ParamNormalizer& p, CoordNormalizer& c) {
  LineReader reader(path);
  std::string_view line;
  std::size_t seen = 0;
  while (reader.next(line)) {
    if (line.starts_with('#')) continue;
    std::vector<std::string_view> tok;
    for (std::size_t pos = 0; pos < line.size();) {
      const std::size_t end = std::min(line.find(' ', pos), line.size());
      if (end > pos) tok.push_back(line.substr(pos, end - pos));
      pos = end + 1;
    }
    const auto number = [&](std::size_t i) {
      if (i >= tok.size()) reader.fail("missing value");
      try {
        return parse_double(tok[i]);
      } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
      }
    };
    if (tok.empty()) reader.fail("empty entry");
    if (const auto v = parse_variable(tok[0])) {
      if (tok.size() != 4 || (tok[1] != "0" && tok[1] != "1")) reader.fail("expected '<var> <0|1> <mean> <std>'");
      norms[index(*v)] = {tok[1] == "1", number(2), number(3)};
    } else if (tok[0] == "mach") {
      p.mach_mean = number(1), p.mach_std = number(2);
    } else if (tok[0] == "altitude_km") {
      p.alt_mean = number(1), p.alt_std = number(2);
    } else if (tok[0] == "x") {
      c.x_mean = number(1), c.x_std = number(2);
    } else if (tok[0] == "y") {
      c.y_mean = number(1), c.y_std = number(2);
    } else {
      reader.fail("unknown entry '" + std::string(tok[0]) + "'");
    }
    ++seen;
  }
  if (seen != kNumVariables + 4) reader.fail("expected " + std::to_string(kNumVariables + 4) + " entries");
}

void save_series(const std::filesystem::path& path, const std::vector<std::vector<double>>& columns,
                 const std::string& header) {
  std::string out = "epoch," + header + "\n";
  std::size_t rows = 0;
  for (const auto& c : columns) rows = std::max(rows, c.size());
  for (std::size_t r = 0; r < rows; ++r) {
    out += std::to_string(r);
    for (const auto& c : columns) {
      out += ',';
      if (r < c.size()) append_double(out, c[r]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

json info_json(const ArchiveInfo& info) {
  return {{"kind", info.kind},
          {"format_version", kFormatVersion},
          {"config_hash", info.config_hash},
          {"seed", info.seed},
          {"mesh_points", info.mesh_points},
          {"mesh_hash", info.mesh_hash},
          {"train_ids", info.train_ids},
          {"n_bf", info.n_bf},
          {"epochs", info.epochs}};
}

json read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  if (!std::filesystem::exists(path)) throw std::runtime_error("no model archive at " + dir.string() + " (missing manifest.json)");
  try {
    json j = json::parse(read_file(path));
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw std::runtime_error("unsupported format_version");
    }
    return j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

ArchiveInfo info_from(const json& j) {
  ArchiveInfo info;
  info.kind = j.at("kind").get<std::string>();
  info.config_hash = j.at("config_hash").get<std::string>();
  info.seed = j.at("seed").get<std::uint64_t>();
  info.mesh_points = j.at("mesh_points").get<std::size_t>();
  info.mesh_hash = j.at("mesh_hash").get<std::string>();
  info.train_ids = j.at("train_ids").get<std::vector<std::size_t>>();
  info.n_bf = j.at("n_bf").get<std::size_t>();
  info.epochs = j.at("epochs").get<std::size_t>();
  return info;
}

}  // namespace

ArchiveInfo read_archive_info(const std::filesystem::path& dir) {
  const json j = read_manifest(dir);
  try {
    return info_from(j);
  } catch (const json::exception& e) {
    throw std::runtime_error((dir / "manifest.json").string() + ": " + e.what());
  }
}

void save_nbf_archive(const std::filesystem::path& dir, const NbfModel& model, ArchiveInfo info,
                      const NbfTrainingLog* log) {
  info.kind = "nbf";
  info.n_bf = model.vars[0].coef.size();
  json j = info_json(info);
  json vars = json::object();
  for (Variable v : kAllVariables) {
    const NbfVariableModel& m = model.vars[index(v)];
    vars[var(v)] = {{"n_bf", m.coef.size()},
                    {"phi_target_scale", m.phi.target_scale},
                    {"coef_scale", m.coef_scale},
                    {"singular_values", m.basis.singular_values},
                    {"basis_mse", m.phi.final_mse}};
    save_basis(dir / ("basis_" + var(v) + ".csv"), m.basis);
    for (std::size_t k = 0; k < m.phi.networks.size(); ++k) save_network(dir / net_file("phi", v, k), m.phi.networks[k]);
    for (std::size_t k = 0; k < m.coef.size(); ++k) save_network(dir / net_file("coef", v, k), m.coef[k]);
    if (log) {
      const CoefficientLog& c = log->coef[index(v)];
      std::string header;
      for (std::size_t k = 0; k < c.pretrain.size(); ++k) header += (k ? ",c" : "c") + std::to_string(k);
      save_series(dir / ("loss_pretrain_" + var(v) + ".csv"), c.pretrain, header);
      save_series(dir / ("loss_finetune_" + var(v) + ".csv"), {c.finetune}, "loss");
    }
  }
  j["variables"] = vars;
  save_normalizers(dir / "normalizers.txt", model.normalizers, model.params, model.coords);
  write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

NbfModel load_nbf_archive(const std::filesystem::path& dir, ArchiveInfo* info_out) {
  const json j = read_manifest(dir);
  NbfModel model;
  try {
    const ArchiveInfo info = info_from(j);
    if (info.kind != "nbf") throw std::runtime_error("archive holds a '" + info.kind + "' model, not nbf");
    load_normalizers(dir / "normalizers.txt", model.normalizers, model.params, model.coords);
    for (Variable v : kAllVariables) {
      const json& jv = j.at("variables").at(var(v));
      NbfVariableModel& m = model.vars[index(v)];
      m.variable = v;
      const auto n_bf = jv.at("n_bf").get<std::size_t>();
      m.basis = load_basis(dir / ("basis_" + var(v) + ".csv"), v);
      m.basis.singular_values = jv.at("singular_values").get<std::vector<double>>();
      m.phi.target_scale = jv.at("phi_target_scale").get<double>();
      m.phi.final_mse = jv.at("basis_mse").get<std::vector<double>>();
      m.coef_scale = jv.at("coef_scale").get<double>();
      if (m.basis.n_bf() != n_bf) throw std::runtime_error("basis_" + var(v) + ".csv has the wrong column count");
      for (std::size_t k = 0; k < n_bf; ++k) {
        m.phi.networks.push_back(load_network(dir / net_file("phi", v, k)));
        m.coef.push_back(load_network(dir / net_file("coef", v, k)));
      }
    }
    if (info_out) *info_out = info;
  } catch (const json::exception& e) {
    throw std::runtime_error((dir / "manifest.json").string() + ": " + e.what());
  }
  return model;
}

void save_onet_archive(const std::filesystem::path& dir, const OnetModel& model, ArchiveInfo info,
                       const OnetTrainingLog* log) {
  info.kind = "onet";
  info.n_bf = 0;
  json j = info_json(info);
  j["latent"] = model.vars[0].fx.output_dim();
  for (Variable v : kAllVariables) {
    const OnetVariableModel& m = model.vars[index(v)];
    save_network(dir / ("fx_" + var(v) + ".bin"), m.fx);
    save_network(dir / ("fpsi_" + var(v) + ".bin"), m.fpsi);
    save_network(dir / ("fd_" + var(v) + ".bin"), m.fd);
    if (log) save_series(dir / ("loss_" + var(v) + ".csv"), {log->loss[index(v)]}, "loss");
  }
  save_normalizers(dir / "normalizers.txt", model.normalizers, model.params, model.coords);
  write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

OnetModel load_onet_archive(const std::filesystem::path& dir, ArchiveInfo* info_out) {
  const json j = read_manifest(dir);
  OnetModel model;
  try {
    const ArchiveInfo info = info_from(j);
    if (info.kind != "onet") throw std::runtime_error("archive holds a '" + info.kind + "' model, not onet");
    load_normalizers(dir / "normalizers.txt", model.normalizers, model.params, model.coords);
    for (Variable v : kAllVariables) {
      OnetVariableModel& m = model.vars[index(v)];
      m.fx = load_network(dir / ("fx_" + var(v) + ".bin"));
      m.fpsi = load_network(dir / ("fpsi_" + var(v) + ".bin"));
      m.fd = load_network(dir / ("fd_" + var(v) + ".bin"));
      m.validate();
    }
    if (info_out) *info_out = info;
  } catch (const json::exception& e) {
    throw std::runtime_error((dir / "manifest.json").string() + ": " + e.what());
  }
  return model;
}

}  // namespace nbfrom
