#include "nbfrom/eval.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

#include "nbfrom/io.hpp"

namespace nbfrom {

double relative_error(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("relative_error: " + std::to_string(pred.size()) + " predictions for " +
                                std::to_string(truth.size()) + " true values");
  }
  if (truth.empty()) throw std::invalid_argument("relative_error: empty input");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double r = pred[i] - truth[i];
    num += r * r;
    den += truth[i] * truth[i];
  }
  if (den == 0.0) throw std::invalid_argument("relative_error: true field is identically zero");
  return std::sqrt(num / den);
}

ErrorStats summarize(std::span<const double> errors) {
  if (errors.empty()) return {};
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= static_cast<double>(errors.size());
  double sq = 0.0;
  for (double e : errors) sq += (e - mean) * (e - mean);
  return {mean, std::sqrt(sq / static_cast<double>(errors.size()))};
}

EvalReport evaluate_model(const Surrogate& model, const Mesh& mesh,
                          std::span<const FieldSnapshot> snapshots, const std::string& split) {
  if (snapshots.empty()) throw std::invalid_argument("evaluate_model: no configurations to evaluate");
  EvalReport report;
  report.model = model.kind();
  report.split = split;
  report.per_config.resize(snapshots.size());
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    report.per_config[k].id = snapshots[k].id;
    report.per_config[k].params = snapshots[k].params;
    if (snapshots[k].values.rows() != mesh.size()) {
      throw std::invalid_argument("evaluate_model: config " + std::to_string(snapshots[k].id) +
                                  " does not match the mesh");
    }
  }

  constexpr std::size_t kBlock = 32;
  std::vector<double> truth(mesh.size()), pred(mesh.size());
  for (Variable v : kAllVariables) {
    for (std::size_t start = 0; start < snapshots.size(); start += kBlock) {
      const std::size_t count = std::min(kBlock, snapshots.size() - start);
      std::vector<ParamVector> block;
      for (std::size_t k = 0; k < count; ++k) block.push_back(snapshots[start + k].params);
      DenseMatrix p;
      try {
        p = model.predict(mesh, block, v);
      } catch (const std::exception& e) {
        throw std::runtime_error("prediction failed for config " + std::to_string(snapshots[start].id) +
                                 (count > 1 ? " (block of " + std::to_string(count) + ")" : "") + ": " + e.what());
      }
      for (std::size_t k = 0; k < count; ++k) {
        const FieldSnapshot& snap = snapshots[start + k];
        for (std::size_t i = 0; i < mesh.size(); ++i) {
          truth[i] = snap.values(i, index(v));
          pred[i] = p(i, k);
        }
        double err;
        try {
          err = relative_error(pred, truth);
        } catch (const std::exception& e) {
          throw std::runtime_error("config " + std::to_string(snap.id) + ", " +
                                   std::string(variable_name(v)) + ": " + e.what());
        }
        report.per_config[start + k].error[index(v)] = err;
      }
    }
    std::vector<double> errs;
    for (const ConfigErrors& c : report.per_config) errs.push_back(c.error[index(v)]);
    report.variables[index(v)] = summarize(errs);
  }
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["model"] = report.model;
  j["split"] = report.split;
  j["configs"] = report.configs();
  nlohmann::ordered_json vars = nlohmann::ordered_json::object();
  for (Variable v : kAllVariables) {
    vars[std::string(variable_name(v))] = {{"mean", report.variables[index(v)].mean},
                                           {"std", report.variables[index(v)].std}};
  }
  j["variables"] = vars;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const ConfigErrors& c : report.per_config) {
    nlohmann::ordered_json row{{"id", c.id}, {"mach", c.params.mach}, {"altitude_km", c.params.altitude_km}};
    for (Variable v : kAllVariables) row[std::string(variable_name(v))] = c.error[index(v)];
    rows.push_back(row);
  }
  j["per_config"] = rows;
  return j.dump(2) + "\n";
}

std::string report_text(const EvalReport& report) {
  std::string out = "model " + report.model + ", split " + report.split + ", " +
                    std::to_string(report.configs()) + " configurations\n";
  char line[96];
  std::snprintf(line, sizeof line, "%-8s %14s %14s\n", "variable", "mean", "std");
  out += line;
  for (Variable v : kAllVariables) {
    const ErrorStats& s = report.variables[index(v)];
    std::snprintf(line, sizeof line, "%-8s %14.6g %14.6g\n", std::string(variable_name(v)).c_str(), s.mean, s.std);
    out += line;
  }
  return out;
}

const FieldSnapshot& find_snapshot(std::span<const FieldSnapshot> snapshots, const ParamVector& psi) {
  for (const FieldSnapshot& s : snapshots) {
    if (s.params == psi) return s;
  }
  throw std::out_of_range("no configuration with mach " + format_double(psi.mach) + " and altitude " +
                          format_double(psi.altitude_km) + " km in the dataset");
}

OracleModel::OracleModel(std::vector<FieldSnapshot> snapshots, Mesh mesh)
    : snapshots_(std::move(snapshots)), mesh_(std::move(mesh)) {}

DenseMatrix OracleModel::predict(const Mesh& mesh, std::span<const ParamVector> configs,
                                 Variable v) const {
  if (!(mesh == mesh_)) throw std::invalid_argument("oracle model: only the dataset mesh is known");
  DenseMatrix out(mesh.size(), configs.size());
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const FieldSnapshot& s = find_snapshot(snapshots_, configs[k]);
    for (std::size_t i = 0; i < mesh.size(); ++i) out(i, k) = s.values(i, index(v));
  }
  return out;
}

std::string field_csv(const Surrogate& model, const Mesh& mesh, const FieldSnapshot& truth,
                      Variable v) {
  if (truth.values.rows() != mesh.size()) throw std::invalid_argument("export_field: truth does not match the mesh");
  const ParamVector cfg[1] = {truth.params};
  const DenseMatrix pred = model.predict(mesh, cfg, v);
  std::string out = "x,y,true,pred,abs_err\n";
  out.reserve(mesh.size() * 100);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const double t = truth.values(i, index(v));
    const double p = pred(i, 0);
    for (double value : {mesh.points[i].x, mesh.points[i].y, t, p, std::fabs(p - t)}) {
      append_double(out, value);
      out += ',';
    }
    out.back() = '\n';
  }
  return out;
}

void export_field(const std::filesystem::path& path, const Surrogate& model, const Mesh& mesh,
                  const FieldSnapshot& truth, Variable v) {
  write_file_atomic(path, field_csv(model, mesh, truth, v));
}

}  // namespace nbfrom
