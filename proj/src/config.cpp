#include "nbfrom/config.hpp"

#include <set>
#include <stdexcept>

#include "json.hpp"
#include "nbfrom/io.hpp"

namespace nbfrom {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void schema_error(std::string_view source, const std::string& key, const std::string& what) {
  throw std::invalid_argument(std::string(source) + ": '" + key + "' " + what);
}

// Walks one JSON object, reading optional keys and rejecting unknown ones.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string prefix, std::string_view source)
      : j_(j), prefix_(std::move(prefix)), source_(source) {
    if (!j_.is_object()) {
      if (prefix_.empty()) throw std::invalid_argument(std::string(source_) + ": top level must be an object");
      schema_error(source_, prefix_, "must be an object");
    }
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) schema_error(source_, path(key), "is not a recognised key");
    }
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) schema_error(source_, path(key), "must be a number");
      out = v->get<double>();
    }
  }

  template <class T>
  void integer(const std::string& key, T& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0)) {
        schema_error(source_, path(key), "must be a non-negative integer");
      }
      out = static_cast<T>(v->get<std::uint64_t>());
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) schema_error(source_, path(key), "must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) schema_error(source_, path(key), "must be a string");
      out = v->get<std::string>();
    }
  }

  template <class F>
  void object(const std::string& key, F&& f) {
    if (const json* v = find(key)) {
      ObjectReader sub(*v, path(key), source_);
      f(sub);
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::string_view source_;
  std::set<std::string> seen_;
};

void read_schedule(ObjectReader& r, StepLrSchedule& s) {
  r.number("lr", s.initial_lr);
  r.integer("lr_step", s.step_size);
  r.number("lr_gamma", s.gamma);
}

void read_network(ObjectReader& r, NetworkHyper& h) {
  r.integer("hidden_units", h.hidden_units);
  r.integer("hidden_layers", h.hidden_layers);
  r.integer("epochs", h.epochs);
  r.integer("batch_size", h.batch_size);
  read_schedule(r, h.schedule);
}

json schedule_json(const StepLrSchedule& s) {
  return {{"lr", s.initial_lr}, {"lr_step", s.step_size}, {"lr_gamma", s.gamma}};
}

json network_json(const NetworkHyper& h) {
  json j = {{"hidden_units", h.hidden_units},
            {"hidden_layers", h.hidden_layers},
            {"epochs", h.epochs},
            {"batch_size", h.batch_size}};
  j.update(schedule_json(h.schedule));
  return j;
}

json dataset_json(const RunConfig& c) {
  const ConeGeometry& g = c.geometry;
  return {{"geometry",
           {{"nose_radius", g.nose_radius},
            {"half_cone_angle_deg", g.half_cone_angle_deg},
            {"body_length", g.body_length},
            {"upstream_extent", g.upstream_extent},
            {"radial_extent", g.radial_extent}}},
          {"mesh", {{"points", c.mesh_points}, {"seed", c.mesh_seed}}},
          {"grid",
           {{"mach_start", c.grid.mach_start},
            {"mach_step", c.grid.mach_step},
            {"mach_count", c.grid.mach_count},
            {"alt_start_km", c.grid.alt_start_km},
            {"alt_step_km", c.grid.alt_step_km},
            {"alt_count", c.grid.alt_count}}}};
}

json full_json(const RunConfig& c) {
  json j = dataset_json(c);
  j["split"] = {{"n_train", c.split.n_train}, {"seed", c.split.seed}};
  json logs = json::object();
  for (Variable v : kAllVariables) logs[std::string(variable_name(v))] = c.log_flags[index(v)];
  j["normalization"] = {{"log", logs}};
  json finetune = {{"epochs", c.nbf.finetune_epochs}, {"batch_size", c.nbf.finetune_batch}};
  finetune.update(schedule_json(c.nbf.finetune_schedule));
  j["nbf"] = {{"seed", c.nbf_seed},
              {"n_bf", c.nbf.n_bf},
              {"basis", network_json(c.nbf.basis)},
              {"coef", network_json(c.nbf.coef)},
              {"pretrain", c.nbf.pretrain},
              {"finetune", finetune}};
  json onet = {{"seed", c.onet_seed},
               {"latent", c.onet.latent},
               {"encoder_units", c.onet.encoder_units},
               {"encoder_layers", c.onet.encoder_layers},
               {"decoder_units", c.onet.decoder_units},
               {"decoder_layers", c.onet.decoder_layers},
               {"epochs", c.onet.epochs},
               {"batch_size", c.onet.batch_size}};
  onet.update(schedule_json(c.onet.schedule));
  onet["weight_decay"] = c.onet.weight_decay;
  j["onet"] = onet;
  return j;
}

}  // namespace

NbfHyper RunConfig::nbf_hyper() const {
  NbfHyper h = nbf;
  h.log_flags = log_flags;
  return h;
}

OnetHyper RunConfig::onet_hyper() const {
  OnetHyper h = onet;
  h.log_flags = log_flags;
  return h;
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  geometry.validate();
  grid.validate();
  if (mesh_points < 3) fail("mesh.points must be at least 3");
  const std::size_t configs = grid.mach_count * grid.alt_count;
  if (split.n_train < 1 || split.n_train >= configs) {
    fail("split.n_train must be in [1, " + std::to_string(configs - 1) + "] for a grid of " + std::to_string(configs) +
         " configs");
  }
  if (nbf.n_bf < 1 || nbf.n_bf > std::min(mesh_points, split.n_train)) {
    fail("nbf.n_bf must be in [1, min(mesh.points, split.n_train)]");
  }
  for (const auto& [name, h] : {std::pair{"nbf.basis", nbf.basis}, std::pair{"nbf.coef", nbf.coef}}) {
    if (h.hidden_units < 1) fail(std::string(name) + ".hidden_units must be positive");
    if (h.schedule.step_size < 1) fail(std::string(name) + ".lr_step must be positive");
  }
  if (nbf.finetune_schedule.step_size < 1 || onet.schedule.step_size < 1) fail("lr_step must be positive");
  if (onet.latent < 1 || onet.encoder_units < 1 || onet.decoder_units < 1) fail("onet widths must be positive");
}

RunConfig parse_config(std::string_view text, std::string_view source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string(source) + ": " + e.what());
  }
  RunConfig c;
  {
    ObjectReader r(j, "", source);
    r.object("geometry", [&](ObjectReader& g) {
      g.number("nose_radius", c.geometry.nose_radius);
      g.number("half_cone_angle_deg", c.geometry.half_cone_angle_deg);
      g.number("body_length", c.geometry.body_length);
      g.number("upstream_extent", c.geometry.upstream_extent);
      g.number("radial_extent", c.geometry.radial_extent);
    });
    r.object("mesh", [&](ObjectReader& m) {
      m.integer("points", c.mesh_points);
      m.integer("seed", c.mesh_seed);
    });
    r.object("grid", [&](ObjectReader& g) {
      g.number("mach_start", c.grid.mach_start);
      g.number("mach_step", c.grid.mach_step);
      g.integer("mach_count", c.grid.mach_count);
      g.number("alt_start_km", c.grid.alt_start_km);
      g.number("alt_step_km", c.grid.alt_step_km);
      g.integer("alt_count", c.grid.alt_count);
    });
    r.object("split", [&](ObjectReader& s) {
      s.integer("n_train", c.split.n_train);
      s.integer("seed", c.split.seed);
    });
    r.object("normalization", [&](ObjectReader& n) {
      n.object("log", [&](ObjectReader& l) {
        for (Variable v : kAllVariables) l.boolean(std::string(variable_name(v)), c.log_flags[index(v)]);
      });
    });
    r.object("nbf", [&](ObjectReader& n) {
      n.integer("seed", c.nbf_seed);
      n.integer("n_bf", c.nbf.n_bf);
      n.object("basis", [&](ObjectReader& b) { read_network(b, c.nbf.basis); });
      n.object("coef", [&](ObjectReader& b) { read_network(b, c.nbf.coef); });
      n.boolean("pretrain", c.nbf.pretrain);
      n.object("finetune", [&](ObjectReader& f) {
        f.integer("epochs", c.nbf.finetune_epochs);
        f.integer("batch_size", c.nbf.finetune_batch);
        read_schedule(f, c.nbf.finetune_schedule);
      });
    });
    r.object("onet", [&](ObjectReader& o) {
      o.integer("seed", c.onet_seed);
      o.integer("latent", c.onet.latent);
      o.integer("encoder_units", c.onet.encoder_units);
      o.integer("encoder_layers", c.onet.encoder_layers);
      o.integer("decoder_units", c.onet.decoder_units);
      o.integer("decoder_layers", c.onet.decoder_layers);
      o.integer("epochs", c.onet.epochs);
      o.integer("batch_size", c.onet.batch_size);
      read_schedule(o, c.onet.schedule);
      o.number("weight_decay", c.onet.weight_decay);
    });
    r.string("output_dir", c.output_dir);
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    if (msg.starts_with("config: ")) msg.erase(0, 8);
    throw std::invalid_argument(std::string(source) + ": " + msg);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

std::string config_to_json(const RunConfig& config) {
  json j = full_json(config);
  j["output_dir"] = config.output_dir;
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) { return hex64(fnv1a(full_json(config).dump())); }

std::string dataset_hash(const RunConfig& config) { return hex64(fnv1a(dataset_json(config).dump())); }

}  // namespace nbfrom
