// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criteria may be selected by number on the command line; the path
// to the nbfrom executable is passed with --cli for the end-to-end run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "expansion.hpp"
#include "metric_cases.hpp"
#include "nbfrom/dataset.hpp"
#include "nbfrom/eval.hpp"
#include "nbfrom/io.hpp"
#include "nbfrom/linalg.hpp"
#include "nbfrom/nbf.hpp"
#include "nbfrom/neural.hpp"
#include "nbfrom/onet.hpp"
#include "nbfrom/physics.hpp"
#include "nbfrom/pod.hpp"
#include "nbfrom/random.hpp"
#include "oracles.hpp"

using namespace nbfrom;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. thin_svd against Gram-matrix Jacobi eigenvalues.
Outcome svd_oracle() {
  Rng rng(101);
  double worst_sv = 0.0, worst_rec = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(12);
    const std::size_t m = n + rng.below(501 - n);
    DenseMatrix a(m, n);
    for (double& v : a.data()) v = rng.uniform(-1.0, 1.0);
    const SvdResult s = thin_svd(a);
    std::vector<double> gram(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t r = 0; r < m; ++r) gram[i * n + j] += a(r, i) * a(r, j);
    const std::vector<double> eig = oracle::jacobi_eigenvalues(gram, n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ref = std::sqrt(std::max(eig[i], 0.0));
      worst_sv = std::max(worst_sv, std::abs(s.sigma[i] - ref) / ref);
    }
    DenseMatrix us = s.u;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) us(r, c) *= s.sigma[c];
    const DenseMatrix rec = matmul(us, s.vt);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) diff += std::pow(rec.data()[i] - a.data()[i], 2);
    worst_rec = std::max(worst_rec, std::sqrt(diff) / frobenius_norm(a));
  }
  return {worst_sv <= 1e-10 && worst_rec <= 1e-8,
          "max singular-value rel err " + sci(worst_sv) + " (<= 1e-10), max reconstruction " + sci(worst_rec) +
              " (<= 1e-8)"};
}

double loss_at(Mlp net, const std::vector<double>& p, const DenseMatrix& x, const DenseMatrix& y) {
  std::copy(p.begin(), p.end(), net.parameters().begin());
  return mse_loss(net, x, y);
}

// 2. Backprop against central differences.
Outcome gradients() {
  Rng rng(202);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<std::size_t> sizes{1 + rng.below(3)};
    const std::size_t hidden = 1 + rng.below(3);
    for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(1 + rng.below(8));
    sizes.push_back(1 + rng.below(2));
    Mlp net = init_network(sizes, rng.next());
    for (double& b : net.parameters()) b += 0.1 * rng.uniform(-1.0, 1.0);
    const std::size_t batch = 1 + rng.below(6);
    DenseMatrix x(batch, sizes.front()), y(batch, sizes.back());
    for (double& v : x.data()) v = rng.uniform(-1.5, 1.5);
    for (double& v : y.data()) v = rng.uniform(-1.0, 1.0);
    std::vector<double> analytic(net.parameter_count());
    mse_gradient(net, x, y, analytic);
    const std::vector<double> params(net.parameters().begin(), net.parameters().end());
    const auto numeric = oracle::central_difference_gradient(
        [&](const std::vector<double>& p) { return loss_at(net, p, x, y); }, params, 1e-6);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-3});
      worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
      ++checked;
    }
  }
  return {worst <= 1e-6, std::to_string(checked) + " components, max rel diff " + sci(worst) +
                             " (<= 1e-6, magnitudes floored at 1e-3)"};
}

// 3. First Adam step against the bias-corrected closed form.
Outcome adam_closed_form() {
  Rng rng(303);
  double worst = 0.0;
  const AdamOptions opts;
  for (int t = 0; t < 1000; ++t) {
    const double p0 = rng.uniform(-5.0, 5.0);
    const double g = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-6.0, 2.0));
    const double lr = std::pow(10.0, rng.uniform(-5.0, -1.0));
    std::vector<double> p{p0};
    AdamState s(1);
    adam_step(s, p, std::vector<double>{g}, lr, opts);
    const double m_hat = (1.0 - opts.beta1) * g / (1.0 - opts.beta1);
    const double v_hat = (1.0 - opts.beta2) * g * g / (1.0 - opts.beta2);
    const double expected = p0 - lr * m_hat / (std::sqrt(v_hat) + opts.epsilon);
    worst = std::max(worst, std::abs(p[0] - expected));
  }
  return {worst <= 1e-12, "1000 cases, max abs diff " + sci(worst) + " (<= 1e-12)"};
}

struct DefaultData {
  ConeGeometry geom;
  Mesh mesh;
  std::vector<ParamVector> grid;
  Split sp;
};

DefaultData default_data() {
  DefaultData d;
  d.mesh = sample_mesh(d.geom, 2000, 1);
  d.grid = generate_param_grid();
  d.sp = split(d.grid.size(), {10, 1});
  return d;
}

// 4. n_bf = D reproduces every training column.
Outcome pod_completeness() {
  const DefaultData d = default_data();
  const auto train = generate_snapshots(d.geom, d.mesh, d.grid, d.sp.train_ids);
  const auto norms = fit_normalizers(train, {false, false, true, false});
  double worst = 0.0;
  for (Variable v : kAllVariables) {
    const DenseMatrix w = assemble_snapshot_matrix(train, v, norms[index(v)]);
    const PodBasis b = extract_basis(w, w.cols(), v);
    const DenseMatrix rec = reconstruct(b, projection_coefficients(b, w));
    for (std::size_t c = 0; c < w.cols(); ++c) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) {
        num += std::pow(rec(i, c) - w(i, c), 2);
        den += w(i, c) * w(i, c);
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
  }
  return {worst <= 1e-8, "N=2000, D=10, max column rel err " + sci(worst) + " (<= 1e-8)"};
}

std::string errors_line(const EvalReport& r) {
  std::string s;
  for (Variable v : kAllVariables) {
    s += std::string(s.empty() ? "" : " ") + std::string(variable_name(v)) + " " + sci(r.variables[index(v)].mean);
  }
  return s;
}

// 5. Three-term expansion data recovered by NBF.
Outcome expansion_recovery() {
  const ConeGeometry geom;
  const Mesh mesh = sample_mesh(geom, 2000, 5);
  const std::vector<ParamVector> grid = generate_param_grid();
  // Training configs span the parameter box (corners, edge midpoints, two
  // interior points) so held-out configs are interpolated.
  const double design[10][2] = {{10, 20}, {30, 20}, {10, 60}, {30, 60}, {20, 20},
                                {20, 60}, {10, 40}, {30, 40}, {16, 32}, {24, 48}};
  std::vector<std::size_t> train_ids, rest;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    bool chosen = false;
    for (const auto& d : design) chosen = chosen || (grid[i].mach == d[0] && grid[i].altitude_km == d[1]);
    (chosen ? train_ids : rest).push_back(i);
  }
  const std::vector<std::size_t> eval_ids = split(rest, {50, 17}).train_ids;
  const auto train = oracle::expansion_snapshots(mesh, grid, train_ids);
  const auto eval = oracle::expansion_snapshots(mesh, grid, eval_ids);
  // Coefficient nets 100 x 2: the depth chosen on a separate draw (mesh seed 6,
  // other held-out configs). The 100 x 7 default is reported alongside.
  NbfHyper h;
  h.n_bf = 3;
  h.coef.hidden_layers = 2;
  const EvalReport r = evaluate_model(train_nbf(mesh, train, h, 23), mesh, eval, "eval");
  NbfHyper deep;
  deep.n_bf = 3;
  const EvalReport rd = evaluate_model(train_nbf(mesh, train, deep, 23), mesh, eval, "eval");
  bool ok = train.size() == 10 && r.configs() == 50;
  for (const ErrorStats& s : r.variables) ok = ok && s.mean < 0.02;
  return {ok, "n_bf=3, 10 train / " + std::to_string(r.configs()) + " eval, coef nets 100x2: mean rel err " +
                  errors_line(r) + " (each < 0.02); 100x7 reference: " + errors_line(rd)};
}

// 6. NBF beats DeepONet on most variables on the default manufactured data.
Outcome head_to_head() {
  const DefaultData d = default_data();
  const auto train = generate_snapshots(d.geom, d.mesh, d.grid, d.sp.train_ids);
  const auto eval = generate_snapshots(d.geom, d.mesh, d.grid, d.sp.eval_ids);
  const NbfModel nbf = train_nbf(d.mesh, train, NbfHyper{}, 7);
  const OnetModel onet = train_onet(d.mesh, train, OnetHyper{}, 7);
  const EvalReport rn = evaluate_model(nbf, d.mesh, eval, "eval");
  const EvalReport ro = evaluate_model(onet, d.mesh, eval, "eval");
  int wins = 0;
  for (Variable v : kAllVariables) wins += rn.variables[index(v)].mean < ro.variables[index(v)].mean;
  return {wins >= 3 && rn.configs() == 431,
          std::to_string(rn.configs()) + " eval configs, NBF [" + errors_line(rn) + "] vs DeepONet [" +
              errors_line(ro) + "], NBF lower on " + std::to_string(wins) + "/4 (>= 3)"};
}

// 7. Relative error on hand cases and under scaling.
Outcome metric() {
  double worst_case = 0.0, worst_scale = 0.0;
  for (const auto& c : oracle::metric_cases()) {
    worst_case = std::max(worst_case, std::abs(relative_error(c.pred, c.truth) - c.expected) / std::max(1.0, c.expected));
  }
  Rng rng(707);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(1 + rng.below(50)), q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = rng.uniform(-3.0, 3.0);
      q[i] = rng.uniform(-3.0, 3.0) + 4.0;
    }
    const double c = std::pow(10.0, rng.uniform(-6.0, 6.0)) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    std::vector<double> cp(p), cq(q);
    for (double& x : cp) x *= c;
    for (double& x : cq) x *= c;
    const double base = relative_error(p, q);
    worst_scale = std::max(worst_scale, std::abs(relative_error(cp, cq) - base) / std::max(1.0, base));
  }
  return {worst_case <= 1e-12 && worst_scale <= 1e-12,
          "20 hand cases max err " + sci(worst_case) + ", scale invariance max err " + sci(worst_scale) +
              " (both <= 1e-12)"};
}

// 8. Gas constants, continuity of a linear field and FD convergence order.
Outcome physics() {
  const bool constants = sutherland_viscosity(273.11) == 1.716e-5 && sutherland_conductivity(273.11) == 2.41e-2;
  const auto grid_of = [](double x0, double y0, std::size_t n, double h, auto f) {
    std::vector<FlowState> values;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) values.push_back(f(x0 + double(i) * h, y0 + double(j) * h));
    return make_probe_grid(x0, y0, n, n, h, values);
  };
  double linear = 0.0;
  for (double x : residuals(grid_of(-0.2, 0.1, 11, 0.02, [](double x, double y) {
                    return FlowState{0.5 * y + 2.0, x - 1.0, 1.2, 300.0};
                  })).continuity) {
    linear = std::max(linear, std::abs(x));
  }
  const auto smooth = [](double x, double y) {
    const double rho = 1.0 + 0.2 * std::cos(x + 2.0 * y);
    const double px = 2.0 * std::cos(2.0 * x) * std::cos(y) + 0.3 * y;
    const double py = -std::sin(2.0 * x) * std::sin(y) + 0.3 * x + 1.0;
    return FlowState{py / rho, -px / rho, rho, 300.0 + 40.0 * std::sin(x) * std::cos(1.5 * y)};
  };
  std::vector<double> cont;
  for (int level = 0; level < 3; ++level) {
    const double h = 0.04 / double(1 << level);
    const std::size_t m = 4u << level;
    const ResidualField r = residuals(grid_of(0.4 - double(m) * h, 0.3 - double(m) * h, 2 * m + 1, h, smooth));
    cont.push_back(std::abs(r.continuity[m * (2 * m + 1) + m]));
  }
  const double order = std::min(std::log2(cont[0] / cont[1]), std::log2(cont[1] / cont[2]));
  return {constants && linear < 1e-10 && order >= 1.9,
          std::string("Sutherland reference values ") + (constants ? "exact" : "WRONG") + ", linear-field continuity " +
              sci(linear) + " (< 1e-10), observed order " + sci(order) + " (>= 1.9)"};
}

// 9. Normalizers invert exactly, log path included.
Outcome normalization() {
  Rng rng(909);
  double worst = 0.0;
  for (bool log_flag : {false, true}) {
    for (int t = 0; t < 50; ++t) {
      FieldSnapshot s{0, {15, 26}, DenseMatrix(200, kNumVariables)};
      const double scale = std::pow(10.0, rng.uniform(-4.0, 4.0));
      for (double& v : s.values.data()) v = scale * rng.uniform(0.01, 10.0);
      const Normalizer n = fit_normalizer(std::span(&s, 1), Variable::Rho, log_flag);
      for (std::size_t i = 0; i < s.values.rows(); ++i) {
        const double v = s.values(i, index(Variable::Rho));
        worst = std::max(worst, std::abs(n.invert(n.apply(v)) - v) / std::abs(v));
        const double z = rng.uniform(-3.0, 3.0);
        worst = std::max(worst, std::abs(n.apply(n.invert(z)) - z) / std::max(1.0, std::abs(z)));
      }
    }
  }
  return {worst <= 1e-12, "z-score and log paths, max rel roundtrip err " + sci(worst) + " (<= 1e-12)"};
}

// 10. Two full CLI runs give identical reports.
Outcome determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no --cli executable given"};
  const fs::path root = fs::temp_directory_path() / "nbfrom_acceptance_e2e";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path config = root / "config.json";
  write_file_atomic(config, R"({
  "mesh": {"points": 400},
  "grid": {"mach_count": 6, "alt_count": 5},
  "split": {"n_train": 6},
  "nbf": {"n_bf": 4, "basis": {"hidden_units": 16, "hidden_layers": 3, "epochs": 20},
          "coef": {"hidden_units": 16, "hidden_layers": 3, "epochs": 500}},
  "onet": {"latent": 16, "encoder_units": 16, "decoder_units": 32, "decoder_layers": 2, "epochs": 5}
})");
  std::vector<std::string> reports{"nbf_eval.json", "nbf_train.json", "onet_eval.json", "onet_train.json"};
  for (const char* run : {"a", "b"}) {
    const std::string base = "\"" + cli + "\" --config \"" + config.string() + "\" --out \"" + (root / run).string() + "\" ";
    for (const std::string& step :
         {std::string("generate"), std::string("train --model nbf"), std::string("train --model onet"),
          std::string("evaluate --model nbf --split eval"), std::string("evaluate --model nbf --split train"),
          std::string("evaluate --model onet --split eval"), std::string("evaluate --model onet --split train")}) {
      const std::string cmd = base + step + " > \"" + (root / "log.txt").string() + "\" 2>&1";
      if (std::system(cmd.c_str()) != 0) return {false, "command failed: nbfrom " + step + " (see " + (root / "log.txt").string() + ")"};
    }
  }
  for (const std::string& r : reports) {
    if (read_file(root / "a/reports" / r) != read_file(root / "b/reports" / r)) return {false, r + " differs between runs"};
  }
  fs::remove_all(root);
  return {true, std::to_string(reports.size()) + " report files byte-identical across two generate/train/evaluate runs"};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else {
      only.insert(std::atoi(arg.c_str()));
    }
  }
  if (cli.empty()) {
    // Build-tree layout: build/tests/acceptance next to build/tools/nbfrom.
    const fs::path guess = fs::absolute(argv[0]).parent_path().parent_path() / "tools" / "nbfrom";
    if (fs::exists(guess)) cli = guess.string();
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"SVD oracle equivalence", svd_oracle},
      {"gradient correctness", gradients},
      {"Adam closed form", adam_closed_form},
      {"POD completeness", pod_completeness},
      {"exact-expansion recovery", expansion_recovery},
      {"NBF vs DeepONet ordering", head_to_head},
      {"metric correctness", metric},
      {"physics constants and formulas", physics},
      {"normalization roundtrip", normalization},
      {"end-to-end determinism", [&] { return determinism(cli); }},
  };
  const double limits[] = {30, 60, 1, 10, 600, 1800, 0, 10, 0, 0};  // seconds, 0 = none stated
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!only.empty() && !only.count(int(k + 1))) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = elapsed(t0);
    if (limits[k] > 0 && secs > limits[k]) {
      o.pass = false;
      o.detail += "; runtime over the " + sci(limits[k]) + " s limit";
    }
    std::printf("[%s] %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
