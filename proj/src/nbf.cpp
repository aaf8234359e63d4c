#include "nbfrom/nbf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "nbfrom/random.hpp"

namespace nbfrom {

DenseMatrix normalized_params(const ParamNormalizer& norm, std::span<const ParamVector> configs) {
  DenseMatrix m(configs.size(), 2);
  for (std::size_t k = 0; k < configs.size(); ++k) {
    validate(configs[k]);
    const auto z = norm.apply(configs[k]);
    m(k, 0) = z[0];
    m(k, 1) = z[1];
  }
  return m;
}

DenseMatrix NbfVariableModel::coefficients(const DenseMatrix& params_norm) const {
  DenseMatrix a(coef.size(), params_norm.rows());
  ForwardTrace trace;
  for (std::size_t j = 0; j < coef.size(); ++j) {
    forward_trace(coef[j], params_norm, trace);
    const DenseMatrix& y = trace.activations.back();
    for (std::size_t k = 0; k < params_norm.rows(); ++k) a(j, k) = coef_scale * y(k, 0);
  }
  return a;
}

namespace {

std::string coef_label(Variable v, std::size_t j) {
  return "coefficient network " + std::string(variable_name(v)) + "[" + std::to_string(j) + "]";
}

void check_finite(double loss, const std::string& what, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    throw std::runtime_error(what + ": non-finite loss at epoch " + std::to_string(epoch));
  }
}

// One fine-tuning epoch over shuffled mesh-point batches, all configs at once.
double finetune_epoch(NbfVariableModel& model, const DenseMatrix& fields, const DenseMatrix& phi,
                      const DenseMatrix& params, std::span<const std::size_t> order,
                      std::size_t batch, double lr, std::vector<AdamState>& adam,
                      std::size_t epoch) {
  const std::size_t n_bf = model.coef.size();
  const std::size_t n = fields.rows();
  const std::size_t d = fields.cols();
  std::vector<ForwardTrace> traces(n_bf);
  std::vector<std::vector<double>> grads(n_bf);
  DenseMatrix a(n_bf, d), da(n_bf, d), out_grad(d, 1);
  double total = 0.0;

  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t rows = std::min(batch, n - start);
    for (std::size_t j = 0; j < n_bf; ++j) {
      forward_trace(model.coef[j], params, traces[j]);
      for (std::size_t k = 0; k < d; ++k) a(j, k) = model.coef_scale * traces[j].activations.back()(k, 0);
    }
    std::fill(da.data().begin(), da.data().end(), 0.0);
    const double scale = 2.0 / static_cast<double>(rows * d);
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = order[start + r];
      const auto phi_row = phi.row(i);
      for (std::size_t k = 0; k < d; ++k) {
        double pred = 0.0;
        for (std::size_t j = 0; j < n_bf; ++j) pred += phi_row[j] * a(j, k);
        const double res = pred - fields(i, k);
        loss += res * res;
        for (std::size_t j = 0; j < n_bf; ++j) da(j, k) += scale * res * phi_row[j];
      }
    }
    loss /= static_cast<double>(rows * d);
    check_finite(loss, "fine-tuning " + std::string(variable_name(model.variable)), epoch);
    total += loss * static_cast<double>(rows);

    for (std::size_t j = 0; j < n_bf; ++j) {
      for (std::size_t k = 0; k < d; ++k) out_grad(k, 0) = model.coef_scale * da(j, k);
      grads[j].assign(model.coef[j].parameter_count(), 0.0);
      backward(model.coef[j], traces[j], out_grad, grads[j]);
      adam_step(adam[j], model.coef[j], grads[j], lr, AdamOptions{});
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace

std::vector<double> finetune_coefficients(NbfVariableModel& model, const DenseMatrix& fields,
                                          const DenseMatrix& coords, const DenseMatrix& params,
                                          const NbfHyper& hyper, std::uint64_t seed) {
  if (model.coef.size() != model.phi.n_bf() || model.coef.empty()) {
    throw std::invalid_argument("finetune_coefficients: coefficient networks are not initialised");
  }
  if (coords.rows() != fields.rows() || params.rows() != fields.cols()) {
    throw std::invalid_argument("finetune_coefficients: fields " + fields.shape() + ", coordinates " +
                                coords.shape() + " and parameters " + params.shape() + " disagree");
  }
  std::vector<double> losses;
  if (hyper.finetune_epochs == 0) return losses;
  const DenseMatrix phi = model.phi.evaluate(coords);
  const std::size_t n = fields.rows();
  const std::size_t batch = hyper.finetune_batch == 0 ? n : std::min(hyper.finetune_batch, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<AdamState> adam;
  for (const Mlp& net : model.coef) adam.emplace_back(net.parameter_count());
  Rng rng(derive_seed(seed, 2000));
  for (std::size_t epoch = 0; epoch < hyper.finetune_epochs; ++epoch) {
    if (batch < n) rng.shuffle(std::span<std::size_t>(order));
    losses.push_back(finetune_epoch(model, fields, phi, params, order, batch,
                                    hyper.finetune_schedule.lr_at(epoch), adam, epoch));
  }
  return losses;
}

CoefficientLog fit_coefficients(NbfVariableModel& model, const DenseMatrix& fields,
                                const DenseMatrix& coords, const DenseMatrix& params,
                                const NbfHyper& hyper, std::uint64_t seed) {
  const std::size_t n_bf = model.phi.n_bf();
  if (n_bf == 0) throw std::invalid_argument("fit_coefficients: basis networks are not trained");
  if (model.basis.n_bf() != n_bf || model.basis.n_points() != fields.rows()) {
    throw std::invalid_argument("fit_coefficients: basis does not match the snapshot matrix");
  }
  if (coords.rows() != fields.rows() || params.rows() != fields.cols() || params.cols() != 2) {
    throw std::invalid_argument("fit_coefficients: fields " + fields.shape() + ", coordinates " +
                                coords.shape() + " and parameters " + params.shape() + " disagree");
  }
  const std::size_t d = fields.cols();
  model.coef_scale = model.phi.target_scale;
  model.coef.resize(n_bf);
  for (std::size_t j = 0; j < n_bf; ++j) {
    model.coef[j] = init_network(mlp_sizes(2, hyper.coef.hidden_units, hyper.coef.hidden_layers, 1),
                                 derive_seed(seed, j));
  }

  CoefficientLog log;
  log.pretrain.resize(n_bf);
  if (hyper.pretrain) {
    const DenseMatrix targets = projection_coefficients(model.basis, fields);
    std::vector<std::string> errors(n_bf);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t j = 0; j < n_bf; ++j) {
      try {
        DenseMatrix t(d, 1);
        for (std::size_t k = 0; k < d; ++k) t(k, 0) = targets(j, k) / model.coef_scale;
        TrainOptions opts;
        opts.epochs = hyper.coef.epochs;
        opts.batch_size = hyper.coef.batch_size;
        opts.schedule = hyper.coef.schedule;
        opts.adam.weight_decay = hyper.coef.weight_decay;
        opts.seed = derive_seed(seed, 1000 + j);
        log.pretrain[j] = train_mse(model.coef[j], params, t, opts, "pretraining " + coef_label(model.variable, j));
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
    for (const std::string& e : errors) {
      if (!e.empty()) throw std::runtime_error(e);
    }
  }

  log.finetune = finetune_coefficients(model, fields, coords, params, hyper, seed);
  return log;
}

DenseMatrix NbfModel::predict(const Mesh& mesh, std::span<const ParamVector> configs,
                              Variable v) const {
  const NbfVariableModel& m = vars[index(v)];
  const DenseMatrix phi = m.phi.evaluate(coords.apply(mesh));
  const DenseMatrix a = m.coefficients(normalized_params(params, configs));
  DenseMatrix out = matmul(phi, a);
  const Normalizer& norm = normalizers[index(v)];
  for (double& z : out.data()) z = norm.invert(z);
  return out;
}

double NbfModel::predict_normalized(Point x, const ParamVector& psi, Variable v) const {
  const Mesh one{{x}};
  const ParamVector cfg[1] = {psi};
  const NbfVariableModel& m = vars[index(v)];
  const DenseMatrix phi = m.phi.evaluate(coords.apply(one));
  const DenseMatrix a = m.coefficients(normalized_params(params, cfg));
  double z = 0.0;
  for (std::size_t j = 0; j < a.rows(); ++j) z += phi(0, j) * a(j, 0);
  return z;
}

double NbfModel::predict_point(Point x, const ParamVector& psi, Variable v) const {
  return normalizers[index(v)].invert(predict_normalized(x, psi, v));
}

NbfModel train_nbf(const Mesh& mesh, std::span<const FieldSnapshot> train, const NbfHyper& hyper,
                   std::uint64_t seed, NbfTrainingLog* log) {
  if (train.empty()) throw std::invalid_argument("train_nbf: empty training split");
  if (hyper.n_bf > train.size()) {
    throw std::invalid_argument("train_nbf: n_bf = " + std::to_string(hyper.n_bf) + " exceeds the " +
                                std::to_string(train.size()) + " training configurations");
  }
  NbfModel model;
  model.normalizers = fit_normalizers(train, hyper.log_flags);
  std::vector<ParamVector> psi;
  for (const FieldSnapshot& s : train) psi.push_back(s.params);
  model.params = fit_param_normalizer(psi);
  model.coords = fit_coord_normalizer(mesh);
  const DenseMatrix coords = model.coords.apply(mesh);
  const DenseMatrix params = normalized_params(model.params, psi);

  for (Variable v : kAllVariables) {
    const std::size_t l = index(v);
    NbfVariableModel& m = model.vars[l];
    m.variable = v;
    const DenseMatrix fields = assemble_snapshot_matrix(train, v, model.normalizers[l]);
    if (fields.rows() != mesh.size()) {
      throw std::invalid_argument("train_nbf: snapshots have " + std::to_string(fields.rows()) +
                                  " points but the mesh has " + std::to_string(mesh.size()));
    }
    m.basis = extract_basis(fields, hyper.n_bf, v);
    m.phi = fit_basis_networks(m.basis, coords, hyper.basis, derive_seed(seed, 100 + l));
    CoefficientLog coef_log = fit_coefficients(m, fields, coords, params, hyper, derive_seed(seed, 200 + l));
    if (log) {
      log->basis_mse[l] = m.phi.final_mse;
      log->coef[l] = std::move(coef_log);
    }
  }
  return model;
}

}  // namespace nbfrom
