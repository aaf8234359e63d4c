#include "nbfrom/onet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "nbfrom/nbf.hpp"
#include "nbfrom/random.hpp"

namespace nbfrom {

void OnetVariableModel::validate() const {
  if (fx.layer_sizes().empty() || fpsi.layer_sizes().empty() || fd.layer_sizes().empty()) {
    throw std::invalid_argument("onet: networks are not initialised");
  }
  if (fx.input_dim() != 2 || fpsi.input_dim() != 2) {
    throw std::invalid_argument("onet: encoders must take 2 inputs");
  }
  if (fx.output_dim() != fpsi.output_dim()) {
    throw std::invalid_argument("onet: latent mismatch, f_x emits " + std::to_string(fx.output_dim()) +
                                " but f_psi emits " + std::to_string(fpsi.output_dim()));
  }
  if (fd.input_dim() != fx.output_dim() || fd.output_dim() != 1) {
    throw std::invalid_argument("onet: decoder must map the " + std::to_string(fx.output_dim()) +
                                "-wide latent to one value");
  }
}

OnetVariableModel init_onet_variable(const OnetHyper& hyper, std::uint64_t seed) {
  OnetVariableModel m{
      init_network(mlp_sizes(2, hyper.encoder_units, hyper.encoder_layers, hyper.latent), derive_seed(seed, 1)),
      init_network(mlp_sizes(2, hyper.encoder_units, hyper.encoder_layers, hyper.latent), derive_seed(seed, 2)),
      init_network(mlp_sizes(hyper.latent, hyper.decoder_units, hyper.decoder_layers, 1), derive_seed(seed, 3))};
  m.validate();
  return m;
}

DenseMatrix onet_decode(const OnetVariableModel& m, const DenseMatrix& fx_out,
                        const DenseMatrix& fpsi_out) {
  const std::size_t n = fx_out.rows();
  const std::size_t k = fpsi_out.rows();
  const std::size_t latent = fx_out.cols();
  DenseMatrix out(n, k);
  // Decode in chunks of points so the merged latent stays small.
  const std::size_t chunk = std::max<std::size_t>(1, 8192 / std::max<std::size_t>(k, 1));
  DenseMatrix merged;
  ForwardTrace trace;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t rows = std::min(chunk, n - start);
    merged.resize(rows * k, latent);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto x = fx_out.row(start + r);
      for (std::size_t c = 0; c < k; ++c) {
        const auto p = fpsi_out.row(c);
        auto dst = merged.row(r * k + c);
        for (std::size_t q = 0; q < latent; ++q) dst[q] = x[q] * p[q];
      }
    }
    forward_trace(m.fd, merged, trace);
    const DenseMatrix& y = trace.activations.back();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < k; ++c) out(start + r, c) = y(r * k + c, 0);
    }
  }
  return out;
}

std::vector<double> train_onet_variable(OnetVariableModel& m, const DenseMatrix& fields,
                                        const DenseMatrix& coords, const DenseMatrix& params,
                                        const OnetHyper& hyper, std::uint64_t seed,
                                        Variable v) {
  m.validate();
  const std::size_t n = fields.rows();
  const std::size_t d = fields.cols();
  if (n == 0 || d == 0) throw std::invalid_argument("train_onet: empty training split");
  if (coords.rows() != n || params.rows() != d) {
    throw std::invalid_argument("train_onet: fields " + fields.shape() + " vs coordinates " +
                                coords.shape() + " and parameters " + params.shape());
  }
  const std::size_t total = n * d;
  const std::size_t batch = hyper.batch_size == 0 ? total : std::min(hyper.batch_size, total);
  const std::size_t latent = m.fx.output_dim();

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  AdamState sx(m.fx.parameter_count()), sp(m.fpsi.parameter_count()), sd(m.fd.parameter_count());
  std::vector<double> gx(m.fx.parameter_count()), gp(m.fpsi.parameter_count()), gd(m.fd.parameter_count());
  AdamOptions adam;
  adam.weight_decay = hyper.weight_decay;

  ForwardTrace tx, tp, td;
  DenseMatrix xb, pb, yb, merged, dout, dmerged, dfx, dfp;
  std::vector<double> history;
  const std::string label = "onet " + std::string(variable_name(v));

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double lr = hyper.schedule.lr_at(epoch);
    if (batch < total) rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < total; start += batch) {
      const std::size_t rows = std::min(batch, total - start);
      xb.resize(rows, 2);
      pb.resize(rows, 2);
      yb.resize(rows, 1);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t point = order[start + r] / d;
        const std::size_t config = order[start + r] % d;
        xb(r, 0) = coords(point, 0);
        xb(r, 1) = coords(point, 1);
        pb(r, 0) = params(config, 0);
        pb(r, 1) = params(config, 1);
        yb(r, 0) = fields(point, config);
      }
      forward_trace(m.fx, xb, tx);
      forward_trace(m.fpsi, pb, tp);
      const DenseMatrix& ex = tx.activations.back();
      const DenseMatrix& ep = tp.activations.back();
      merged.resize(rows, latent);
      for (std::size_t i = 0; i < merged.size(); ++i) merged.data()[i] = ex.data()[i] * ep.data()[i];
      forward_trace(m.fd, merged, td);

      const DenseMatrix& out = td.activations.back();
      dout.resize(rows, 1);
      double loss = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double res = out(r, 0) - yb(r, 0);
        loss += res * res;
        dout(r, 0) = 2.0 * res / static_cast<double>(rows);
      }
      loss /= static_cast<double>(rows);
      if (!std::isfinite(loss)) {
        throw std::runtime_error(label + ": non-finite loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(rows);

      std::fill(gd.begin(), gd.end(), 0.0);
      backward(m.fd, td, dout, gd, &dmerged);
      dfx.resize(rows, latent);
      dfp.resize(rows, latent);
      for (std::size_t i = 0; i < dmerged.size(); ++i) {
        dfx.data()[i] = dmerged.data()[i] * ep.data()[i];
        dfp.data()[i] = dmerged.data()[i] * ex.data()[i];
      }
      std::fill(gx.begin(), gx.end(), 0.0);
      std::fill(gp.begin(), gp.end(), 0.0);
      backward(m.fx, tx, dfx, gx);
      backward(m.fpsi, tp, dfp, gp);
      adam_step(sx, m.fx, gx, lr, adam);
      adam_step(sp, m.fpsi, gp, lr, adam);
      adam_step(sd, m.fd, gd, lr, adam);
    }
    history.push_back(epoch_loss / static_cast<double>(total));
  }
  return history;
}

DenseMatrix OnetModel::predict(const Mesh& mesh, std::span<const ParamVector> configs,
                               Variable v) const {
  const OnetVariableModel& m = vars[index(v)];
  const DenseMatrix ex = forward_batch(m.fx, coords.apply(mesh));
  const DenseMatrix ep = forward_batch(m.fpsi, normalized_params(params, configs));
  DenseMatrix out = onet_decode(m, ex, ep);
  const Normalizer& norm = normalizers[index(v)];
  for (double& z : out.data()) z = norm.invert(z);
  return out;
}

double OnetModel::predict_point(Point x, const ParamVector& psi, Variable v) const {
  const Mesh one{{x}};
  const ParamVector cfg[1] = {psi};
  return predict(one, cfg, v)(0, 0);
}

OnetModel train_onet(const Mesh& mesh, std::span<const FieldSnapshot> train, const OnetHyper& hyper,
                     std::uint64_t seed, OnetTrainingLog* log) {
  if (train.empty()) throw std::invalid_argument("train_onet: empty training split");
  OnetModel model;
  model.normalizers = fit_normalizers(train, hyper.log_flags);
  std::vector<ParamVector> psi;
  for (const FieldSnapshot& s : train) psi.push_back(s.params);
  model.params = fit_param_normalizer(psi);
  model.coords = fit_coord_normalizer(mesh);
  const DenseMatrix coords = model.coords.apply(mesh);
  const DenseMatrix params = normalized_params(model.params, psi);
  for (Variable v : kAllVariables) {
    const std::size_t l = index(v);
    const DenseMatrix fields = assemble_snapshot_matrix(train, v, model.normalizers[l]);
    if (fields.rows() != mesh.size()) {
      throw std::invalid_argument("train_onet: snapshots have " + std::to_string(fields.rows()) +
                                  " points but the mesh has " + std::to_string(mesh.size()));
    }
    model.vars[l] = init_onet_variable(hyper, derive_seed(seed, 300 + l));
    auto history = train_onet_variable(model.vars[l], fields, coords, params, hyper,
                                       derive_seed(seed, 400 + l), v);
    if (log) log->loss[l] = std::move(history);
  }
  return model;
}

}  // namespace nbfrom
