#include "nbfrom/pod.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nbfrom/io.hpp"
#include "nbfrom/random.hpp"

namespace nbfrom {

DenseMatrix assemble_snapshot_matrix(std::span<const FieldSnapshot> train, Variable v,
                                     const Normalizer& normalizer) {
  if (train.empty()) throw std::invalid_argument("assemble_snapshot_matrix: no snapshots");
  const std::size_t n = train.front().values.rows();
  DenseMatrix w(n, train.size());
  for (std::size_t d = 0; d < train.size(); ++d) {
    const DenseMatrix& values = train[d].values;
    if (values.rows() != n) {
      throw std::invalid_argument("assemble_snapshot_matrix: config " + std::to_string(train[d].id) +
                                  " has " + std::to_string(values.rows()) + " points, expected " +
                                  std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) w(i, d) = normalizer.apply(values(i, index(v)));
  }
  return w;
}

PodBasis extract_basis(const DenseMatrix& matrix, std::size_t n_bf, Variable v) {
  const std::size_t limit = std::min(matrix.rows(), matrix.cols());
  if (n_bf == 0 || n_bf > limit) {
    throw std::invalid_argument("extract_basis: n_bf = " + std::to_string(n_bf) +
                                " must be in [1, " + std::to_string(limit) + "] for a " +
                                matrix.shape() + " snapshot matrix");
  }
  const SvdResult svd = thin_svd(matrix);
  PodBasis basis{v, DenseMatrix(matrix.rows(), n_bf), {}};
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    for (std::size_t j = 0; j < n_bf; ++j) basis.vectors(i, j) = svd.u(i, j);
  }
  basis.singular_values.assign(svd.sigma.begin(), svd.sigma.begin() + static_cast<std::ptrdiff_t>(n_bf));
  return basis;
}

DenseMatrix projection_coefficients(const PodBasis& basis, const DenseMatrix& matrix) {
  if (matrix.rows() != basis.n_points()) {
    throw std::invalid_argument("projection_coefficients: matrix " + matrix.shape() +
                                " does not match basis with " + std::to_string(basis.n_points()) + " points");
  }
  return matmul(transpose(basis.vectors), matrix);
}

DenseMatrix reconstruct(const PodBasis& basis, const DenseMatrix& coefficients) {
  return matmul(basis.vectors, coefficients);
}

DenseMatrix BasisNetworkSet::evaluate(const DenseMatrix& coords) const {
  DenseMatrix out(coords.rows(), networks.size());
  ForwardTrace trace;
  for (std::size_t j = 0; j < networks.size(); ++j) {
    forward_trace(networks[j], coords, trace);
    const DenseMatrix& y = trace.activations.back();
    for (std::size_t i = 0; i < coords.rows(); ++i) out(i, j) = y(i, 0) / target_scale;
  }
  return out;
}

BasisNetworkSet fit_basis_networks(const PodBasis& basis, const DenseMatrix& coords,
                                   const NetworkHyper& hyper, std::uint64_t seed,
                                   double target_scale) {
  if (coords.rows() != basis.n_points() || coords.cols() != 2) {
    throw std::invalid_argument("fit_basis_networks: coordinates " + coords.shape() +
                                " do not match a basis over " + std::to_string(basis.n_points()) + " points");
  }
  const std::size_t n_bf = basis.n_bf();
  BasisNetworkSet set;
  set.target_scale = target_scale > 0.0 ? target_scale : std::sqrt(static_cast<double>(basis.n_points()));
  set.networks.resize(n_bf);
  set.final_mse.resize(n_bf);
  std::vector<std::string> errors(n_bf);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < n_bf; ++j) {
    try {
      const std::uint64_t net_seed = derive_seed(seed, j);
      Mlp net = init_network(mlp_sizes(2, hyper.hidden_units, hyper.hidden_layers, 1), net_seed);
      DenseMatrix target(basis.n_points(), 1);
      for (std::size_t i = 0; i < basis.n_points(); ++i) target(i, 0) = set.target_scale * basis.vectors(i, j);
      TrainOptions opts;
      opts.epochs = hyper.epochs;
      opts.batch_size = hyper.batch_size;
      opts.schedule = hyper.schedule;
      opts.adam.weight_decay = hyper.weight_decay;
      opts.seed = derive_seed(net_seed, 1);
      const std::string label =
          "basis network " + std::string(variable_name(basis.variable)) + "[" + std::to_string(j) + "]";
      train_mse(net, coords, target, opts, label);
      set.final_mse[j] = mse_loss(net, coords, target);
      set.networks[j] = std::move(net);
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  return set;
}

void save_basis(const std::filesystem::path& path, const PodBasis& basis) {
  std::string out;
  for (std::size_t j = 0; j < basis.n_bf(); ++j) {
    if (j) out += ',';
    out += "z" + std::to_string(j);
  }
  out += '\n';
  for (std::size_t i = 0; i < basis.n_points(); ++i) {
    for (std::size_t j = 0; j < basis.n_bf(); ++j) {
      if (j) out += ',';
      append_double(out, basis.vectors(i, j));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

PodBasis load_basis(const std::filesystem::path& path, Variable v) {
  LineReader reader(path);
  std::string_view line;
  if (!reader.next(line)) reader.fail("empty basis file");
  const std::size_t n_bf = split_csv(line).size();
  for (std::size_t j = 0; j < n_bf; ++j) {
    if (split_csv(line)[j] != "z" + std::to_string(j)) reader.fail("bad basis header");
  }
  std::vector<double> values;
  std::size_t rows = 0;
  while (reader.next(line)) {
    const auto fields = split_csv(line);
    if (fields.size() != n_bf) reader.fail("expected " + std::to_string(n_bf) + " columns");
    for (auto f : fields) {
      try {
        values.push_back(parse_double(f));
      } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
      }
    }
    ++rows;
  }
  if (rows == 0) reader.fail("basis has no rows");
  return {v, DenseMatrix(rows, n_bf, std::move(values)), {}};
}

}  // namespace nbfrom
