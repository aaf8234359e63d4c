#pragma once

// Snapshot matrices, SVD bases and the networks that turn basis vectors into
// functions of space.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nbfrom/dataset.hpp"
#include "nbfrom/linalg.hpp"
#include "nbfrom/neural.hpp"

namespace nbfrom {

/// N x D matrix whose column d is the normalized field of training config d.
DenseMatrix assemble_snapshot_matrix(std::span<const FieldSnapshot> train, Variable v,
                                     const Normalizer& normalizer);

struct PodBasis {
  Variable variable = Variable::U1;
  DenseMatrix vectors;  // N x n_bf, orthonormal columns
  std::vector<double> singular_values;

  std::size_t n_bf() const { return vectors.cols(); }
  std::size_t n_points() const { return vectors.rows(); }
};

/// First n_bf left singular vectors of `matrix`. Throws std::invalid_argument
/// if n_bf is zero or exceeds min(N, D).
PodBasis extract_basis(const DenseMatrix& matrix, std::size_t n_bf, Variable v);

/// n_bf x D matrix of <column_d, z_j>.
DenseMatrix projection_coefficients(const PodBasis& basis, const DenseMatrix& matrix);

/// Basis * coefficients: the N x D reconstruction from projection coefficients.
DenseMatrix reconstruct(const PodBasis& basis, const DenseMatrix& coefficients);

struct NetworkHyper {
  std::size_t hidden_units = 40;
  std::size_t hidden_layers = 7;
  std::size_t epochs = 100;
  std::size_t batch_size = 0;  // 0 = full batch
  StepLrSchedule schedule{1e-3, 45, 0.9};
  double weight_decay = 0.0;
};

/// Trained phi_j networks. Each network is fit to target_scale * z_j so that
/// its targets have unit mean square; evaluate() divides the scale back out.
struct BasisNetworkSet {
  std::vector<Mlp> networks;
  double target_scale = 1.0;
  std::vector<double> final_mse;  // per network, in scaled units

  std::size_t n_bf() const { return networks.size(); }
  /// N x n_bf values phi_j(x_n) for normalized coordinates.
  DenseMatrix evaluate(const DenseMatrix& coords) const;
};

/// Fits one network per basis vector on (normalized coordinates, scaled z_j).
/// Seeds derive from `seed` and the basis index. `target_scale` defaults to
/// sqrt(N) when zero.
BasisNetworkSet fit_basis_networks(const PodBasis& basis, const DenseMatrix& coords,
                                   const NetworkHyper& hyper, std::uint64_t seed,
                                   double target_scale = 0.0);

/// basis_<v>.csv: header z0..z{n-1}, then N rows.
void save_basis(const std::filesystem::path& path, const PodBasis& basis);
PodBasis load_basis(const std::filesystem::path& path, Variable v);

}  // namespace nbfrom
