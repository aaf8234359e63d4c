#pragma once

// Neural basis function model: field_l(x, psi) = sum_j C_j,l(psi) phi_j,l(x),
// fitted in normalized units and mapped back through the per-variable
// normalizer.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nbfrom/dataset.hpp"
#include "nbfrom/neural.hpp"
#include "nbfrom/pod.hpp"
#include "nbfrom/surrogate.hpp"

namespace nbfrom {

struct NbfHyper {
  std::size_t n_bf = 10;
  NetworkHyper basis{40, 7, 100, 64, {1e-3, 45, 0.9}, 0.0};
  NetworkHyper coef{100, 7, 10000, 0, {1e-3, 800, 0.9}, 0.0};
  bool pretrain = true;
  std::size_t finetune_epochs = 1;
  std::size_t finetune_batch = 256;  // mesh points per step; 0 = all
  StepLrSchedule finetune_schedule{1e-5, 8, 0.1};
  std::array<bool, kNumVariables> log_flags{false, false, true, false};
};

struct NbfVariableModel {
  Variable variable = Variable::U1;
  PodBasis basis;
  BasisNetworkSet phi;
  std::vector<Mlp> coef;   // C_j = coef_scale * coef[j]
  double coef_scale = 1.0;

  /// n_bf x K coefficients for normalized parameter rows (K x 2).
  DenseMatrix coefficients(const DenseMatrix& params_norm) const;
};

struct CoefficientLog {
  std::vector<std::vector<double>> pretrain;  // per basis index, per epoch
  std::vector<double> finetune;               // per epoch, mean squared field residual
};

/// Fits the C networks of `model` with its phi networks frozen: optional
/// pretraining on projection coefficients, then minibatch fine-tuning on the
/// field residual sum_j C_j phi_j - w over (point, config) pairs.
/// `fields` is the N x D normalized snapshot matrix, `coords` the N x 2
/// normalized mesh, `params` the D x 2 normalized training parameters.
CoefficientLog fit_coefficients(NbfVariableModel& model, const DenseMatrix& fields,
                                const DenseMatrix& coords, const DenseMatrix& params,
                                const NbfHyper& hyper, std::uint64_t seed);

/// The fine-tuning stage alone, starting from the current C networks with a
/// fresh optimizer state. Returns the per-epoch mean residual.
std::vector<double> finetune_coefficients(NbfVariableModel& model, const DenseMatrix& fields,
                                          const DenseMatrix& coords, const DenseMatrix& params,
                                          const NbfHyper& hyper, std::uint64_t seed);

struct NbfTrainingLog {
  std::array<std::vector<double>, kNumVariables> basis_mse;
  std::array<CoefficientLog, kNumVariables> coef;
};

class NbfModel : public Surrogate {
 public:
  std::array<Normalizer, kNumVariables> normalizers;
  ParamNormalizer params;
  CoordNormalizer coords;
  std::array<NbfVariableModel, kNumVariables> vars;

  std::string kind() const override { return "nbf"; }
  DenseMatrix predict(const Mesh& mesh, std::span<const ParamVector> configs,
                      Variable v) const override;

  /// Normalized prediction sum_j C_j phi_j for one point and configuration.
  double predict_normalized(Point x, const ParamVector& psi, Variable v) const;
  /// Physical value at one point.
  double predict_point(Point x, const ParamVector& psi, Variable v) const;
};

/// Full pipeline: normalizers, POD bases, basis networks, coefficients.
NbfModel train_nbf(const Mesh& mesh, std::span<const FieldSnapshot> train, const NbfHyper& hyper,
                   std::uint64_t seed, NbfTrainingLog* log = nullptr);

/// K x 2 matrix of normalized parameters.
DenseMatrix normalized_params(const ParamNormalizer& norm, std::span<const ParamVector> configs);

}  // namespace nbfrom
