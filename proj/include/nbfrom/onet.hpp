#pragma once

// DeepONet baseline: field_l(x, psi) = f_d(f_x(x) * f_psi(psi)), with an
// element-wise product merging the spatial and parameter encodings.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nbfrom/dataset.hpp"
#include "nbfrom/neural.hpp"
#include "nbfrom/surrogate.hpp"

namespace nbfrom {

struct OnetHyper {
  std::size_t latent = 32;
  std::size_t encoder_units = 32;
  std::size_t encoder_layers = 1;
  std::size_t decoder_units = 256;
  std::size_t decoder_layers = 3;
  std::size_t epochs = 97;
  std::size_t batch_size = 256;  // (point, config) tuples per step; 0 = all
  StepLrSchedule schedule{1e-3, 97, 1.0};
  double weight_decay = 1e-4;
  std::array<bool, kNumVariables> log_flags{false, false, true, false};
};

struct OnetVariableModel {
  Mlp fx;
  Mlp fpsi;
  Mlp fd;

  /// Throws std::invalid_argument unless fx and fpsi emit the same width,
  /// fd consumes it and returns one value, and both encoders take 2 inputs.
  void validate() const;
};

/// Freshly initialised encoders and decoder for one variable.
OnetVariableModel init_onet_variable(const OnetHyper& hyper, std::uint64_t seed);

/// N x K normalized outputs
/// using precomputed encodings: fx_out is N x latent, fpsi_out K x latent.
DenseMatrix onet_decode(const OnetVariableModel& m, const DenseMatrix& fx_out,
                        const DenseMatrix& fpsi_out);

/// Minibatch AdamW over all (point, config) tuples of the N x D normalized
/// field matrix. Returns per-epoch mean squared error.
std::vector<double> train_onet_variable(OnetVariableModel& m, const DenseMatrix& fields,
                                        const DenseMatrix& coords, const DenseMatrix& params,
                                        const OnetHyper& hyper, std::uint64_t seed,
                                        Variable v);

struct OnetTrainingLog {
  std::array<std::vector<double>, kNumVariables> loss;
};

class OnetModel : public Surrogate {
 public:
  std::array<Normalizer, kNumVariables> normalizers;
  ParamNormalizer params;
  CoordNormalizer coords;
  std::array<OnetVariableModel, kNumVariables> vars;

  std::string kind() const override { return "onet"; }
  DenseMatrix predict(const Mesh& mesh, std::span<const ParamVector> configs,
                      Variable v) const override;
  double predict_point(Point x, const ParamVector& psi, Variable v) const;
};

OnetModel train_onet(const Mesh& mesh, std::span<const FieldSnapshot> train, const OnetHyper& hyper,
                     std::uint64_t seed, OnetTrainingLog* log = nullptr);

}  // namespace nbfrom
