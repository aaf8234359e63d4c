#pragma once

// Fully connected networks trained from scratch: tanh hidden layers, linear
// output, reverse-mode gradients, Adam, and a step learning-rate schedule.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbfrom/linalg.hpp"

namespace nbfrom {

/// Multilayer perceptron with all parameters in one flat buffer.
///
/// Layer l maps layer_sizes[l] -> layer_sizes[l + 1]. Its weights are stored
/// row-major as (out x in), followed by its bias. Every layer except the last
/// applies tanh.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialised network. Throws std::invalid_argument unless there are
  /// at least two sizes, all positive.
  explicit Mlp(std::vector<std::size_t> layer_sizes);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  /// Human-readable name of the block holding a flat parameter index,
  /// e.g. "layer 2 weights".
  std::string block_name(std::size_t flat_index) const;

  /// 1 for weight entries, 0 for biases.
  std::vector<std::uint8_t> weight_mask() const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// [in, hidden_units x hidden_layers, out].
std::vector<std::size_t> mlp_sizes(std::size_t in, std::size_t hidden_units,
                                   std::size_t hidden_layers, std::size_t out);

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
Mlp init_network(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

std::vector<double> forward(const Mlp& net, std::span<const double> x);

/// Row-wise forward pass over a (batch x input_dim) matrix.
DenseMatrix forward_batch(const Mlp& net, const DenseMatrix& inputs);

/// Layer activations kept for the backward pass. activations[0] is the input,
/// activations.back() the network output.
struct ForwardTrace {
  std::vector<DenseMatrix> activations;
  std::vector<double> transposed;  // scratch
};

void forward_trace(const Mlp& net, const DenseMatrix& inputs, ForwardTrace& trace);

/// Adds dL/dparams to `grads` given dL/doutput for the batch in `trace`.
/// If `input_grads` is non-null it receives dL/dinput.
void backward(const Mlp& net, ForwardTrace& trace, const DenseMatrix& output_grads,
              std::span<double> grads, DenseMatrix* input_grads = nullptr);

/// Mean over the batch and outputs of (net(x) - target)^2. Overwrites `grads`
/// with the exact gradient and returns the loss.
double mse_gradient(const Mlp& net, const DenseMatrix& inputs, const DenseMatrix& targets,
                    std::span<double> grads);

double mse_loss(const Mlp& net, const DenseMatrix& inputs, const DenseMatrix& targets);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled decay: p -= lr * weight_decay * p before the Adam update.
  double weight_decay = 0.0;
};

struct AdamState {
  explicit AdamState(std::size_t parameter_count)
      : first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}

  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
};

/// One bias-corrected Adam update. Decay applies where `decay_mask` is 1 (all
/// entries when the mask is empty). Throws std::runtime_error on a non-finite
/// gradient, before anything is modified.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double learning_rate, const AdamOptions& options,
               std::span<const std::uint8_t> decay_mask = {});

/// Network overload: decay touches weights only and errors name the block.
void adam_step(AdamState& state, Mlp& net, std::span<const double> grads, double learning_rate,
               const AdamOptions& options);

struct StepLrSchedule {
  double initial_lr = 1e-3;
  std::size_t step_size = 1;
  double gamma = 1.0;

  /// initial_lr * gamma^floor(epoch / step_size).
  double lr_at(std::size_t epoch) const;
};

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 0;  // 0 trains full-batch
  StepLrSchedule schedule;
  AdamOptions adam;
  std::uint64_t seed = 0;
};

/// Minibatch Adam on mean squared error. Rows are reshuffled every epoch.
/// Returns the per-epoch training loss. `label` prefixes error messages.
std::vector<double> train_mse(Mlp& net, const DenseMatrix& inputs, const DenseMatrix& targets,
                              const TrainOptions& options, std::string_view label = "network");

// Binary container: 12-byte magic "NBFROM-MLP\0\0", u32 version, u64 layer
// count, u64 sizes, then every parameter. All little-endian.
void write_network(std::ostream& out, const Mlp& net);
Mlp read_network(std::istream& in);
void save_network(const std::filesystem::path& path, const Mlp& net);
Mlp load_network(const std::filesystem::path& path);

}  // namespace nbfrom
