#include "nbfrom/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "nbfrom/io.hpp"
#include "nbfrom/kernels.hpp"
#include "nbfrom/random.hpp"

namespace nbfrom {

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least two layer sizes");
  for (std::size_t s : sizes_) {
    if (s == 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
  }
  std::size_t total = 0;
  offsets_.resize(sizes_.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_[l] = total;
    total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

std::span<double> Mlp::weights(std::size_t layer) {
  return {params_.data() + weight_offset(layer), sizes_[layer] * sizes_[layer + 1]};
}
std::span<const double> Mlp::weights(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), sizes_[layer] * sizes_[layer + 1]};
}
std::span<double> Mlp::bias(std::size_t layer) {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}
std::span<const double> Mlp::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

std::string Mlp::block_name(std::size_t flat_index) const {
  for (std::size_t l = num_layers(); l-- > 0;) {
    if (flat_index >= bias_offset(l)) return "layer " + std::to_string(l) + " bias";
    if (flat_index >= weight_offset(l)) return "layer " + std::to_string(l) + " weights";
  }
  return "parameter " + std::to_string(flat_index);
}

std::vector<std::uint8_t> Mlp::weight_mask() const {
  std::vector<std::uint8_t> mask(params_.size(), 0);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(weight_offset(l)),
                sizes_[l] * sizes_[l + 1], 1);
  }
  return mask;
}

std::vector<std::size_t> mlp_sizes(std::size_t in, std::size_t hidden_units,
                                   std::size_t hidden_layers, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden_layers, hidden_units);
  sizes.push_back(out);
  return sizes;
}

Mlp init_network(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
  Mlp net(std::move(layer_sizes));
  Rng rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double fan_in = static_cast<double>(net.layer_sizes()[l]);
    const double fan_out = static_cast<double>(net.layer_sizes()[l + 1]);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : net.weights(l)) w = rng.uniform(-bound, bound);
  }
  return net;
}

void forward_trace(const Mlp& net, const DenseMatrix& inputs, ForwardTrace& trace) {
  if (inputs.cols() != net.input_dim()) {
    throw std::invalid_argument("forward: input width " + std::to_string(inputs.cols()) +
                                " but network expects " + std::to_string(net.input_dim()));
  }
  const std::size_t batch = inputs.rows();
  const std::size_t layers = net.num_layers();
  trace.activations.resize(layers + 1);
  trace.activations[0] = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = net.layer_sizes()[l];
    const std::size_t out = net.layer_sizes()[l + 1];
    trace.transposed.resize(in * out);
    kernels::transpose(net.weights(l), trace.transposed, out, in);
    DenseMatrix& y = trace.activations[l + 1];
    y.resize(batch, out);
    kernels::gemm(trace.activations[l].data(), trace.transposed, y.data(), batch, in, out);
    kernels::add_row_bias(y.data(), net.bias(l), batch);
    if (l + 1 < layers) kernels::tanh_inplace(y.data());
  }
}

DenseMatrix forward_batch(const Mlp& net, const DenseMatrix& inputs) {
  ForwardTrace trace;
  forward_trace(net, inputs, trace);
  return std::move(trace.activations.back());
}

std::vector<double> forward(const Mlp& net, std::span<const double> x) {
  DenseMatrix in(1, x.size(), std::vector<double>(x.begin(), x.end()));
  const DenseMatrix out = forward_batch(net, in);
  return {out.data().begin(), out.data().end()};
}

void backward(const Mlp& net, ForwardTrace& trace, const DenseMatrix& output_grads,
              std::span<double> grads, DenseMatrix* input_grads) {
  const std::size_t layers = net.num_layers();
  if (trace.activations.size() != layers + 1) {
    throw std::invalid_argument("backward: trace does not match network");
  }
  const std::size_t batch = trace.activations[0].rows();
  if (output_grads.rows() != batch || output_grads.cols() != net.output_dim()) {
    throw std::invalid_argument("backward: output gradient shape " + output_grads.shape() +
                                " does not match batch output " +
                                trace.activations.back().shape());
  }
  if (grads.size() != net.parameter_count()) {
    throw std::invalid_argument("backward: gradient buffer has wrong size");
  }

  DenseMatrix delta = output_grads;
  DenseMatrix prev;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = net.layer_sizes()[l];
    const std::size_t out = net.layer_sizes()[l + 1];
    const DenseMatrix& a = trace.activations[l];
    kernels::gemm_tn(delta.data(), a.data(), grads.subspan(net.weight_offset(l), out * in), out,
                     batch, in, /*accumulate=*/true);
    kernels::column_sums(delta.data(), grads.subspan(net.bias_offset(l), out), batch, out,
                         /*accumulate=*/true);
    if (l == 0 && input_grads == nullptr) break;
    prev.resize(batch, in);
    kernels::gemm(delta.data(), net.weights(l), prev.data(), batch, out, in);
    if (l > 0) kernels::tanh_backward(a.data(), prev.data());
    std::swap(delta, prev);
  }
  if (input_grads != nullptr) *input_grads = std::move(delta);
}

double mse_gradient(const Mlp& net, const DenseMatrix& inputs, const DenseMatrix& targets,
                    std::span<double> grads) {
  if (inputs.rows() == 0) throw std::invalid_argument("mse_gradient: empty batch");
  if (targets.rows() != inputs.rows() || targets.cols() != net.output_dim()) {
    throw std::invalid_argument("mse_gradient: targets " + targets.shape() + " for inputs " +
                                inputs.shape());
  }
  ForwardTrace trace;
  forward_trace(net, inputs, trace);
  const DenseMatrix& out = trace.activations.back();
  const double scale = 1.0 / static_cast<double>(out.size());
  DenseMatrix dout(out.rows(), out.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = out.data()[i] - targets.data()[i];
    loss += r * r;
    dout.data()[i] = 2.0 * scale * r;
  }
  std::fill(grads.begin(), grads.end(), 0.0);
  backward(net, trace, dout, grads);
  return loss * scale;
}

double mse_loss(const Mlp& net, const DenseMatrix& inputs, const DenseMatrix& targets) {
  const DenseMatrix out = forward_batch(net, inputs);
  double loss = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = out.data()[i] - targets.data()[i];
    loss += r * r;
  }
  return loss / static_cast<double>(out.size());
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double learning_rate, const AdamOptions& options,
               std::span<const std::uint8_t> decay_mask) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and state sizes differ");
  }
  if (!decay_mask.empty() && decay_mask.size() != params.size()) {
    throw std::invalid_argument("adam_step: decay mask has wrong size");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw std::runtime_error("adam_step: non-finite gradient at parameter " + std::to_string(i));
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  const double decay = learning_rate * options.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = options.beta1 * m + (1.0 - options.beta1) * g;
    v = options.beta2 * v + (1.0 - options.beta2) * g * g;
    if (decay != 0.0 && (decay_mask.empty() || decay_mask[i] != 0)) params[i] -= decay * params[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
  }
}

void adam_step(AdamState& state, Mlp& net, std::span<const double> grads, double learning_rate,
               const AdamOptions& options) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw std::runtime_error("adam_step: non-finite gradient in " + net.block_name(i));
    }
  }
  const std::vector<std::uint8_t> mask =
      options.weight_decay != 0.0 ? net.weight_mask() : std::vector<std::uint8_t>{};
  adam_step(state, net.parameters(), grads, learning_rate, options, mask);
}

double StepLrSchedule::lr_at(std::size_t epoch) const {
  const std::size_t steps = step_size == 0 ? 0 : epoch / step_size;
  return initial_lr * std::pow(gamma, static_cast<double>(steps));
}

std::vector<double> train_mse(Mlp& net, const DenseMatrix& inputs, const DenseMatrix& targets,
                              const TrainOptions& options, std::string_view label) {
  const std::size_t n = inputs.rows();
  if (n == 0) throw std::invalid_argument(std::string(label) + ": no training rows");
  if (targets.rows() != n || targets.cols() != net.output_dim() ||
      inputs.cols() != net.input_dim()) {
    throw std::invalid_argument(std::string(label) + ": inputs " + inputs.shape() +
                                " / targets " + targets.shape() + " do not fit the network");
  }
  const std::size_t batch = options.batch_size == 0 ? n : std::min(options.batch_size, n);
  const bool full_batch = batch == n;

  Rng rng(options.seed);
  AdamState adam(net.parameter_count());
  std::vector<double> grads(net.parameter_count());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  DenseMatrix xb, yb;
  std::vector<double> history;
  history.reserve(options.epochs);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const double lr = options.schedule.lr_at(epoch);
    if (!full_batch) rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t rows = std::min(batch, n - start);
      double loss;
      if (full_batch) {
        loss = mse_gradient(net, inputs, targets, grads);
      } else {
        xb.resize(rows, inputs.cols());
        yb.resize(rows, targets.cols());
        for (std::size_t r = 0; r < rows; ++r) {
          std::ranges::copy(inputs.row(order[start + r]), xb.row(r).begin());
          std::ranges::copy(targets.row(order[start + r]), yb.row(r).begin());
        }
        loss = mse_gradient(net, xb, yb, grads);
      }
      if (!std::isfinite(loss)) {
        throw std::runtime_error(std::string(label) + ": non-finite loss at epoch " +
                                 std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(rows);
      adam_step(adam, net, grads, lr, options.adam);
    }
    history.push_back(epoch_loss / static_cast<double>(n));
  }
  return history;
}

namespace {

constexpr char kMagic[12] = {'N', 'B', 'F', 'R', 'O', 'M', '-', 'M', 'L', 'P', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void write_network(std::ostream& out, const Mlp& net) {
  out.write(kMagic, sizeof kMagic);
  write_le(out, kVersion);
  write_le(out, static_cast<std::uint64_t>(net.layer_sizes().size()));
  for (std::size_t s : net.layer_sizes()) write_le(out, static_cast<std::uint64_t>(s));
  for (double p : net.parameters()) write_le(out, p);
  if (!out) throw std::runtime_error("write_network: stream error");
}

Mlp read_network(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("read_network: bad magic");
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("read_network: unsupported version " + std::to_string(version));
  }
  const auto count = read_le<std::uint64_t>(in);
  if (count < 2 || count > 4096) throw std::runtime_error("read_network: bad layer count");
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) s = static_cast<std::size_t>(read_le<std::uint64_t>(in));
  Mlp net(std::move(sizes));
  for (double& p : net.parameters()) p = read_le<double>(in);
  return net;
}

void save_network(const std::filesystem::path& path, const Mlp& net) {
  std::ostringstream buf(std::ios::binary);
  write_network(buf, net);
  write_file_atomic(path, buf.str());
}

Mlp load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_network(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace nbfrom
