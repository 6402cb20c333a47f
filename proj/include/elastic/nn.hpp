#pragma once

// Small dense network: tanh hidden layers, identity output, exact backward
// pass, and an Adam-style optimizer. Double precision throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "elastic/errors.hpp"
#include "elastic/rng.hpp"
#include "json.hpp"

namespace elastic {

// Parameters are stored flat: for each layer, weights (out x in, row-major)
// followed by biases (out).
class DenseNet {
 public:
  DenseNet() = default;

  // All-zero parameters.
  explicit DenseNet(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw InputError("a network needs at least an input and an output layer");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw InputError("layer sizes must be positive");
      offsets_.push_back(total);
      total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_.assign(total, 0.0);
  }

  // Uniform in +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
  static DenseNet initialized(std::vector<std::size_t> layer_sizes, Rng& rng) {
    DenseNet net(std::move(layer_sizes));
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      const double limit = std::sqrt(6.0 / static_cast<double>(net.sizes_[l] + net.sizes_[l + 1]));
      for (double& w : net.weights(l)) w = rng.uniform(-limit, limit);
    }
    return net;
  }

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t num_layers() const noexcept { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  std::size_t input_size() const noexcept { return sizes_.front(); }
  std::size_t output_size() const noexcept { return sizes_.back(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  std::span<double> weights(std::size_t layer) noexcept {
    return {params_.data() + offsets_[layer], sizes_[layer + 1] * sizes_[layer]};
  }
  std::span<const double> weights(std::size_t layer) const noexcept {
    return {params_.data() + offsets_[layer], sizes_[layer + 1] * sizes_[layer]};
  }
  std::span<double> bias(std::size_t layer) noexcept {
    return {params_.data() + offsets_[layer] + sizes_[layer + 1] * sizes_[layer], sizes_[layer + 1]};
  }
  std::span<const double> bias(std::size_t layer) const noexcept {
    return {params_.data() + offsets_[layer] + sizes_[layer + 1] * sizes_[layer], sizes_[layer + 1]};
  }

  std::size_t weights_offset(std::size_t layer) const noexcept { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const noexcept {
    return offsets_[layer] + sizes_[layer + 1] * sizes_[layer];
  }

  bool all_finite() const noexcept {
    return std::all_of(params_.begin(), params_.end(), [](double p) { return std::isfinite(p); });
  }

  bool operator==(const DenseNet&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Per-layer activations kept between forward and backward. Reusing one
// workspace across calls avoids reallocating.
struct Workspace {
  std::vector<std::vector<double>> activations;  // [0] = input, [l + 1] = output of layer l
  std::vector<double> delta;
  std::vector<double> delta_prev;
};

// Forward pass into ws; returns a view of the output.
inline std::span<const double> forward(const DenseNet& net, std::span<const double> input, Workspace& ws) {
  if (input.size() != net.input_size())
    throw InputError("forward: expected input of length " + std::to_string(net.input_size()) + ", got " +
                     std::to_string(input.size()));
  const auto& sizes = net.layer_sizes();
  ws.activations.resize(sizes.size());
  ws.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const auto w = net.weights(l);
    const auto b = net.bias(l);
    const auto& x = ws.activations[l];
    auto& y = ws.activations[l + 1];
    y.resize(out);
    const bool hidden = l + 1 < net.num_layers();
    for (std::size_t r = 0; r < out; ++r) {
      const double* row = w.data() + r * in;
      double s = b[r];
      for (std::size_t c = 0; c < in; ++c) s += row[c] * x[c];
      y[r] = hidden ? std::tanh(s) : s;
    }
  }
  return ws.activations.back();
}

inline std::vector<double> forward(const DenseNet& net, std::span<const double> input) {
  Workspace ws;
  const auto out = forward(net, input, ws);
  return {out.begin(), out.end()};
}

// Adds d(output . output_gradient)/d(params) into grad. Expects ws to hold the
// forward pass for this input.
inline void backward_from_workspace(const DenseNet& net, std::span<const double> output_gradient,
                                    std::span<double> grad, Workspace& ws) {
  if (output_gradient.size() != net.output_size()) throw InputError("backward: output gradient has wrong length");
  if (grad.size() != net.parameter_count()) throw InputError("backward: gradient buffer has wrong length");
  const auto& sizes = net.layer_sizes();
  ws.delta.assign(output_gradient.begin(), output_gradient.end());
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const auto& x = ws.activations[l];
    double* gw = grad.data() + net.weights_offset(l);
    double* gb = grad.data() + net.bias_offset(l);
    for (std::size_t r = 0; r < out; ++r) {
      const double d = ws.delta[r];
      gb[r] += d;
      if (d == 0.0) continue;
      double* row = gw + r * in;
      for (std::size_t c = 0; c < in; ++c) row[c] += d * x[c];
    }
    if (l == 0) break;
    const auto w = net.weights(l);
    ws.delta_prev.assign(in, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      const double d = ws.delta[r];
      if (d == 0.0) continue;
      const double* row = w.data() + r * in;
      for (std::size_t c = 0; c < in; ++c) ws.delta_prev[c] += row[c] * d;
    }
    for (std::size_t c = 0; c < in; ++c) ws.delta_prev[c] *= 1.0 - x[c] * x[c];  // x = tanh(pre)
    ws.delta.swap(ws.delta_prev);
  }
}

inline void backward(const DenseNet& net, std::span<const double> input, std::span<const double> output_gradient,
                     std::span<double> grad, Workspace& ws) {
  forward(net, input, ws);
  backward_from_workspace(net, output_gradient, grad, ws);
}

// Exact gradient of output . output_gradient with respect to every parameter.
inline std::vector<double> backward(const DenseNet& net, std::span<const double> input,
                                    std::span<const double> output_gradient) {
  std::vector<double> grad(net.parameter_count(), 0.0);
  Workspace ws;
  backward(net, input, output_gradient, grad, ws);
  return grad;
}

enum class Direction { Ascend, Descend };

struct OptimizerState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  OptimizerState() = default;
  OptimizerState(std::size_t n_params, double lr) : learning_rate(lr), m(n_params, 0.0), v(n_params, 0.0) {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  }
};

// Bias-corrected moment update. A non-finite gradient leaves everything
// untouched and raises DivergenceError.
inline void apply_gradients(DenseNet& net, std::span<const double> grad, OptimizerState& opt, Direction dir) {
  const std::size_t n = net.parameter_count();
  if (grad.size() != n || opt.m.size() != n || opt.v.size() != n)
    throw InputError("apply_gradients: gradient/optimizer size does not match the network");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(grad[i]))
      throw DivergenceError("non-finite gradient at parameter " + std::to_string(i) + "; update rejected");

  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  const double sign = dir == Direction::Descend ? -1.0 : 1.0;
  auto params = net.parameters();
  for (std::size_t i = 0; i < n; ++i) {
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grad[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double mhat = opt.m[i] / c1;
    const double vhat = opt.v[i] / c2;
    params[i] += sign * opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
  }
}

// {"layer_sizes": [...], "weights": [[row-major per layer]], "biases": [[...]]}
inline nlohmann::json to_json(const DenseNet& net) {
  nlohmann::json j;
  j["layer_sizes"] = net.layer_sizes();
  j["weights"] = nlohmann::json::array();
  j["biases"] = nlohmann::json::array();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weights(l);
    const auto b = net.bias(l);
    j["weights"].push_back(std::vector<double>(w.begin(), w.end()));
    j["biases"].push_back(std::vector<double>(b.begin(), b.end()));
  }
  return j;
}

inline DenseNet dense_net_from_json(const nlohmann::json& j) {
  try {
    DenseNet net(j.at("layer_sizes").get<std::vector<std::size_t>>());
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    if (ws.size() != net.num_layers() || bs.size() != net.num_layers())
      throw InputError("network JSON: layer count mismatch");
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      const auto w = ws[l].get<std::vector<double>>();
      const auto b = bs[l].get<std::vector<double>>();
      auto dw = net.weights(l);
      auto db = net.bias(l);
      if (w.size() != dw.size() || b.size() != db.size())
        throw InputError("network JSON: parameter array size mismatch in layer " + std::to_string(l));
      std::copy(w.begin(), w.end(), dw.begin());
      std::copy(b.begin(), b.end(), db.begin());
    }
    if (!net.all_finite()) throw InputError("network JSON: non-finite parameter");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("network JSON: ") + e.what());
  }
}

}  // namespace elastic
