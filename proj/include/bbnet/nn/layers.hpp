#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bbnet/nn/ops.hpp"

namespace bbnet::nn {

/// A trainable tensor with a stable name (used for checkpoints).
template <typename S>
struct Parameter {
  std::string name;
  Tensor<S> tensor;
};

/// Non-trainable state that still belongs in a checkpoint (batch-norm running statistics).
template <typename S>
struct Buffer {
  std::string name;
  std::vector<S>* values;
  Shape shape;
};

/// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
template <typename S>
Tensor<S> glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<S> v(numel(shape));
  for (S& x : v) x = static_cast<S>(rng.uniform(-limit, limit));
  return Tensor<S>::from_values(std::move(shape), std::move(v), true);
}

template <typename S>
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, std::size_t in, std::size_t out, Rng& rng)
      : weight_{name + ".weight", glorot_uniform<S>({in, out}, in, out, rng)},
        bias_{name + ".bias", Tensor<S>::zeros({out}, true)} {}

  Tensor<S> forward(const Tensor<S>& x) const { return linear(x, weight_.tensor, bias_.tensor); }

  std::size_t in_features() const { return weight_.tensor.dim(0); }
  std::size_t out_features() const { return weight_.tensor.dim(1); }
  Parameter<S>& weight() { return weight_; }
  Parameter<S>& bias() { return bias_; }

  void collect(std::vector<Parameter<S>*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  Parameter<S> weight_;
  Parameter<S> bias_;
};

/// One temporal kernel (plus bias) per channel, depth multiplier 1.
template <typename S>
class DepthwiseConv {
 public:
  DepthwiseConv() = default;
  DepthwiseConv(std::string name, std::size_t channels, std::size_t kernel_len, Rng& rng)
      : kernel_{name + ".kernel", glorot_uniform<S>({channels, kernel_len}, kernel_len, kernel_len, rng)},
        bias_{name + ".bias", Tensor<S>::zeros({channels}, true)} {}

  Tensor<S> forward(const Tensor<S>& x) const { return depthwise_conv_time(x, kernel_.tensor, bias_.tensor); }

  std::size_t kernel_len() const { return kernel_.tensor.dim(1); }
  Parameter<S>& kernel() { return kernel_; }
  Parameter<S>& bias() { return bias_; }

  void collect(std::vector<Parameter<S>*>& out) {
    out.push_back(&kernel_);
    out.push_back(&bias_);
  }

 private:
  Parameter<S> kernel_;
  Parameter<S> bias_;
};

template <typename S>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::string name, std::size_t features, BatchNormOptions options = {})
      : name_(std::move(name)),
        gamma_{name_ + ".gamma", Tensor<S>::filled({features}, S{1}, true)},
        beta_{name_ + ".beta", Tensor<S>::zeros({features}, true)},
        running_mean_(features, S{0}),
        running_var_(features, S{1}),
        options_(options) {}

  Tensor<S> forward(const Tensor<S>& x, Mode mode) {
    return batch_norm(x, gamma_.tensor, beta_.tensor, std::span<S>(running_mean_), std::span<S>(running_var_), mode,
                      options_);
  }

  std::vector<S>& running_mean() { return running_mean_; }
  std::vector<S>& running_var() { return running_var_; }
  Parameter<S>& gamma() { return gamma_; }
  Parameter<S>& beta() { return beta_; }

  void collect(std::vector<Parameter<S>*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void collect_buffers(std::vector<Buffer<S>>& out) {
    out.push_back({name_ + ".running_mean", &running_mean_, {running_mean_.size()}});
    out.push_back({name_ + ".running_var", &running_var_, {running_var_.size()}});
  }

 private:
  std::string name_;
  Parameter<S> gamma_;
  Parameter<S> beta_;
  std::vector<S> running_mean_;
  std::vector<S> running_var_;
  BatchNormOptions options_;
};

/// Deep copy of parameter values into an independent tensor set (same order).
template <typename S>
std::vector<std::vector<S>> snapshot(const std::vector<Parameter<S>*>& params) {
  std::vector<std::vector<S>> out;
  out.reserve(params.size());
  for (const auto* p : params) out.emplace_back(p->tensor.values().begin(), p->tensor.values().end());
  return out;
}

template <typename S>
void restore(const std::vector<Parameter<S>*>& params, const std::vector<std::vector<S>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i]->tensor.values();
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

}  // namespace bbnet::nn
