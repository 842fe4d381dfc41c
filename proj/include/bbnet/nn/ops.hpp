#pragma once

#include <cstdint>
#include <span>

#include "bbnet/nn/tensor.hpp"
#include "bbnet/rng.hpp"

namespace bbnet::nn {

// Elementwise and reductions.
template <typename S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> scale(const Tensor<S>& a, S factor);
template <typename S> Tensor<S> square(const Tensor<S>& a);
template <typename S> Tensor<S> relu(const Tensor<S>& a);
template <typename S> Tensor<S> sum(const Tensor<S>& a);
template <typename S> Tensor<S> mean(const Tensor<S>& a);

/// Same values, new shape (element count must match).
template <typename S> Tensor<S> reshape(const Tensor<S>& a, Shape shape);

/// [m,k] x [k,n] -> [m,n]
template <typename S> Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);

/// Per-sample product: [B,m,k] x [B,k,n] -> [B,m,n]
template <typename S> Tensor<S> batched_matmul(const Tensor<S>& a, const Tensor<S>& b);

/// x[..., k] * w[k, n] (+ bias[n]) -> [..., n]. `bias` may be undefined.
template <typename S> Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias);

/// Per-channel valid correlation along the last axis.
/// x: [N,T] or [B,N,T]; kernel: [N,K]; bias: [N] or undefined. Output length T-K+1.
template <typename S>
Tensor<S> depthwise_conv_time(const Tensor<S>& x, const Tensor<S>& kernel, const Tensor<S>& bias);

/// Sliding maximum along the last axis, stride 1. Ties route the gradient to the lowest index.
template <typename S> Tensor<S> max_pool_time(const Tensor<S>& x, std::size_t window);

struct BatchNormOptions {
  double momentum = 0.99;
  double epsilon = 1e-3;
};

/// Batch normalization over axis 1 of a [B, C, ...] tensor (statistics over every other axis).
/// Train mode uses batch statistics and updates the running buffers in place;
/// eval mode uses the running buffers.
template <typename S>
Tensor<S> batch_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta, std::span<S> running_mean,
                     std::span<S> running_var, Mode mode, const BatchNormOptions& options = {});

/// Inverted dropout; identity in eval mode or at rate 0.
template <typename S> Tensor<S> dropout(const Tensor<S>& x, double rate, Mode mode, Rng& rng);

/// Mean over the batch of -log softmax(logits)[label]. logits: [B, M].
template <typename S> Tensor<S> softmax_cross_entropy(const Tensor<S>& logits, std::span<const int> labels);

/// Row-wise softmax (no gradient).
template <typename S> Tensor<S> softmax(const Tensor<S>& logits);

}  // namespace bbnet::nn
