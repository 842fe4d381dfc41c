#include "bbnet/nn/ops.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace bbnet::nn {

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatMap = Eigen::Map<RowMat<S>>;
template <typename S>
using ConstMatMap = Eigen::Map<const RowMat<S>>;
template <typename S>
using VecMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>;
template <typename S>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>;

template <typename S>
using NodeT = detail::Node<S>;

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename S>
MatMap<S> grad_map(NodeT<S>& node, Eigen::Index rows, Eigen::Index cols) {
  return MatMap<S>(node.grad.data(), rows, cols);
}

template <typename S>
ConstMatMap<S> value_map(const NodeT<S>& node, Eigen::Index rows, Eigen::Index cols) {
  return ConstMatMap<S>(node.value.data(), rows, cols);
}

}  // namespace

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape(a, b, "add");
  Storage<S> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor<S>::make_result(a.shape(), std::move(out), {a, b}, [](NodeT<S>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape(a, b, "mul");
  Storage<S> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return Tensor<S>::make_result(a.shape(), std::move(out), {a, b}, [](NodeT<S>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += self.grad[i] * pb.value[i];
      if (pb.requires_grad) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S factor) {
  Storage<S> out(a.values().begin(), a.values().end());
  for (S& v : out) v *= factor;
  return Tensor<S>::make_result(a.shape(), std::move(out), {a}, [factor](NodeT<S>& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += factor * self.grad[i];
  });
}

template <typename S>
Tensor<S> square(const Tensor<S>& a) {
  Storage<S> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * a[i];
  return Tensor<S>::make_result(a.shape(), std::move(out), {a}, [](NodeT<S>& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += S{2} * p.value[i] * self.grad[i];
  });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
  Storage<S> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] > S{0} ? a[i] : S{0};
  return Tensor<S>::make_result(a.shape(), std::move(out), {a}, [](NodeT<S>& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (p.value[i] > S{0}) p.grad[i] += self.grad[i];
    }
  });
}

template <typename S>
Tensor<S> sum(const Tensor<S>& a) {
  const S total = ConstVecMap<S>(a.values().data(), static_cast<Eigen::Index>(a.size())).sum();
  return Tensor<S>::make_result({1}, {total}, {a}, [](NodeT<S>& self) {
    auto& p = *self.parents[0];
    for (S& g : p.grad) g += self.grad[0];
  });
}

template <typename S>
Tensor<S> mean(const Tensor<S>& a) {
  return scale(sum(a), S{1} / static_cast<S>(a.size()));
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  Storage<S> out(a.values().begin(), a.values().end());
  return Tensor<S>::make_result(std::move(shape), std::move(out), {a}, [](NodeT<S>& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  Storage<S> out(static_cast<std::size_t>(m * n));
  MatMap<S>(out.data(), m, n).noalias() =
      ConstMatMap<S>(a.values().data(), m, k) * ConstMatMap<S>(b.values().data(), k, n);
  return Tensor<S>::make_result({a.dim(0), b.dim(1)}, std::move(out), {a, b}, [m, k, n](NodeT<S>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const ConstMatMap<S> g(self.grad.data(), m, n);
    if (pa.requires_grad) grad_map(pa, m, k).noalias() += g * value_map(pb, k, n).transpose();
    if (pb.requires_grad) grad_map(pb, k, n).noalias() += value_map(pa, m, k).transpose() * g;
  });
}

template <typename S>
Tensor<S> batched_matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    throw ShapeError("batched_matmul: incompatible shapes " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  const std::size_t batch = a.dim(0);
  const auto m = static_cast<Eigen::Index>(a.dim(1));
  const auto k = static_cast<Eigen::Index>(a.dim(2));
  const auto n = static_cast<Eigen::Index>(b.dim(2));
  const auto sa = static_cast<std::size_t>(m * k);
  const auto sb = static_cast<std::size_t>(k * n);
  const auto so = static_cast<std::size_t>(m * n);
  Storage<S> out(batch * so);
  for (std::size_t i = 0; i < batch; ++i) {
    MatMap<S>(out.data() + i * so, m, n).noalias() =
        ConstMatMap<S>(a.values().data() + i * sa, m, k) * ConstMatMap<S>(b.values().data() + i * sb, k, n);
  }
  return Tensor<S>::make_result(
      {batch, a.dim(1), b.dim(2)}, std::move(out), {a, b}, [=](NodeT<S>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        for (std::size_t i = 0; i < batch; ++i) {
          const ConstMatMap<S> g(self.grad.data() + i * so, m, n);
          if (pa.requires_grad) {
            MatMap<S>(pa.grad.data() + i * sa, m, k).noalias() +=
                g * ConstMatMap<S>(pb.value.data() + i * sb, k, n).transpose();
          }
          if (pb.requires_grad) {
            MatMap<S>(pb.grad.data() + i * sb, k, n).noalias() +=
                ConstMatMap<S>(pa.value.data() + i * sa, m, k).transpose() * g;
          }
        }
      });
}

template <typename S>
Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias) {
  if (w.rank() != 2 || x.shape().back() != w.dim(0)) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " incompatible with weights " +
                     shape_string(w.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != w.dim(1))) {
    throw ShapeError("linear: bias shape " + shape_string(bias.shape()) + " does not match " + shape_string(w.shape()));
  }
  const auto k = static_cast<Eigen::Index>(w.dim(0));
  const auto n = static_cast<Eigen::Index>(w.dim(1));
  const auto rows = static_cast<Eigen::Index>(x.size()) / k;

  Storage<S> out(static_cast<std::size_t>(rows * n));
  MatMap<S> y(out.data(), rows, n);
  y.noalias() = ConstMatMap<S>(x.values().data(), rows, k) * ConstMatMap<S>(w.values().data(), k, n);
  if (has_bias) y.rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(bias.values().data(), n);

  Shape shape = x.shape();
  shape.back() = w.dim(1);
  std::vector<Tensor<S>> parents{x, w};
  if (has_bias) parents.push_back(bias);
  return Tensor<S>::make_result(std::move(shape), std::move(out), std::move(parents), [=](NodeT<S>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    const ConstMatMap<S> g(self.grad.data(), rows, n);
    if (px.requires_grad) grad_map(px, rows, k).noalias() += g * value_map(pw, k, n).transpose();
    if (pw.requires_grad) grad_map(pw, k, n).noalias() += value_map(px, rows, k).transpose() * g;
    if (has_bias && self.parents[2]->requires_grad) {
      grad_map(*self.parents[2], 1, n) += g.colwise().sum();
    }
  });
}

template <typename S>
Tensor<S> depthwise_conv_time(const Tensor<S>& x, const Tensor<S>& kernel, const Tensor<S>& bias) {
  if (x.rank() != 2 && x.rank() != 3) throw ShapeError("depthwise_conv_time: input must be [N,T] or [B,N,T]");
  const std::size_t batch = x.rank() == 3 ? x.dim(0) : 1;
  const std::size_t channels = x.dim(x.rank() - 2);
  const std::size_t t_in = x.dim(x.rank() - 1);
  if (kernel.rank() != 2 || kernel.dim(0) != channels) {
    throw ShapeError("depthwise_conv_time: kernel " + shape_string(kernel.shape()) + " does not match " +
                     std::to_string(channels) + " channels");
  }
  const std::size_t klen = kernel.dim(1);
  if (t_in < klen) {
    throw ShapeError("depthwise_conv_time: " + std::to_string(t_in) + " samples shorter than kernel length " +
                     std::to_string(klen));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != channels)) throw ShapeError("depthwise_conv_time: bad bias");
  const std::size_t t_out = t_in - klen + 1;

  Storage<S> out(batch * channels * t_out);
  const S* xv = x.values().data();
  const S* kv = kernel.values().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const S* xr = xv + (b * channels + c) * t_in;
      S* yr = out.data() + (b * channels + c) * t_out;
      const S* kr = kv + c * klen;
      VecMap<S> y(yr, static_cast<Eigen::Index>(t_out));
      y.setConstant(has_bias ? bias[c] : S{0});
      for (std::size_t j = 0; j < klen; ++j) y += kr[j] * ConstVecMap<S>(xr + j, static_cast<Eigen::Index>(t_out));
    }
  }

  Shape shape = x.shape();
  shape.back() = t_out;
  std::vector<Tensor<S>> parents{x, kernel};
  if (has_bias) parents.push_back(bias);
  return Tensor<S>::make_result(std::move(shape), std::move(out), std::move(parents), [=](NodeT<S>& self) {
    auto& px = *self.parents[0];
    auto& pk = *self.parents[1];
    NodeT<S>* pb = has_bias ? self.parents[2].get() : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        const S* g = self.grad.data() + (b * channels + c) * t_out;
        const ConstVecMap<S> gv(g, static_cast<Eigen::Index>(t_out));
        if (px.requires_grad) {
          S* dx = px.grad.data() + (b * channels + c) * t_in;
          const S* kr = pk.value.data() + c * klen;
          for (std::size_t j = 0; j < klen; ++j) VecMap<S>(dx + j, static_cast<Eigen::Index>(t_out)) += kr[j] * gv;
        }
        if (pk.requires_grad) {
          const S* xr = px.value.data() + (b * channels + c) * t_in;
          S* dk = pk.grad.data() + c * klen;
          for (std::size_t j = 0; j < klen; ++j) {
            dk[j] += gv.dot(ConstVecMap<S>(xr + j, static_cast<Eigen::Index>(t_out)));
          }
        }
        if (pb && pb->requires_grad) pb->grad[c] += gv.sum();
      }
    }
  });
}

template <typename S>
Tensor<S> max_pool_time(const Tensor<S>& x, std::size_t window) {
  if (window == 0) throw ParameterError("max_pool_time: window must be >= 1");
  const std::size_t t_in = x.shape().back();
  if (t_in < window) {
    throw ShapeError("max_pool_time: " + std::to_string(t_in) + " samples shorter than window " +
                     std::to_string(window));
  }
  const std::size_t rows = x.size() / t_in;
  const std::size_t t_out = t_in - window + 1;

  // Block prefix/suffix maxima (van Herk / Gil-Werman): O(1) per output.
  Storage<S> out(rows * t_out);
  std::vector<std::uint32_t> argmax(rows * t_out);
  std::vector<std::uint32_t> prefix(t_in);
  std::vector<std::uint32_t> suffix(t_in);
  for (std::size_t r = 0; r < rows; ++r) {
    const S* xr = x.values().data() + r * t_in;
    for (std::size_t start = 0; start < t_in; start += window) {
      const std::size_t end = std::min(start + window, t_in);
      prefix[start] = static_cast<std::uint32_t>(start);
      for (std::size_t i = start + 1; i < end; ++i) {
        prefix[i] = xr[i] > xr[prefix[i - 1]] ? static_cast<std::uint32_t>(i) : prefix[i - 1];
      }
      suffix[end - 1] = static_cast<std::uint32_t>(end - 1);
      for (std::size_t i = end - 1; i-- > start;) {
        suffix[i] = xr[i] >= xr[suffix[i + 1]] ? static_cast<std::uint32_t>(i) : suffix[i + 1];
      }
    }
    for (std::size_t t = 0; t < t_out; ++t) {
      const std::uint32_t left = suffix[t];
      const std::uint32_t right = prefix[t + window - 1];
      const std::uint32_t best = xr[left] >= xr[right] ? left : right;
      argmax[r * t_out + t] = best;
      out[r * t_out + t] = xr[best];
    }
  }

  Shape shape = x.shape();
  shape.back() = t_out;
  return Tensor<S>::make_result(std::move(shape), std::move(out), {x},
                                [argmax = std::move(argmax), rows, t_in, t_out](NodeT<S>& self) {
                                  auto& px = *self.parents[0];
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    S* dx = px.grad.data() + r * t_in;
                                    const S* g = self.grad.data() + r * t_out;
                                    const std::uint32_t* am = argmax.data() + r * t_out;
                                    for (std::size_t t = 0; t < t_out; ++t) dx[am[t]] += g[t];
                                  }
                                });
}

template <typename S>
Tensor<S> batch_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta, std::span<S> running_mean,
                     std::span<S> running_var, Mode mode, const BatchNormOptions& options) {
  if (x.rank() < 2) throw ShapeError("batch_norm: input must be [B, C, ...]");
  const std::size_t batch = x.dim(0);
  const std::size_t channels = x.dim(1);
  const std::size_t inner = x.size() / (batch * channels);
  if (gamma.size() != channels || beta.size() != channels || running_mean.size() != channels ||
      running_var.size() != channels) {
    throw ShapeError("batch_norm: parameter size does not match " + std::to_string(channels) + " features");
  }
  if (mode == Mode::Train && batch < 2) {
    throw UsageError("batch_norm: train mode needs a batch of at least 2 for statistics");
  }
  const S eps = static_cast<S>(options.epsilon);
  const S* xv = x.values().data();

  std::vector<S> mu(channels);
  std::vector<S> inv_std(channels);
  if (mode == Mode::Train) {
    const double count = static_cast<double>(batch * inner);
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        s += ConstVecMap<S>(xv + (b * channels + c) * inner, static_cast<Eigen::Index>(inner)).template cast<double>().sum();
      }
      const double m = s / count;
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const S* row = xv + (b * channels + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          const double d = static_cast<double>(row[i]) - m;
          ss += d * d;
        }
      }
      const double var = ss / count;
      mu[c] = static_cast<S>(m);
      inv_std[c] = static_cast<S>(1.0 / std::sqrt(var + options.epsilon));
      const auto mom = static_cast<S>(options.momentum);
      running_mean[c] = mom * running_mean[c] + (S{1} - mom) * static_cast<S>(m);
      running_var[c] = mom * running_var[c] + (S{1} - mom) * static_cast<S>(var);
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mu[c] = running_mean[c];
      inv_std[c] = S{1} / std::sqrt(running_var[c] + eps);
    }
  }

  Storage<S> xhat(x.size());
  Storage<S> out(x.size());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t off = (b * channels + c) * inner;
      const S g = gamma[c];
      const S be = beta[c];
      for (std::size_t i = 0; i < inner; ++i) {
        const S h = (xv[off + i] - mu[c]) * inv_std[c];
        xhat[off + i] = h;
        out[off + i] = g * h + be;
      }
    }
  }

  const bool train = mode == Mode::Train;
  return Tensor<S>::make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), batch, channels, inner, train](NodeT<S>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const S count = static_cast<S>(batch * inner);
        for (std::size_t c = 0; c < channels; ++c) {
          S sum_g = 0;
          S sum_gx = 0;
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * channels + c) * inner;
            const ConstVecMap<S> g(self.grad.data() + off, static_cast<Eigen::Index>(inner));
            sum_g += g.sum();
            sum_gx += g.dot(ConstVecMap<S>(xhat.data() + off, static_cast<Eigen::Index>(inner)));
          }
          if (pg.requires_grad) pg.grad[c] += sum_gx;
          if (pb.requires_grad) pb.grad[c] += sum_g;
          if (!px.requires_grad) continue;
          const S gam = pg.value[c];
          const S k = gam * inv_std[c];
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * channels + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
              if (train) {
                px.grad[off + i] += k * (self.grad[off + i] - sum_g / count - xhat[off + i] * sum_gx / count);
              } else {
                px.grad[off + i] += k * self.grad[off + i];
              }
            }
          }
        }
      });
}

template <typename S>
Tensor<S> dropout(const Tensor<S>& x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
  if (mode == Mode::Eval || rate == 0.0) return x;
  const S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
  Storage<S> mask(x.size());
  Storage<S> out(x.size());
  // Two 32-bit draws per 64-bit word; an element is kept when its draw is >= rate * 2^32.
  const auto threshold = static_cast<std::uint64_t>(std::ldexp(rate, 32));
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % 2 == 0) word = rng.next_u64();
    const std::uint64_t draw = i % 2 == 0 ? (word & 0xffffffffu) : (word >> 32);
    mask[i] = draw >= threshold ? keep_scale : S{0};
    out[i] = x[i] * mask[i];
  }
  return Tensor<S>::make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](NodeT<S>& self) {
    auto& px = *self.parents[0];
    for (std::size_t i = 0; i < mask.size(); ++i) px.grad[i] += mask[i] * self.grad[i];
  });
}

template <typename S>
Tensor<S> softmax(const Tensor<S>& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax: logits must be [B, M]");
  const std::size_t rows = logits.dim(0);
  const std::size_t m = logits.dim(1);
  Storage<S> out(logits.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const S* z = logits.values().data() + r * m;
    const S zmax = *std::max_element(z, z + m);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) total += std::exp(static_cast<double>(z[j] - zmax));
    for (std::size_t j = 0; j < m; ++j) {
      out[r * m + j] = static_cast<S>(std::exp(static_cast<double>(z[j] - zmax)) / total);
    }
  }
  return Tensor<S>::from_buffer(logits.shape(), std::move(out));
}

template <typename S>
Tensor<S> softmax_cross_entropy(const Tensor<S>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy: logits must be [B, M]");
  const std::size_t rows = logits.dim(0);
  const std::size_t m = logits.dim(1);
  if (m < 2) throw ParameterError("softmax_cross_entropy: need at least 2 classes");
  if (labels.size() != rows) throw ShapeError("softmax_cross_entropy: label count does not match batch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= m) {
      throw ParameterError("label " + std::to_string(y) + " outside [0, " + std::to_string(m) + ")");
    }
  }

  Tensor<S> probs = softmax(logits);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const S* z = logits.values().data() + r * m;
    const double zmax = static_cast<double>(*std::max_element(z, z + m));
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) total += std::exp(static_cast<double>(z[j]) - zmax);
    loss += zmax + std::log(total) - static_cast<double>(z[labels[r]]);
  }
  loss /= static_cast<double>(rows);

  std::vector<int> y(labels.begin(), labels.end());
  return Tensor<S>::make_result({1}, {static_cast<S>(loss)}, {logits},
                                [probs, y = std::move(y), rows, m](NodeT<S>& self) {
                                  auto& pl = *self.parents[0];
                                  const S upstream = self.grad[0] / static_cast<S>(rows);
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    for (std::size_t j = 0; j < m; ++j) {
                                      const S target = static_cast<std::size_t>(y[r]) == j ? S{1} : S{0};
                                      pl.grad[r * m + j] += upstream * (probs[r * m + j] - target);
                                    }
                                  }
                                });
}

#define BBNET_INSTANTIATE_OPS(S)                                                                             \
  template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                                              \
  template Tensor<S> mul(const Tensor<S>&, const Tensor<S>&);                                              \
  template Tensor<S> scale(const Tensor<S>&, S);                                                           \
  template Tensor<S> square(const Tensor<S>&);                                                             \
  template Tensor<S> relu(const Tensor<S>&);                                                               \
  template Tensor<S> sum(const Tensor<S>&);                                                                \
  template Tensor<S> mean(const Tensor<S>&);                                                               \
  template Tensor<S> reshape(const Tensor<S>&, Shape);                                                     \
  template Tensor<S> matmul(const Tensor<S>&, const Tensor<S>&);                                           \
  template Tensor<S> batched_matmul(const Tensor<S>&, const Tensor<S>&);                                   \
  template Tensor<S> linear(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);                         \
  template Tensor<S> depthwise_conv_time(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);            \
  template Tensor<S> max_pool_time(const Tensor<S>&, std::size_t);                                         \
  template Tensor<S> batch_norm(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, std::span<S>,        \
                                std::span<S>, Mode, const BatchNormOptions&);                              \
  template Tensor<S> dropout(const Tensor<S>&, double, Mode, Rng&);                                        \
  template Tensor<S> softmax_cross_entropy(const Tensor<S>&, std::span<const int>);                        \
  template Tensor<S> softmax(const Tensor<S>&);

BBNET_INSTANTIATE_OPS(float)
BBNET_INSTANTIATE_OPS(double)

}  // namespace bbnet::nn
