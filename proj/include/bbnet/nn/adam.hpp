#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bbnet/nn/layers.hpp"

namespace bbnet::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of a flat parameter block. `step` is 1-based.
template <typename S>
void adam_update(std::span<S> param, std::span<const S> grad, std::span<S> m, std::span<S> v, long step,
                 const AdamOptions& opt) {
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
  const auto b1 = static_cast<S>(opt.beta1);
  const auto b2 = static_cast<S>(opt.beta2);
  const auto lr_t = static_cast<S>(opt.learning_rate / c1);
  const auto inv_c2 = static_cast<S>(1.0 / c2);
  const auto eps = static_cast<S>(opt.epsilon);
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = b1 * m[i] + (S{1} - b1) * grad[i];
    v[i] = b2 * v[i] + (S{1} - b2) * grad[i] * grad[i];
    param[i] -= lr_t * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
  }
}

template <typename S>
class Adam {
 public:
  Adam(std::vector<Parameter<S>*> params, AdamOptions options = {}) : params_(std::move(params)), options_(options) {
    for (auto* p : params_) {
      m_.emplace_back(p->tensor.size(), S{0});
      v_.emplace_back(p->tensor.size(), S{0});
    }
  }

  /// Applies accumulated gradients; throws TrainingError on a non-finite gradient.
  void step() {
    for (auto* p : params_) {
      if (!p->tensor.has_grad()) continue;
      for (S g : p->tensor.grad()) {
        if (!std::isfinite(static_cast<double>(g))) {
          throw TrainingError("non-finite gradient in parameter '" + p->name + "' at optimizer step " +
                              std::to_string(step_ + 1));
        }
      }
    }
    ++step_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& t = params_[i]->tensor;
      if (!t.has_grad()) continue;
      adam_update<S>(t.values(), t.grad(), m_[i], v_[i], step_, options_);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->tensor.zero_grad();
  }

  long steps() const { return step_; }
  const std::vector<std::vector<S>>& first_moments() const { return m_; }
  const std::vector<std::vector<S>>& second_moments() const { return v_; }

 private:
  std::vector<Parameter<S>*> params_;
  AdamOptions options_;
  std::vector<std::vector<S>> m_;
  std::vector<std::vector<S>> v_;
  long step_ = 0;
};

}  // namespace bbnet::nn
