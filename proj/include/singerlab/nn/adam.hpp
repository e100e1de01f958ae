#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "singerlab/nn/tensor.hpp"

namespace singerlab::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over the trainable tensors of a ParamSet. Non-trainable tensors
// (batch-norm running statistics) are skipped.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(const ParamSet<T>& params, AdamConfig config)
      : config_(config), m_(params.size(), T(0)), v_(params.size(), T(0)) {}

  void step(ParamSet<T>& params, const ParamSet<T>& grads, double lr) {
    if (grads.size() != params.size() || m_.size() != params.size()) {
      throw std::invalid_argument("adam: parameter size mismatch");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
    const T step = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(config_.eps);
    auto& p = params.data();
    const auto& g = grads.data();
    for (const auto& s : params.specs()) {
      if (!s.trainable) continue;
      for (std::size_t i = s.offset; i < s.offset + s.size; ++i) {
        m_[i] = b1 * m_[i] + (T(1) - b1) * g[i];
        v_[i] = b2 * v_[i] + (T(1) - b2) * g[i] * g[i];
        p[i] -= step * m_[i] / (std::sqrt(v_[i] * inv_bc2) + eps);
      }
    }
  }

  const AdamConfig& config() const { return config_; }
  long long steps() const { return t_; }
  std::vector<T>& m() { return m_; }
  std::vector<T>& v() { return v_; }
  const std::vector<T>& m() const { return m_; }
  const std::vector<T>& v() const { return v_; }
  void set_steps(long long t) { t_ = t; }

 private:
  AdamConfig config_;
  std::vector<T> m_, v_;
  long long t_ = 0;
};

}  // namespace singerlab::nn
