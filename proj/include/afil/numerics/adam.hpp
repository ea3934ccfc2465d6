#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "afil/numerics/tensor.hpp"

namespace afil::numerics {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  AdamConfig config;
};

// One bias-corrected Adam update of `params` in place. Lazily sizes the moment
// buffers on the first call; afterwards their length must match.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// Keeps one AdamState per parameter tensor. step() touches only the tensors it
// is handed, so parameters outside the current loss keep their moments and
// values bit for bit.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<const Tensor> params);
  const AdamState* state_for(const Tensor& param) const;
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

 private:
  AdamConfig config_;
  std::unordered_map<const void*, AdamState> states_;
};

}  // namespace afil::numerics
