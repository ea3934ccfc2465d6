#include "afil/numerics/adam.hpp"

#include <cmath>

#include "afil/core/error.hpp"
#include "afil/kernels/kernels.hpp"

namespace afil::numerics {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size())
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params vs " +
                     std::to_string(grads.size()) + " grads");
  if (!(state.config.lr > 0.0)) throw ContractError("adam_step: lr must be positive");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam_step: moment buffers sized " + std::to_string(state.m.size()) +
                     " for " + std::to_string(params.size()) + " params");
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const kernels::AdamCoeffs c{state.config.lr,
                              state.config.beta1,
                              state.config.beta2,
                              state.config.eps,
                              1.0 - std::pow(state.config.beta1, t),
                              1.0 - std::pow(state.config.beta2, t)};
  kernels::active().adam(params.size(), params.data(), grads.data(), state.m.data(),
                         state.v.data(), c);
}

void Adam::step(std::span<const Tensor> params) {
  for (const auto& p : params) {
    auto& st = states_[p.id()];
    st.config = config_;
    Tensor handle = p;
    auto values = handle.mutable_data();
    if (!p.has_grad()) {
      // Untouched by this loss: zero gradient still advances the moments.
      const std::vector<double> zeros(values.size(), 0.0);
      adam_step(values, zeros, st);
    } else {
      adam_step(values, p.grad(), st);
    }
  }
}

const AdamState* Adam::state_for(const Tensor& param) const {
  auto it = states_.find(param.id());
  return it == states_.end() ? nullptr : &it->second;
}

}  // namespace afil::numerics
