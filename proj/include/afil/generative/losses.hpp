#pragma once

#include <functional>
#include <span>

#include "afil/core/rng.hpp"
#include "afil/generative/schedule.hpp"
#include "afil/models/dag_model.hpp"

namespace afil::generative {

using numerics::Tensor;

// Maps noisy chunks [B, D] at per-row steps to a prediction [B, D].
using Predictor = std::function<Tensor(const Tensor& noisy, std::span<const int> steps)>;

Predictor head_predictor(const models::DagModel& model, models::Head head,
                         const models::ConditionBatch& cond);

// sqrt(abar) * action0 + sqrt(1 - abar) * noise, row r at steps[r].
Tensor q_sample(const Tensor& action0, std::span<const int> steps, const Tensor& noise,
                const NoiseSchedule& sched);
Tensor q_sample(const Tensor& action0, int step, const Tensor& noise, const NoiseSchedule& sched);

// (1 - t) * noise + t * action0 on the flow grid, row r at t_grid[steps[r]].
Tensor flow_interpolate(const Tensor& action0, std::span<const int> steps, const Tensor& noise,
                        const FlowConfig& cfg);

// Mean over rows of ||noise - prediction||^2 (diffusion) or
// ||(action0 - noise) - prediction||^2 (flow). The explicit overloads take the
// step and noise draws; the Rng overloads draw B steps uniformly, then B x D
// standard normals.
Tensor diffusion_loss(const Predictor& predict, const Tensor& action0, std::span<const int> steps,
                      const Tensor& noise, const NoiseSchedule& sched);
Tensor diffusion_loss(const Predictor& predict, const Tensor& action0, const NoiseSchedule& sched,
                      Rng& rng);
Tensor flow_loss(const Predictor& predict, const Tensor& action0, std::span<const int> steps,
                 const Tensor& noise, const FlowConfig& cfg);
Tensor flow_loss(const Predictor& predict, const Tensor& action0, const FlowConfig& cfg, Rng& rng);

// Dispatches on process.mode.
Tensor generative_loss(const Predictor& predict, const Tensor& action0, const Process& process,
                       Rng& rng);

}  // namespace afil::generative
