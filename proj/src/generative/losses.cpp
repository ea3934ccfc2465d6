#include "afil/generative/losses.hpp"

#include <cmath>

#include "afil/core/error.hpp"
#include "afil/numerics/ops.hpp"

namespace afil::generative {

namespace ops = afil::numerics;

Predictor head_predictor(const models::DagModel& model, models::Head head,
                         const models::ConditionBatch& cond) {
  return [&model, head, cond](const Tensor& noisy, std::span<const int> steps) {
    return model.predict(head, noisy, cond, steps);
  };
}

namespace {

void check_batch(const Tensor& action0, std::span<const int> steps, const Tensor& noise,
                 const char* op) {
  if (action0.rank() != 2 || action0.dim(0) == 0)
    throw ContractError(std::string(op) + ": empty batch");
  if (noise.shape() != action0.shape())
    throw ShapeError(std::string(op) + ": noise shape " + numerics::to_string(noise.shape()) +
                     " vs action shape " + numerics::to_string(action0.shape()));
  if (steps.size() != action0.dim(0))
    throw ShapeError(std::string(op) + ": " + std::to_string(steps.size()) + " steps for " +
                     std::to_string(action0.dim(0)) + " rows");
}

std::vector<int> draw_steps(std::size_t rows, int n_steps, Rng& rng) {
  std::vector<int> steps(rows);
  for (auto& s : steps) s = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_steps)));
  return steps;
}

Tensor draw_noise(const numerics::Shape& shape, Rng& rng) {
  std::vector<double> v(numerics::shape_numel(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor::from(shape, std::move(v));
}

Tensor row_mean_sq_error(const Tensor& pred, const Tensor& target) {
  return ops::mul(ops::squared_error(pred, target), 1.0 / static_cast<double>(target.dim(0)));
}

}  // namespace

Tensor q_sample(const Tensor& action0, std::span<const int> steps, const Tensor& noise,
                const NoiseSchedule& sched) {
  check_batch(action0, steps, noise, "q_sample");
  const std::size_t rows = action0.dim(0), cols = action0.dim(1);
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const int t = steps[r];
    if (t < 0 || t >= sched.n_steps)
      throw ContractError("q_sample: step " + std::to_string(t) + " outside [0, " +
                          std::to_string(sched.n_steps) + ")");
    const double a = std::sqrt(sched.alpha_bars[t]);
    const double s = std::sqrt(1.0 - sched.alpha_bars[t]);
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = a * action0[r * cols + c] + s * noise[r * cols + c];
  }
  return Tensor::from(action0.shape(), std::move(out));
}

Tensor q_sample(const Tensor& action0, int step, const Tensor& noise, const NoiseSchedule& sched) {
  const bool vector = action0.rank() == 1;
  const Tensor a = vector ? Tensor::from({1, action0.numel()}, {action0.data().begin(), action0.data().end()}) : action0;
  const Tensor n = vector ? Tensor::from({1, noise.numel()}, {noise.data().begin(), noise.data().end()}) : noise;
  std::vector<int> steps(a.dim(0), step);
  Tensor out = q_sample(a, steps, n, sched);
  return vector ? Tensor::from(action0.shape(), {out.data().begin(), out.data().end()}) : out;
}

Tensor flow_interpolate(const Tensor& action0, std::span<const int> steps, const Tensor& noise,
                        const FlowConfig& cfg) {
  check_batch(action0, steps, noise, "flow_interpolate");
  const std::size_t rows = action0.dim(0), cols = action0.dim(1);
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const int k = steps[r];
    if (k < 0 || k >= cfg.n_euler_steps)
      throw ContractError("flow_interpolate: step " + std::to_string(k) + " outside grid");
    const double t = cfg.t_grid[k];
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = (1.0 - t) * noise[r * cols + c] + t * action0[r * cols + c];
  }
  return Tensor::from(action0.shape(), std::move(out));
}

Tensor diffusion_loss(const Predictor& predict, const Tensor& action0, std::span<const int> steps,
                      const Tensor& noise, const NoiseSchedule& sched) {
  Tensor noisy = q_sample(action0, steps, noise, sched);
  return row_mean_sq_error(predict(noisy, steps), noise);
}

Tensor diffusion_loss(const Predictor& predict, const Tensor& action0, const NoiseSchedule& sched,
                      Rng& rng) {
  if (action0.rank() != 2 || action0.dim(0) == 0) throw ContractError("diffusion_loss: empty batch");
  const auto steps = draw_steps(action0.dim(0), sched.n_steps, rng);
  return diffusion_loss(predict, action0, steps, draw_noise(action0.shape(), rng), sched);
}

Tensor flow_loss(const Predictor& predict, const Tensor& action0, std::span<const int> steps,
                 const Tensor& noise, const FlowConfig& cfg) {
  Tensor noisy = flow_interpolate(action0, steps, noise, cfg);
  Tensor target = ops::sub(action0, noise).detach();
  return row_mean_sq_error(predict(noisy, steps), target);
}

Tensor flow_loss(const Predictor& predict, const Tensor& action0, const FlowConfig& cfg, Rng& rng) {
  if (action0.rank() != 2 || action0.dim(0) == 0) throw ContractError("flow_loss: empty batch");
  const auto steps = draw_steps(action0.dim(0), cfg.n_euler_steps, rng);
  return flow_loss(predict, action0, steps, draw_noise(action0.shape(), rng), cfg);
}

Tensor generative_loss(const Predictor& predict, const Tensor& action0, const Process& process,
                       Rng& rng) {
  return process.mode == models::Mode::diffusion ? diffusion_loss(predict, action0, process.schedule, rng)
                                                 : flow_loss(predict, action0, process.flow, rng);
}

}  // namespace afil::generative
