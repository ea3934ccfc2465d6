#include "afil/generative/schedule.hpp"

#include <algorithm>
#include <string>

#include "afil/core/error.hpp"

namespace afil::generative {

NoiseSchedule NoiseSchedule::linear(int n_steps, double beta_start, double beta_end,
                                    bool scale_to_steps) {
  if (n_steps <= 0) throw ConfigError("noise schedule needs at least one step");
  const double scale = scale_to_steps ? 1000.0 / static_cast<double>(n_steps) : 1.0;
  std::vector<double> betas(static_cast<std::size_t>(n_steps));
  for (int t = 0; t < n_steps; ++t) {
    const double frac = n_steps == 1 ? 1.0 : static_cast<double>(t) / static_cast<double>(n_steps - 1);
    betas[t] = std::min(0.999, scale * (beta_start + frac * (beta_end - beta_start)));
  }
  return from_betas(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw ConfigError("noise schedule needs at least one step");
  NoiseSchedule s;
  s.n_steps = static_cast<int>(betas.size());
  double running = 1.0;
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("beta " + std::to_string(b) + " outside (0, 1)");
    s.alphas.push_back(1.0 - b);
    running *= 1.0 - b;
    s.alpha_bars.push_back(running);
  }
  s.betas = std::move(betas);
  return s;
}

double NoiseSchedule::posterior_variance(int t) const {
  if (t <= 0) return 0.0;
  return betas[t] * (1.0 - alpha_bars[t - 1]) / (1.0 - alpha_bars[t]);
}

FlowConfig FlowConfig::uniform(int n_euler_steps) {
  if (n_euler_steps <= 0) throw ConfigError("flow needs at least one Euler step");
  std::vector<double> grid(static_cast<std::size_t>(n_euler_steps) + 1);
  for (int k = 0; k <= n_euler_steps; ++k) grid[k] = static_cast<double>(k) / n_euler_steps;
  return from_grid(std::move(grid));
}

FlowConfig FlowConfig::from_grid(std::vector<double> grid) {
  if (grid.size() < 2 || grid.front() != 0.0 || grid.back() != 1.0)
    throw ConfigError("flow time grid must start at 0 and end at 1");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("flow time grid must be strictly increasing");
  FlowConfig f;
  f.n_euler_steps = static_cast<int>(grid.size()) - 1;
  f.t_grid = std::move(grid);
  return f;
}

Process Process::from(const models::ProcessConfig& cfg) {
  Process p;
  p.mode = cfg.mode;
  if (cfg.mode == models::Mode::diffusion)
    p.schedule = NoiseSchedule::linear(cfg.n_steps, cfg.beta_start, cfg.beta_end, cfg.scale_betas_to_steps);
  else
    p.flow = FlowConfig::uniform(cfg.n_steps);
  return p;
}

}  // namespace afil::generative
