#pragma once

#include <vector>

#include "afil/models/dag_model.hpp"

namespace afil::generative {

struct NoiseSchedule {
  int n_steps = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  // Linear betas from beta_start to beta_end. These endpoints are the usual
  // 1000-step values; with scale_to_steps they are multiplied by 1000/n_steps
  // so a short chain still ends near pure noise.
  static NoiseSchedule linear(int n_steps, double beta_start = 1e-4, double beta_end = 0.02,
                              bool scale_to_steps = true);
  static NoiseSchedule from_betas(std::vector<double> betas);

  // Variance of q(x_{t-1} | x_t, x_0); zero at t = 0.
  double posterior_variance(int t) const;
};

struct FlowConfig {
  int n_euler_steps = 0;
  std::vector<double> t_grid;  // n_euler_steps + 1 points from 0 to 1

  static FlowConfig uniform(int n_euler_steps);
  static FlowConfig from_grid(std::vector<double> grid);
};

// Everything a sampler or loss needs to know about the noise process.
struct Process {
  models::Mode mode = models::Mode::diffusion;
  NoiseSchedule schedule;
  FlowConfig flow;

  static Process from(const models::ProcessConfig& cfg);
  int n_steps() const { return mode == models::Mode::diffusion ? schedule.n_steps : flow.n_euler_steps; }
};

}  // namespace afil::generative
