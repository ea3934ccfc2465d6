#include "afil/generative/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "afil/core/error.hpp"

namespace afil::generative {

bool SampleResult::any_fault() const {
  return std::any_of(faulted.begin(), faulted.end(), [](bool f) { return f; });
}

namespace {

bool verbose_clip_log() {
  static const bool on = std::getenv("AFIL_LOG_CLIP") != nullptr;
  return on;
}

// Evaluates the callback and screens rows for non-finite output.
std::vector<double> evaluate(const ScoreFn& score, const std::vector<double>& x, std::size_t rows,
                             std::size_t dim, int step, std::vector<bool>& faulted) {
  Tensor out = score(Tensor::from({rows, dim}, x), step);
  if (out.numel() != rows * dim)
    throw ShapeError("score callback returned shape " + numerics::to_string(out.shape()) +
                     " for a batch of [" + std::to_string(rows) + "," + std::to_string(dim) + "]");
  std::vector<double> v(out.data().begin(), out.data().end());
  for (std::size_t r = 0; r < rows; ++r) {
    if (faulted[r]) continue;
    for (std::size_t c = 0; c < dim; ++c)
      if (!std::isfinite(v[r * dim + c])) {
        faulted[r] = true;
        break;
      }
  }
  return v;
}

std::size_t clip_rows(std::vector<double>& x, std::size_t rows, std::size_t dim, double bound,
                      std::vector<bool>& faulted) {
  std::size_t events = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = x.data() + r * dim;
    if (faulted[r]) {
      std::fill(row, row + dim, 0.0);
      continue;
    }
    for (std::size_t c = 0; c < dim; ++c) {
      if (row[c] > bound) {
        row[c] = bound;
        ++events;
      } else if (row[c] < -bound) {
        row[c] = -bound;
        ++events;
      }
    }
  }
  return events;
}

}  // namespace

SampleResult sample(const ScoreFn& score, const Process& process, std::span<Rng> rngs,
                    std::size_t dim, const SampleOptions& options) {
  const std::size_t rows = rngs.size();
  if (rows == 0 || dim == 0) throw ContractError("sample: empty batch");
  SampleResult res;
  res.faulted.assign(rows, false);
  std::vector<double> x(rows * dim);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < dim; ++c) x[r * dim + c] = rngs[r].normal();

  if (process.mode == models::Mode::diffusion) {
    const auto& s = process.schedule;
    for (int t = s.n_steps - 1; t >= 0; --t) {
      const auto eps = evaluate(score, x, rows, dim, t, res.faulted);
      const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alphas[t]);
      const double eps_coef = s.betas[t] / std::sqrt(1.0 - s.alpha_bars[t]);
      const double sigma = std::sqrt(s.posterior_variance(t));
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < dim; ++c) {
          const std::size_t i = r * dim + c;
          double next = inv_sqrt_alpha * (x[i] - eps_coef * eps[i]);
          if (t > 0) next += sigma * rngs[r].normal();
          x[i] = next;
        }
      res.clip_events += clip_rows(x, rows, dim, options.clip, res.faulted);
    }
  } else {
    const auto& f = process.flow;
    for (int k = 0; k < f.n_euler_steps; ++k) {
      const auto v = evaluate(score, x, rows, dim, k, res.faulted);
      const double dt = f.t_grid[k + 1] - f.t_grid[k];
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += dt * v[i];
      res.clip_events += clip_rows(x, rows, dim, options.clip, res.faulted);
    }
  }
  if (res.clip_events > 0 && verbose_clip_log())
    std::fprintf(stderr, "[sampler] clipped %zu entries to +-%g\n", res.clip_events, options.clip);

  if (options.normalizer != nullptr)
    for (std::size_t r = 0; r < rows; ++r)
      if (!res.faulted[r]) options.normalizer->denormalize_chunk(std::span<double>(x.data() + r * dim, dim));
  res.actions = Tensor::from({rows, dim}, std::move(x));
  return res;
}

Tensor sample_one(const ScoreFn& score, const Process& process, Rng& rng, std::size_t dim,
                  const SampleOptions& options) {
  SampleResult res = sample(score, process, std::span<Rng>(&rng, 1), dim, options);
  if (res.faulted[0]) throw NumericError("sampler: non-finite score output");
  return Tensor::from({dim}, {res.actions.data().begin(), res.actions.data().end()});
}

}  // namespace afil::generative
