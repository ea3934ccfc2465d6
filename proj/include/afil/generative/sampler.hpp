#pragma once

#include <functional>
#include <span>
#include <vector>

#include "afil/core/rng.hpp"
#include "afil/generative/schedule.hpp"
#include "afil/models/normalizer.hpp"
#include "afil/numerics/tensor.hpp"

namespace afil::generative {

using numerics::Tensor;

// Noise (diffusion) or velocity (flow) prediction for the current batch of
// noisy chunks [B, D] at sampler step `step`.
using ScoreFn = std::function<Tensor(const Tensor& noisy, int step)>;

struct SampleOptions {
  double clip = 3.0;  // bound on every intermediate value, normalized units
  const models::Normalizer* normalizer = nullptr;  // de-normalize the result when set
};

struct SampleResult {
  Tensor actions;                 // [B, D]
  std::vector<bool> faulted;      // rows whose callback output went non-finite
  std::size_t clip_events = 0;    // clipped entries over the whole run

  bool any_fault() const;
};

// Diffusion: ancestral DDPM reverse loop from N(0, I), steps n-1 .. 0.
// Flow: forward Euler over the time grid from N(0, I).
// Row r draws all of its noise from rngs[r], so a row's result does not depend
// on which other rows share the batch. A faulted row is frozen at zero and
// flagged; other rows continue.
SampleResult sample(const ScoreFn& score, const Process& process, std::span<Rng> rngs,
                    std::size_t dim, const SampleOptions& options = {});

// Single chunk from one generator; throws NumericError on a fault.
Tensor sample_one(const ScoreFn& score, const Process& process, Rng& rng, std::size_t dim,
                  const SampleOptions& options = {});

}  // namespace afil::generative
