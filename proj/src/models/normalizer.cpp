#include "afil/models/normalizer.hpp"

#include "afil/core/error.hpp"

namespace afil::models {

Normalizer Normalizer::identity(std::size_t obs_dim, std::size_t action_dim) {
  Normalizer n;
  n.obs_mean.assign(obs_dim, 0.0);
  n.obs_std.assign(obs_dim, 1.0);
  n.action_min.assign(action_dim, -1.0);
  n.action_max.assign(action_dim, 1.0);
  return n;
}

void Normalizer::normalize_obs(std::span<const double> raw, std::span<double> out) const {
  if (raw.size() != obs_dim() || out.size() != obs_dim())
    throw ShapeError("normalize_obs: observation of length " + std::to_string(raw.size()) +
                     " vs statistics of length " + std::to_string(obs_dim()));
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - obs_mean[i]) / obs_std[i];
}

std::vector<double> Normalizer::normalize_obs(std::span<const double> raw) const {
  std::vector<double> out(raw.size());
  normalize_obs(raw, out);
  return out;
}

void Normalizer::normalize_chunk(std::span<double> chunk) const {
  const std::size_t d = action_dim();
  if (d == 0 || chunk.size() % d != 0)
    throw ShapeError("normalize_chunk: chunk of length " + std::to_string(chunk.size()) +
                     " is not a multiple of action_dim " + std::to_string(d));
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    const std::size_t j = i % d;
    chunk[i] = 2.0 * (chunk[i] - action_min[j]) / (action_max[j] - action_min[j]) - 1.0;
  }
}

void Normalizer::denormalize_chunk(std::span<double> chunk) const {
  const std::size_t d = action_dim();
  if (d == 0 || chunk.size() % d != 0)
    throw ShapeError("denormalize_chunk: chunk of length " + std::to_string(chunk.size()) +
                     " is not a multiple of action_dim " + std::to_string(d));
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    const std::size_t j = i % d;
    chunk[i] = (chunk[i] + 1.0) * 0.5 * (action_max[j] - action_min[j]) + action_min[j];
  }
}

}  // namespace afil::models
