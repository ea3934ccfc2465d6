#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace afil::models {

// Observation z-scoring and per-dimension min/max scaling of actions to
// [-1, 1]. Chunks are laid out timestep-major: chunk[t * action_dim + j].
struct Normalizer {
  std::vector<double> obs_mean;
  std::vector<double> obs_std;
  std::vector<double> action_min;
  std::vector<double> action_max;

  static Normalizer identity(std::size_t obs_dim, std::size_t action_dim);

  std::size_t obs_dim() const { return obs_mean.size(); }
  std::size_t action_dim() const { return action_min.size(); }

  void normalize_obs(std::span<const double> raw, std::span<double> out) const;
  std::vector<double> normalize_obs(std::span<const double> raw) const;
  void normalize_chunk(std::span<double> chunk) const;
  void denormalize_chunk(std::span<double> chunk) const;

  bool operator==(const Normalizer&) const = default;
};

}  // namespace afil::models
