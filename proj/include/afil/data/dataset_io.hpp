#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "afil/data/trajectory.hpp"

namespace afil::data {

// Text format. First line: "# afil-dataset v1 records=N". Then one trajectory
// per line, space separated:
//   task config_id seed run outcome correction_start fault n_steps obs_dim
//   act_dim n_lambda, then n_steps * (obs_dim + act_dim) step values
//   (observation then action per step), then n_lambda values.
// Doubles use the shortest round-trip representation, so load(save(x)) == x
// bit for bit.
std::string format_dataset(std::span<const Trajectory> trajectories);
std::vector<Trajectory> parse_dataset(const std::string& text);

// Writes to a temporary sibling then renames. Loading is all-or-nothing:
// ParseError (with the offending 1-based line) and no partial result.
void save_dataset(const std::filesystem::path& path, std::span<const Trajectory> trajectories);
std::vector<Trajectory> load_dataset(const std::filesystem::path& path);

}  // namespace afil::data
