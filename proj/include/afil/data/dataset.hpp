#pragma once

#include <span>
#include <vector>

#include "afil/data/trajectory.hpp"
#include "afil/models/normalizer.hpp"

namespace afil::data {

struct DatasetStats {
  std::vector<double> action_min, action_max;
  std::vector<double> obs_mean, obs_std;
  std::size_t n_success = 0, n_corrected = 0, n_failure = 0;

  std::size_t total() const { return n_success + n_corrected + n_failure; }
  models::Normalizer normalizer() const;
  bool operator==(const DatasetStats&) const = default;
};

struct Datasets {
  std::vector<Trajectory> success;  // successes and corrected
  std::vector<Trajectory> failure;  // raw failures
  DatasetStats stats;               // over both splits
};

// Pure function of the trajectory multiset: records are visited in canonical
// (id) order. Degenerate dimensions are widened (min == max -> +-0.5, std ->
// 1) so normalization stays finite.
DatasetStats compute_stats(std::span<const Trajectory> trajectories);

// Splits labeled trajectories. DataError naming the split when either is empty.
Datasets build_datasets(std::span<const Trajectory> trajectories);

// Keeps at most the requested number of each outcome, in input order.
struct SplitTargets {
  std::size_t success = 0, corrected = 0, failure = 0;
};
std::vector<Trajectory> select_to_targets(std::span<const Trajectory> trajectories,
                                          const SplitTargets& targets);

// Ids of the trajectories; used for the disjointness check.
std::vector<std::uint64_t> trajectory_ids(std::span<const Trajectory> trajectories);
bool disjoint(std::span<const Trajectory> a, std::span<const Trajectory> b);

enum class FailureChunks { full, post_divergence };

// Flat training pairs (obs_t, task, a_{t:t+H}). Rows are raw (un-normalized)
// until normalize() is applied.
struct ChunkSet {
  std::size_t obs_dim = 0, task_dim = 0, chunk_dim = 0;
  std::vector<double> obs, task, chunk;

  std::size_t size() const { return obs_dim == 0 ? 0 : obs.size() / obs_dim; }
  void append(const ChunkSet& other);
};

// One chunk per step; the tail repeats the final action. With post_divergence
// a failure keeps only chunks from the step where its paired correction (same
// task, config, seed and run, found in `context`) spliced in the planner;
// failures without a pair keep everything.
ChunkSet make_chunks(std::span<const Trajectory> trajectories, std::size_t horizon,
                     FailureChunks failure_mode = FailureChunks::full,
                     std::span<const Trajectory> context = {});

void normalize(ChunkSet& set, const models::Normalizer& norm);

}  // namespace afil::data
