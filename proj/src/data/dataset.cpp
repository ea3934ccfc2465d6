#include "afil/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "afil/core/error.hpp"

namespace afil::data {

models::Normalizer DatasetStats::normalizer() const {
  return {obs_mean, obs_std, action_min, action_max};
}

namespace {

std::vector<std::size_t> canonical_order(std::span<const Trajectory> ts) {
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) keyed.push_back({trajectory_id(ts[i]), i});
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> order;
  order.reserve(keyed.size());
  for (auto& k : keyed) order.push_back(k.second);
  return order;
}

const Step& first_step(std::span<const Trajectory> ts) {
  for (const Trajectory& t : ts)
    if (!t.steps.empty()) return t.steps.front();
  throw DataError("dataset has no recorded steps");
}

}  // namespace

DatasetStats compute_stats(std::span<const Trajectory> trajectories) {
  DatasetStats st;
  if (trajectories.empty()) throw DataError("cannot compute statistics of an empty dataset");
  const std::size_t od = first_step(trajectories).observation.size();
  const std::size_t ad = first_step(trajectories).action.size();
  st.action_min.assign(ad, INFINITY);
  st.action_max.assign(ad, -INFINITY);
  std::vector<double> sum(od, 0.0);
  std::size_t n = 0;
  const auto order = canonical_order(trajectories);
  for (std::size_t i : order) {
    const Trajectory& t = trajectories[i];
    switch (t.outcome) {
      case Outcome::success:
        ++st.n_success;
        break;
      case Outcome::corrected:
        ++st.n_corrected;
        break;
      case Outcome::failure:
        ++st.n_failure;
        break;
    }
    for (const Step& s : t.steps) {
      if (s.observation.size() != od || s.action.size() != ad)
        throw DataError("dataset mixes observation or action widths");
      for (std::size_t j = 0; j < ad; ++j) {
        st.action_min[j] = std::min(st.action_min[j], s.action[j]);
        st.action_max[j] = std::max(st.action_max[j], s.action[j]);
      }
      for (std::size_t j = 0; j < od; ++j) sum[j] += s.observation[j];
      ++n;
    }
  }
  st.obs_mean.resize(od);
  for (std::size_t j = 0; j < od; ++j) st.obs_mean[j] = sum[j] / static_cast<double>(n);
  std::vector<double> sq(od, 0.0);
  for (std::size_t i : order)
    for (const Step& s : trajectories[i].steps)
      for (std::size_t j = 0; j < od; ++j) {
        const double d = s.observation[j] - st.obs_mean[j];
        sq[j] += d * d;
      }
  st.obs_std.resize(od);
  for (std::size_t j = 0; j < od; ++j) {
    const double sd = std::sqrt(sq[j] / static_cast<double>(n));
    st.obs_std[j] = sd > 1e-9 ? sd : 1.0;
  }
  for (std::size_t j = 0; j < ad; ++j)
    if (!(st.action_max[j] - st.action_min[j] > 1e-12)) {
      st.action_min[j] -= 0.5;
      st.action_max[j] += 0.5;
    }
  return st;
}

Datasets build_datasets(std::span<const Trajectory> trajectories) {
  Datasets ds;
  for (const Trajectory& t : trajectories) {
    check_trajectory(t);
    (t.outcome == Outcome::failure ? ds.failure : ds.success).push_back(t);
  }
  if (ds.success.empty()) throw DataError("success split (D_s) is empty");
  if (ds.failure.empty()) throw DataError("failure split (D_f) is empty");
  ds.stats = compute_stats(trajectories);
  return ds;
}

std::vector<Trajectory> select_to_targets(std::span<const Trajectory> trajectories,
                                          const SplitTargets& targets) {
  std::vector<Trajectory> out;
  std::size_t s = 0, c = 0, f = 0;
  for (const Trajectory& t : trajectories) {
    std::size_t& have = t.outcome == Outcome::success ? s : t.outcome == Outcome::corrected ? c : f;
    const std::size_t want = t.outcome == Outcome::success     ? targets.success
                             : t.outcome == Outcome::corrected ? targets.corrected
                                                               : targets.failure;
    if (have < want) {
      out.push_back(t);
      ++have;
    }
  }
  return out;
}

std::vector<std::uint64_t> trajectory_ids(std::span<const Trajectory> trajectories) {
  std::vector<std::uint64_t> ids;
  ids.reserve(trajectories.size());
  for (const Trajectory& t : trajectories) ids.push_back(trajectory_id(t));
  return ids;
}

bool disjoint(std::span<const Trajectory> a, std::span<const Trajectory> b) {
  const auto ia = trajectory_ids(a);
  std::set<std::uint64_t> sa(ia.begin(), ia.end());
  for (std::uint64_t id : trajectory_ids(b))
    if (sa.count(id)) return false;
  return true;
}

void ChunkSet::append(const ChunkSet& other) {
  if (other.size() == 0) return;
  if (size() == 0 && obs_dim == 0) {
    *this = other;
    return;
  }
  if (other.obs_dim != obs_dim || other.task_dim != task_dim || other.chunk_dim != chunk_dim)
    throw ShapeError("cannot append chunk sets of different widths");
  obs.insert(obs.end(), other.obs.begin(), other.obs.end());
  task.insert(task.end(), other.task.begin(), other.task.end());
  chunk.insert(chunk.end(), other.chunk.begin(), other.chunk.end());
}

ChunkSet make_chunks(std::span<const Trajectory> trajectories, std::size_t horizon,
                     FailureChunks failure_mode, std::span<const Trajectory> context) {
  ChunkSet set;
  if (trajectories.empty()) return set;
  if (horizon == 0) throw ContractError("chunk horizon must be positive");
  using Key = std::tuple<int, std::int64_t, std::uint64_t, std::int64_t>;
  std::map<Key, std::int64_t> divergence;
  if (failure_mode == FailureChunks::post_divergence)
    for (const Trajectory& t : context)
      if (t.outcome == Outcome::corrected)
        divergence[{static_cast<int>(t.task), t.config_id, t.seed, t.run}] = t.correction_start;

  const Step& probe = first_step(trajectories);
  set.obs_dim = probe.observation.size();
  set.task_dim = envs::kTaskCount;
  const std::size_t ad = probe.action.size();
  set.chunk_dim = ad * horizon;
  for (const Trajectory& t : trajectories) {
    check_trajectory(t);
    std::size_t first = 0;
    if (t.outcome == Outcome::failure && failure_mode == FailureChunks::post_divergence) {
      auto it = divergence.find({static_cast<int>(t.task), t.config_id, t.seed, t.run});
      if (it != divergence.end() && !t.steps.empty())
        first = std::min<std::size_t>(static_cast<std::size_t>(it->second), t.steps.size() - 1);
    }
    const auto onehot = envs::task_onehot(t.task);
    const std::size_t n = t.steps.size();
    for (std::size_t i = first; i < n; ++i) {
      const Step& s = t.steps[i];
      if (s.observation.size() != set.obs_dim || s.action.size() != ad)
        throw DataError("chunking mixes observation or action widths");
      set.obs.insert(set.obs.end(), s.observation.begin(), s.observation.end());
      set.task.insert(set.task.end(), onehot.begin(), onehot.end());
      for (std::size_t h = 0; h < horizon; ++h) {
        const auto& a = t.steps[std::min(i + h, n - 1)].action;
        set.chunk.insert(set.chunk.end(), a.begin(), a.end());
      }
    }
  }
  return set;
}

void normalize(ChunkSet& set, const models::Normalizer& norm) {
  const std::size_t n = set.size();
  for (std::size_t r = 0; r < n; ++r) {
    std::span<double> o(set.obs.data() + r * set.obs_dim, set.obs_dim);
    norm.normalize_obs(o, o);
    norm.normalize_chunk(std::span<double>(set.chunk.data() + r * set.chunk_dim, set.chunk_dim));
  }
}

}  // namespace afil::data
