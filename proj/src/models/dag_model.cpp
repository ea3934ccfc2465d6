#include "afil/models/dag_model.hpp"

#include <cmath>

#include "afil/core/error.hpp"
#include "afil/core/hash.hpp"
#include "afil/core/rng.hpp"
#include "afil/numerics/ops.hpp"

namespace afil::models {

namespace ops = afil::numerics;

std::string to_string(Mode mode) { return mode == Mode::diffusion ? "diffusion" : "flow"; }

Mode parse_mode(const std::string& text) {
  if (text == "diffusion") return Mode::diffusion;
  if (text == "flow") return Mode::flow;
  throw ConfigError("unknown mode '" + text + "' (expected diffusion|flow)");
}

void ModelConfig::validate() const {
  if (obs_dim == 0 || task_dim == 0 || action_dim == 0 || horizon == 0 || hidden_dim == 0)
    throw ConfigError("model dimensions must be positive");
  if (step_embed_dim == 0 || step_embed_dim % 2 != 0)
    throw ConfigError("step_embed_dim must be a positive even number");
  if (process.n_steps <= 0) throw ConfigError("n_steps must be positive");
  if (head_layers == 0) throw ConfigError("head_layers must be positive");
}

ConditionBatch ConditionBatch::single(const Conditioning& cond) {
  return {Tensor::from({1, cond.observation.size()}, cond.observation),
          Tensor::from({1, cond.task.size()}, cond.task)};
}

namespace {

Tensor uniform_param(numerics::Shape shape, double bound, Rng& rng) {
  std::vector<double> v(numerics::shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

DagModel::DagModel(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(derive_seed({seed, 0x7472756eULL}));
  auto linear = [&](std::size_t in, std::size_t out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Linear l;
    l.weight = uniform_param({in, out}, bound, rng);
    l.bias = uniform_param({out}, bound, rng);
    return l;
  };
  const std::size_t trunk_in = config_.obs_dim + config_.task_dim + config_.step_embed_dim;
  trunk_in_ = linear(trunk_in, config_.hidden_dim);
  trunk_hidden_ = linear(config_.hidden_dim, config_.hidden_dim);
  reinit_head(Head::success, derive_seed({seed, 0x73756363ULL}));
  reinit_head(Head::failure, derive_seed({seed, 0x6661696cULL}));
}

DagModel::DagModel(const DagModel& other)
    : config_(other.config_), failure_head_trained_(other.failure_head_trained_) {
  auto copy = [](const Linear& l) { return Linear{l.weight.clone(), l.bias.clone()}; };
  trunk_in_ = copy(other.trunk_in_);
  trunk_hidden_ = copy(other.trunk_hidden_);
  for (int h = 0; h < 2; ++h) {
    for (const auto& l : other.heads_[h].hidden) heads_[h].hidden.push_back(copy(l));
    heads_[h].out = copy(other.heads_[h].out);
    heads_[h].skip = other.heads_[h].skip.clone();
  }
}

DagModel& DagModel::operator=(const DagModel& other) {
  if (this != &other) *this = DagModel(other);
  return *this;
}

void DagModel::reinit_head(Head head, std::uint64_t seed) {
  Rng rng(seed);
  HeadParams& hp = heads_[static_cast<int>(head)];
  hp.hidden.clear();
  std::size_t in = config_.hidden_dim + config_.chunk_dim();
  for (std::size_t i = 0; i < config_.head_layers; ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    hp.hidden.push_back({uniform_param({in, config_.hidden_dim}, bound, rng),
                         uniform_param({config_.hidden_dim}, bound, rng)});
    in = config_.hidden_dim;
  }
  // Zero final layer: fresh heads predict exactly zero.
  hp.out.weight = Tensor::zeros({config_.hidden_dim, config_.chunk_dim()}, true);
  hp.out.bias = Tensor::zeros({config_.chunk_dim()}, true);
  hp.skip = Tensor::zeros({config_.chunk_dim(), config_.chunk_dim()}, true);
}

void DagModel::copy_head(Head from, Head to) {
  if (from == to) return;
  const HeadParams& src = heads_[static_cast<int>(from)];
  HeadParams& dst = heads_[static_cast<int>(to)];
  dst.hidden.clear();
  for (const auto& l : src.hidden) dst.hidden.push_back({l.weight.clone(), l.bias.clone()});
  dst.out = {src.out.weight.clone(), src.out.bias.clone()};
  dst.skip = src.skip.clone();
}

Tensor DagModel::step_embedding(std::span<const int> steps) const {
  const std::size_t e = config_.step_embed_dim;
  const std::size_t half = e / 2;
  std::vector<double> out(steps.size() * e);
  for (std::size_t r = 0; r < steps.size(); ++r) {
    const double s = static_cast<double>(steps[r]);
    for (std::size_t i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
      out[r * e + i] = std::sin(s * freq);
      out[r * e + half + i] = std::cos(s * freq);
    }
  }
  return Tensor::from({steps.size(), e}, std::move(out));
}

void DagModel::validate_batch(const ConditionBatch& cond, std::size_t rows) const {
  if (cond.observation.rank() != 2 || cond.observation.dim(1) != config_.obs_dim)
    throw ShapeError("observation shape " + numerics::to_string(cond.observation.shape()) +
                     " vs model obs_dim " + std::to_string(config_.obs_dim));
  if (cond.task.rank() != 2 || cond.task.dim(1) != config_.task_dim || cond.task.dim(0) != cond.observation.dim(0))
    throw ShapeError("task shape " + numerics::to_string(cond.task.shape()) + " vs observation shape " +
                     numerics::to_string(cond.observation.shape()));
  if (rows != cond.observation.dim(0))
    throw ShapeError("batch of " + std::to_string(rows) + " steps vs " +
                     std::to_string(cond.observation.dim(0)) + " conditionings");
}

Tensor DagModel::encode(const ConditionBatch& cond, std::span<const int> steps) const {
  validate_batch(cond, steps.size());
  for (int s : steps)
    if (s < 0 || s >= config_.process.n_steps)
      throw ShapeError("step " + std::to_string(s) + " outside [0, " + std::to_string(config_.process.n_steps) + ")");
  const Tensor parts[] = {cond.observation, cond.task, step_embedding(steps)};
  Tensor x = ops::concat_last(parts);
  Tensor h = ops::tanh(ops::affine(x, trunk_in_.weight, trunk_in_.bias));
  return ops::tanh(ops::affine(h, trunk_hidden_.weight, trunk_hidden_.bias));
}

Tensor DagModel::encode(const Conditioning& cond) const {
  const int step[] = {cond.diffusion_step};
  return encode(ConditionBatch::single(cond), step);
}

Tensor DagModel::predict_from_features(Head head, const Tensor& features, const Tensor& noisy) const {
  if (noisy.rank() != 2 || noisy.dim(1) != config_.chunk_dim() || noisy.dim(0) != features.dim(0))
    throw ShapeError("noisy action shape " + numerics::to_string(noisy.shape()) + " vs expected [" +
                     std::to_string(features.dim(0)) + "," + std::to_string(config_.chunk_dim()) + "]");
  const HeadParams& hp = heads_[static_cast<int>(head)];
  const Tensor parts[] = {features, noisy};
  Tensor x = ops::concat_last(parts);
  for (const auto& l : hp.hidden) x = ops::tanh(ops::affine(x, l.weight, l.bias));
  return ops::add(ops::affine(x, hp.out.weight, hp.out.bias), ops::matmul(noisy, hp.skip));
}

Tensor DagModel::predict(Head head, const Tensor& noisy, const ConditionBatch& cond,
                         std::span<const int> steps) const {
  return predict_from_features(head, encode(cond, steps), noisy);
}

namespace {

Tensor as_row(const Tensor& noisy, std::size_t chunk_dim) {
  if (noisy.numel() != chunk_dim)
    throw ShapeError("noisy action shape " + numerics::to_string(noisy.shape()) + " vs chunk (" +
                     std::to_string(chunk_dim) + ",)");
  return noisy.rank() == 2 ? noisy : Tensor::from({1, chunk_dim}, {noisy.data().begin(), noisy.data().end()});
}

Tensor as_vector(const Tensor& row) {
  return Tensor::from({row.numel()}, {row.data().begin(), row.data().end()});
}

}  // namespace

Tensor DagModel::predict_succ(const Tensor& noisy, const Conditioning& cond) const {
  return as_vector(predict_from_features(Head::success, encode(cond), as_row(noisy, config_.chunk_dim())));
}

Tensor DagModel::predict_fail(const Tensor& noisy, const Conditioning& cond) const {
  return as_vector(predict_from_features(Head::failure, encode(cond), as_row(noisy, config_.chunk_dim())));
}

std::vector<Tensor> DagModel::trunk_parameters() const {
  return {trunk_in_.weight, trunk_in_.bias, trunk_hidden_.weight, trunk_hidden_.bias};
}

std::vector<Tensor> DagModel::head_parameters(Head head) const {
  const HeadParams& hp = heads_[static_cast<int>(head)];
  std::vector<Tensor> out;
  for (const auto& l : hp.hidden) out.insert(out.end(), {l.weight, l.bias});
  out.insert(out.end(), {hp.out.weight, hp.out.bias, hp.skip});
  return out;
}

std::vector<Tensor> DagModel::parameters() const {
  auto all = trunk_parameters();
  for (Head h : {Head::success, Head::failure}) {
    auto hp = head_parameters(h);
    all.insert(all.end(), hp.begin(), hp.end());
  }
  return all;
}

std::size_t DagModel::count(std::span<const Tensor> params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

std::size_t DagModel::parameter_count() const { return count(parameters()); }

void DagModel::zero_grad() {
  for (auto& p : parameters()) p.zero_grad();
}

std::uint64_t fingerprint(std::span<const Tensor> params) {
  Fnv1a h;
  for (const auto& p : params) {
    h.value(p.numel());
    h.doubles(p.data());
  }
  return h.digest();
}

}  // namespace afil::models
