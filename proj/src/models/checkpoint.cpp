#include "afil/models/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "afil/core/error.hpp"

namespace afil::models {
namespace {

constexpr char kMagic[8] = {'A', 'F', 'I', 'L', 'C', 'K', 'P', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_array(std::string& out, std::span<const double> xs) {
  put_u64(out, xs.size());
  out.append(reinterpret_cast<const char*>(xs.data()), xs.size_bytes());
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, s_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::vector<double> array() {
    const std::uint64_t n = u64();
    if (n > (s_.size() - pos_) / sizeof(double)) throw DataError("checkpoint truncated inside an array");
    std::vector<double> v(n);
    std::memcpy(v.data(), s_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (s_.size() - pos_ < n) throw DataError("checkpoint truncated");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

nlohmann::json header_of(const DagModel& model, const std::string& label) {
  const auto& c = model.config();
  return {
      {"obs_dim", c.obs_dim},
      {"task_dim", c.task_dim},
      {"action_dim", c.action_dim},
      {"horizon", c.horizon},
      {"hidden_dim", c.hidden_dim},
      {"head_layers", c.head_layers},
      {"step_embed_dim", c.step_embed_dim},
      {"mode", to_string(c.process.mode)},
      {"n_steps", c.process.n_steps},
      {"schedule", "linear"},
      {"beta_start", c.process.beta_start},
      {"beta_end", c.process.beta_end},
      {"scale_betas_to_steps", c.process.scale_betas_to_steps},
      {"failure_head_trained", model.failure_head_trained()},
      {"label", label},
  };
}

}  // namespace

std::string serialize_checkpoint(const DagModel& model, const Normalizer& normalizer,
                                 const std::string& label) {
  std::string out(kMagic, sizeof kMagic);
  const std::string header = header_of(model, label).dump();
  put_u64(out, header.size());
  out += header;
  const auto params = model.parameters();
  put_u64(out, params.size() + 4);
  for (const auto& p : params) put_array(out, p.data());
  put_array(out, normalizer.obs_mean);
  put_array(out, normalizer.obs_std);
  put_array(out, normalizer.action_min);
  put_array(out, normalizer.action_max);
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw DataError("not a checkpoint (bad magic)");
  Reader r(bytes);
  (void)r.bytes(sizeof kMagic);
  const std::uint64_t header_len = r.u64();
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(r.bytes(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  ModelConfig c;
  try {
    c.obs_dim = h.at("obs_dim");
    c.task_dim = h.at("task_dim");
    c.action_dim = h.at("action_dim");
    c.horizon = h.at("horizon");
    c.hidden_dim = h.at("hidden_dim");
    c.head_layers = h.at("head_layers");
    c.step_embed_dim = h.at("step_embed_dim");
    c.process.mode = parse_mode(h.at("mode"));
    c.process.n_steps = h.at("n_steps");
    c.process.beta_start = h.at("beta_start");
    c.process.beta_end = h.at("beta_end");
    c.process.scale_betas_to_steps = h.at("scale_betas_to_steps");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  DagModel model(c, 0);
  model.set_failure_head_trained(h.value("failure_head_trained", false));
  auto params = model.parameters();
  if (r.u64() != params.size() + 4) throw DataError("checkpoint array count does not match model config");
  for (auto& p : params) {
    auto values = r.array();
    if (values.size() != p.numel()) throw DataError("checkpoint parameter size mismatch");
    auto dst = p.mutable_data();
    std::copy(values.begin(), values.end(), dst.begin());
  }
  Normalizer n;
  n.obs_mean = r.array();
  n.obs_std = r.array();
  n.action_min = r.array();
  n.action_max = r.array();
  if (!r.done()) throw DataError("trailing bytes after checkpoint");
  if (n.obs_dim() != c.obs_dim || n.obs_std.size() != c.obs_dim || n.action_dim() != c.action_dim ||
      n.action_max.size() != c.action_dim)
    throw DataError("checkpoint normalizer does not match model dimensions");
  return {std::move(model), std::move(n), h.value("label", std::string())};
}

void save_checkpoint(const std::filesystem::path& path, const DagModel& model,
                     const Normalizer& normalizer, const std::string& label) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::string bytes = serialize_checkpoint(model, normalizer, label);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write checkpoint " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("short write to checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace afil::models
