#include "afil/data/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "afil/core/error.hpp"

namespace afil::data {

namespace {

constexpr std::string_view kHeader = "# afil-dataset v1 records=";

void put_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.push_back(' ');
  out.append(buf, res.ptr);
}

template <class Int>
void put_int(std::string& out, Int v) {
  out.push_back(' ');
  out += std::to_string(v);
}

class Tokens {
 public:
  Tokens(std::string_view line, std::size_t line_no) : rest_(line), line_no_(line_no) {}

  std::string_view next(const char* what) {
    while (!rest_.empty() && rest_.front() == ' ') rest_.remove_prefix(1);
    if (rest_.empty()) fail(std::string("missing ") + what);
    const std::size_t end = rest_.find(' ');
    std::string_view tok = rest_.substr(0, end);
    rest_.remove_prefix(end == std::string_view::npos ? rest_.size() : end);
    return tok;
  }

  template <class Int>
  Int integer(const char* what) {
    std::string_view tok = next(what);
    Int v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      fail(std::string("bad ") + what + " '" + std::string(tok) + "'");
    return v;
  }

  double real(const char* what) {
    std::string_view tok = next(what);
    double v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      fail(std::string("bad ") + what + " '" + std::string(tok) + "'");
    return v;
  }

  void expect_end() {
    while (!rest_.empty() && rest_.front() == ' ') rest_.remove_prefix(1);
    if (!rest_.empty()) fail("trailing data on record");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_no_); }

 private:
  std::string_view rest_;
  std::size_t line_no_;
};

Trajectory parse_record(std::string_view line, std::size_t line_no) {
  Tokens tk(line, line_no);
  Trajectory t;
  try {
    t.task = envs::parse_task(std::string(tk.next("task")));
  } catch (const ConfigError& e) {
    tk.fail(e.what());
  }
  t.config_id = tk.integer<std::int64_t>("config_id");
  t.seed = tk.integer<std::uint64_t>("seed");
  t.run = tk.integer<std::int64_t>("run");
  try {
    t.outcome = parse_outcome(std::string(tk.next("outcome")));
  } catch (const DataError& e) {
    tk.fail(e.what());
  }
  t.correction_start = tk.integer<std::int64_t>("correction_start");
  const int fault = tk.integer<int>("fault flag");
  if (fault != 0 && fault != 1) tk.fail("fault flag must be 0 or 1");
  t.numeric_fault = fault == 1;
  const auto n_steps = tk.integer<std::size_t>("n_steps");
  const auto od = tk.integer<std::size_t>("obs_dim");
  const auto ad = tk.integer<std::size_t>("act_dim");
  const auto nl = tk.integer<std::size_t>("n_lambda");
  if (n_steps > (std::size_t{1} << 24) || od > 4096 || ad > 4096 || nl > (std::size_t{1} << 26))
    tk.fail("record dimensions out of range");
  t.steps.resize(n_steps);
  for (Step& s : t.steps) {
    s.observation.resize(od);
    s.action.resize(ad);
    for (double& v : s.observation) v = tk.real("observation value");
    for (double& v : s.action) v = tk.real("action value");
  }
  t.lambda_log.resize(nl);
  for (double& v : t.lambda_log) v = tk.real("lambda value");
  tk.expect_end();
  try {
    check_trajectory(t);
  } catch (const ContractError& e) {
    tk.fail(e.what());
  }
  return t;
}

}  // namespace

std::string format_dataset(std::span<const Trajectory> trajectories) {
  std::string out(kHeader);
  out += std::to_string(trajectories.size());
  out.push_back('\n');
  for (const Trajectory& t : trajectories) {
    check_trajectory(t);
    out += envs::to_string(t.task);
    put_int(out, t.config_id);
    put_int(out, t.seed);
    put_int(out, t.run);
    out.push_back(' ');
    out += to_string(t.outcome);
    put_int(out, t.correction_start);
    put_int(out, static_cast<int>(t.numeric_fault));
    put_int(out, t.steps.size());
    put_int(out, t.steps.empty() ? 0 : t.steps.front().observation.size());
    put_int(out, t.steps.empty() ? 0 : t.steps.front().action.size());
    put_int(out, t.lambda_log.size());
    for (const Step& s : t.steps) {
      for (double v : s.observation) put_double(out, v);
      for (double v : s.action) put_double(out, v);
    }
    for (double v : t.lambda_log) put_double(out, v);
    out.push_back('\n');
  }
  return out;
}

std::vector<Trajectory> parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kHeader, 0) != 0)
    throw ParseError("missing dataset header", 1);
  std::size_t expected = 0;
  {
    std::string_view count(line);
    count.remove_prefix(kHeader.size());
    auto res = std::from_chars(count.data(), count.data() + count.size(), expected);
    if (res.ec != std::errc() || res.ptr != count.data() + count.size())
      throw ParseError("bad record count in header", 1);
  }
  std::vector<Trajectory> out;
  out.reserve(expected);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) throw ParseError("empty record", line_no);
    if (out.size() == expected) throw ParseError("more records than the header declares", line_no);
    out.push_back(parse_record(line, line_no));
  }
  if (!text.empty() && text.back() != '\n') throw ParseError("file ends mid-record", line_no);
  if (out.size() != expected)
    throw ParseError("header declares " + std::to_string(expected) + " records, found " +
                         std::to_string(out.size()),
                     line_no + 1);
  return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const Trajectory> trajectories) {
  const std::string text = format_dataset(trajectories);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw DataError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Trajectory> load_dataset(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_dataset(buf.str());
}

}  // namespace afil::data
