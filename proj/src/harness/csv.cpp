#include "afil/harness/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "afil/core/error.hpp"

namespace afil::harness {

namespace {

constexpr const char* kEpisodeHeader = "task,arm,config_id,run,outcome,steps,mean_lambda";
constexpr const char* kSummaryHeader = "task,arm,success_rate_pct,n_episodes,seed";
constexpr const char* kTraceHeader = "task,arm,config_id,run,call,lambda";

std::string real(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T number(const std::string& s, std::size_t line) {
  T v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError("bad number '" + s + "'", line);
  return v;
}

// Calls fn(fields, line_no) for every data line after checking the header.
template <class Fn>
void each_row(const std::string& text, const char* header, std::size_t width, Fn fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t no = 1;
  if (!std::getline(in, line) || line != header) throw ParseError("expected header '" + std::string(header) + "'", 1);
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != width) throw ParseError("expected " + std::to_string(width) + " fields", no);
    fn(f, no);
  }
}

}  // namespace

std::string format_episodes(std::span<const EpisodeRow> rows) {
  std::string out = std::string(kEpisodeHeader) + "\n";
  for (const auto& r : rows)
    out += r.task + "," + r.arm + "," + std::to_string(r.config_id) + "," + std::to_string(r.run) + "," + r.outcome +
           "," + std::to_string(r.steps) + "," + real(r.mean_lambda) + "\n";
  return out;
}

std::string format_summary(std::span<const SummaryRow> rows) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& r : rows)
    out += r.task + "," + r.arm + "," + real(r.success_rate_pct) + "," + std::to_string(r.n_episodes) + "," +
           std::to_string(r.seed) + "\n";
  return out;
}

std::string format_traces(std::span<const LambdaTrace> traces) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const auto& t : traces)
    for (std::size_t i = 0; i < t.lambdas.size(); ++i)
      out += t.task + "," + t.arm + "," + std::to_string(t.config_id) + "," + std::to_string(t.run) + "," +
             std::to_string(i) + "," + real(t.lambdas[i]) + "\n";
  return out;
}

std::vector<EpisodeRow> parse_episodes(const std::string& text) {
  std::vector<EpisodeRow> rows;
  each_row(text, kEpisodeHeader, 7, [&](const std::vector<std::string>& f, std::size_t no) {
    EpisodeRow r;
    r.task = f[0];
    r.arm = f[1];
    r.config_id = number<std::int64_t>(f[2], no);
    r.run = number<int>(f[3], no);
    if (f[4] != "success" && f[4] != "failure") throw ParseError("bad outcome '" + f[4] + "'", no);
    r.outcome = f[4];
    r.steps = number<int>(f[5], no);
    r.mean_lambda = number<double>(f[6], no);
    rows.push_back(std::move(r));
  });
  return rows;
}

std::vector<SummaryRow> parse_summary(const std::string& text) {
  std::vector<SummaryRow> rows;
  each_row(text, kSummaryHeader, 5, [&](const std::vector<std::string>& f, std::size_t no) {
    rows.push_back({f[0], f[1], number<double>(f[2], no), number<int>(f[3], no), number<std::uint64_t>(f[4], no)});
  });
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace afil::harness
