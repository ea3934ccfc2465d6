#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "afil/harness/evaluate.hpp"

namespace afil::harness {

// Headers:
//   episodes.csv  task,arm,config_id,run,outcome,steps,mean_lambda
//   summary.csv   task,arm,success_rate_pct,n_episodes,seed
//   lambda trace  task,arm,config_id,run,call,lambda
// Reals use the shortest round-trip form.
std::string format_episodes(std::span<const EpisodeRow> rows);
std::string format_summary(std::span<const SummaryRow> rows);
std::string format_traces(std::span<const LambdaTrace> traces);

std::vector<EpisodeRow> parse_episodes(const std::string& text);
std::vector<SummaryRow> parse_summary(const std::string& text);

// Written to a temporary file first and renamed into place.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace afil::harness
