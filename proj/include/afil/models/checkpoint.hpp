#pragma once

#include <filesystem>
#include <string>

#include "afil/models/dag_model.hpp"
#include "afil/models/normalizer.hpp"

namespace afil::models {

struct Checkpoint {
  DagModel model;
  Normalizer normalizer;
  std::string label;
};

// Binary layout: "AFILCKP1", u64 header length, JSON header (dimensions,
// process, flags), then u64-length-prefixed raw double arrays for every
// parameter tensor followed by the four normalizer arrays. Doubles are written
// as bytes, so load(save(x)) reproduces x bit for bit.
std::string serialize_checkpoint(const DagModel& model, const Normalizer& normalizer,
                                 const std::string& label = "");
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const DagModel& model,
                     const Normalizer& normalizer, const std::string& label = "");
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace afil::models
