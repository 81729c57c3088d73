#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tbps/model/encoder.hpp"
#include "tbps/text/tokenizer.hpp"

namespace tbps::harness {

/// Encoders plus the vocabulary their token table was built for.
struct TrainedModel {
  model::DualEncoder model;
  text::Vocabulary vocab;
  nlohmann::json train_config;  // informational, stored in the checkpoint
};

nlohmann::json checkpoint_meta(const TrainedModel& m);
void save_model(const std::filesystem::path& path, const TrainedModel& m);
/// Throws DataError when the file is not a model checkpoint.
TrainedModel load_model(const std::filesystem::path& path);
/// FNV-1a of the checkpoint file contents.
std::string checkpoint_hash(const std::filesystem::path& path);

}  // namespace tbps::harness
