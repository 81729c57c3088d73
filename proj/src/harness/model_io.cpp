#include "tbps/harness/model_io.hpp"

#include <fstream>
#include <sstream>

#include "tbps/core/checkpoint.hpp"
#include "tbps/core/errors.hpp"

namespace tbps::harness {

nlohmann::json checkpoint_meta(const TrainedModel& m) {
  return {{"format", "tbps-model"},
          {"model", m.model.config_json()},
          {"vocab", m.vocab.tokens()},
          {"train", m.train_config}};
}

void save_model(const std::filesystem::path& path, const TrainedModel& m) {
  const auto params = m.model.parameters();
  save_checkpoint(path, params, checkpoint_meta(m));
}

TrainedModel load_model(const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.meta.value("format", std::string{}) != "tbps-model")
    throw DataError(path.string() + " is not a model checkpoint");
  TrainedModel m;
  try {
    m.vocab = text::Vocabulary(ckpt.meta.at("vocab").get<std::vector<std::string>>());
    m.model = model::DualEncoder::from_parameters(ckpt.meta.at("model"), ckpt.params);
    m.train_config = ckpt.meta.value("train", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint metadata: " + e.what());
  }
  if (m.model.text.config().vocab_size != m.vocab.size())
    throw DataError(path.string() + ": vocabulary does not match the token table");
  return m;
}

std::string checkpoint_hash(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return fnv1a_hex(buf.str());
}

}  // namespace tbps::harness
