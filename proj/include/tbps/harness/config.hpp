#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "tbps/model/encoder.hpp"
#include "tbps/pdg/generation.hpp"
#include "tbps/pdg/mixup.hpp"

namespace tbps::harness {

struct TrainConfig {
  model::TextEncoderConfig text;  // vocab_size is filled in from the corpus
  model::VisionEncoderConfig vision;

  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  double lr = 1e-3;
  std::size_t warmup_epochs = 3;
  double decay = 0.1;
  std::size_t decay_period = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  double tau = 0.005;
  double mu = 0.1;
  double lambda = 0.5;
  double sigma = 0.2;
  double text_gen_probability = 0.5;
  double mixup_probability = 0.5;

  bool text_img_gen = true;  // train on records produced by pdg-generate
  bool text_gen = true;      // approximate text + regulariser
  bool mixup = true;         // layer-1 feature mixup

  std::uint64_t seed = 0;
  std::filesystem::path corpus;
  std::filesystem::path checkpoint;
  pdg::GenerationSets generation = pdg::GenerationSets::defaults();

  /// Throws ParameterError naming the offending field.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing fields keep their defaults; unknown fields are rejected.
void from_json(const nlohmann::json& j, TrainConfig& c);
TrainConfig load_train_config(const std::filesystem::path& path);

/// Linear warm-up base*(e+1)/warmup for e < warmup, then step decay
/// base * decay^floor((e - warmup) / period).
double lr_at(std::size_t epoch, const TrainConfig& config);

}  // namespace tbps::harness
