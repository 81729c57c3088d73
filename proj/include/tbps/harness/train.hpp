#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tbps/core/rng.hpp"
#include "tbps/corpus/manifest.hpp"
#include "tbps/harness/config.hpp"
#include "tbps/harness/model_io.hpp"
#include "tbps/objective/contrastive.hpp"

namespace tbps::harness {

/// Batches of record indices for one epoch. Records are visited in rounds;
/// round r holds one unused record of every identity that has one, shuffled
/// and cut into groups of n with the partial tail dropped.
/// `identities[i]` is the identity of record i. Throws UsageError when there
/// are fewer distinct identities than n.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> identities,
                                                   std::size_t n, Rng& rng);

/// Decoded images keyed by their manifest path, resized to the model input.
class ImageStore {
 public:
  ImageStore(std::filesystem::path dir, std::size_t height, std::size_t width)
      : dir_(std::move(dir)), height_(height), width_(width) {}
  const model::ImageData& get(const corpus::PersonRecord& r);

 private:
  std::filesystem::path dir_;
  std::size_t height_, width_;
  std::map<std::string, model::ImageData> cache_;
};

struct MixPartner {
  text::TokenizedText text;
  const model::ImageData* image = nullptr;
};

/// Everything random about one batch row, decided before the forward pass.
struct SamplePlan {
  text::TokenizedText text;                    // approximate text when `original` is set
  std::optional<text::TokenizedText> original;  // Phi(j) = 1
  const model::ImageData* image = nullptr;
  std::optional<MixPartner> mix;               // appends one mixed positive pair
};

/// Forward pass of a planned batch through both encoders and the objective.
/// Mixed pairs are appended after the N original rows.
objective::ContrastiveLoss batch_loss(const model::DualEncoder& model,
                                      std::span<const SamplePlan> plans, double tau, double mu,
                                      double lambda);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;       // batch objective, summed over rows
  double mean_pair_loss = 0.0;  // batch objective divided by its row count
  std::size_t batches = 0;
  std::size_t approx_texts = 0;
  std::size_t mixed_pairs = 0;
};

struct TrainOutcome {
  TrainedModel model;
  std::vector<EpochLog> log;
};

/// Vocabulary over the training captions plus every lexicon word.
text::Vocabulary training_vocabulary(std::span<const corpus::PersonRecord* const> records);

/// Records used for training under `config` (train split; generated records
/// only when text_img_gen is on).
std::vector<const corpus::PersonRecord*> training_records(const corpus::CorpusManifest& manifest,
                                                          const TrainConfig& config);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Deterministic under (config, corpus). On a non-finite loss the last good
/// parameters are written to `<checkpoint>.lastgood`, a diagnostic dump to
/// `<checkpoint>.nan.json`, and NumericalError is thrown.
TrainOutcome train(const TrainConfig& config, const corpus::CorpusManifest& manifest,
                   const std::filesystem::path& corpus_dir, const EpochCallback& on_epoch = {});

}  // namespace tbps::harness
