#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tbps/corpus/manifest.hpp"
#include "tbps/harness/metrics.hpp"
#include "tbps/harness/model_io.hpp"

namespace tbps::harness {

/// Text queries (one per caption) and the distinct gallery images of a split.
struct SplitView {
  std::vector<const corpus::PersonRecord*> queries;
  std::vector<const corpus::PersonRecord*> gallery;  // first record of each image
};

/// Generated records are excluded. `split` empty selects every split.
SplitView split_view(const corpus::CorpusManifest& manifest, std::optional<corpus::Split> split);

EmbeddingSet embed_texts(const TrainedModel& m, const std::vector<const corpus::PersonRecord*>& rs);
EmbeddingSet embed_texts(const TrainedModel& m, const std::vector<std::string>& texts);
EmbeddingSet embed_images(const TrainedModel& m, const std::vector<const corpus::PersonRecord*>& rs,
                          const std::filesystem::path& corpus_dir);

struct PenaltySummary {
  double tau = 0.0;
  double max_mean = 0.0;                // mean over queries of max_k r_k
  std::vector<std::size_t> histogram;   // max_k r_k in 10 equal bins over [0, 1]
};

/// Relative penalty over each query's negatives (gallery items of other
/// identities). Queries without negatives are skipped.
PenaltySummary penalty_summary(const EmbeddingSet& queries, const EmbeddingSet& gallery, double tau);

struct EvalReport {
  std::string split;
  std::size_t queries = 0;
  std::size_t gallery = 0;
  std::map<std::size_t, double> topk;  // k -> percent
  double map = 0.0;
  std::vector<std::size_t> ranks;      // 1-based first-match rank per query
  double uniformity = 0.0;
  PenaltySummary penalty;

  nlohmann::json to_json() const;
};

EvalReport evaluate(const TrainedModel& m, const corpus::CorpusManifest& manifest,
                    const std::filesystem::path& corpus_dir, corpus::Split split,
                    const std::vector<std::size_t>& ks = {1, 5, 10}, double tau = 0.005);

struct RetrievalHit {
  std::size_t id = 0;
  std::string image;
  double score = 0.0;
};

/// Gallery embeddings are read from `cache` when it exists and written there
/// otherwise (empty path: no cache). Returns min(topk, gallery) hits.
std::vector<RetrievalHit> retrieve(const TrainedModel& m, const corpus::CorpusManifest& manifest,
                                   const std::filesystem::path& corpus_dir,
                                   std::optional<corpus::Split> split, const std::string& query,
                                   std::size_t topk, const std::filesystem::path& cache = {});

/// CSV with header id,image,e_0..e_{D-1}; values printed to round-trip exactly.
void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingSet& set,
                          const std::vector<std::string>& images);
EmbeddingSet read_embeddings_csv(const std::filesystem::path& path, std::vector<std::string>* images);

/// One record per temperature: relative-penalty histogram, uniformity of the
/// gallery and the batch loss terms over one caption per identity.
nlohmann::json diagnostics(const TrainedModel& m, const corpus::CorpusManifest& manifest,
                           const std::filesystem::path& corpus_dir, corpus::Split split,
                           const std::vector<double>& taus);

}  // namespace tbps::harness
