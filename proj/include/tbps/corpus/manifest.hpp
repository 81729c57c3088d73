#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tbps/corpus/attributes.hpp"
#include "tbps/corpus/image.hpp"
#include "tbps/corpus/render.hpp"

namespace tbps::corpus {

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);
/// Throws DataError on anything but "train", "val" or "test".
Split parse_split(std::string_view s);

/// One caption of one image.
struct PersonRecord {
  std::size_t id = 0;
  std::string image;  // relative to the corpus directory, or absolute
  std::string caption;
  Split split = Split::Train;
  bool generated = false;
  std::optional<PersonAttributes> attrs;  // synthetic records only
  std::uint64_t jitter_seed = 0;          // meaningful when attrs is set

  bool operator==(const PersonRecord&) const = default;
};

nlohmann::json record_to_json(const PersonRecord& r);
PersonRecord record_from_json(const nlohmann::json& j);

struct CorpusManifest {
  std::vector<PersonRecord> records;
  int grammar_version = 0;  // 0 for ingested corpora
  int palette_version = 0;
  std::uint64_t seed = 0;
  RenderConfig render;

  bool operator==(const CorpusManifest& other) const;

  std::vector<const PersonRecord*> in_split(Split s) const;
  /// Distinct identity ids of a split, ascending.
  std::vector<std::size_t> identities(Split s) const;
  std::size_t next_identity() const;
};

inline constexpr std::string_view kManifestFile = "manifest.jsonl";
inline constexpr std::string_view kCorpusMetaFile = "corpus.json";

std::string manifest_jsonl(const CorpusManifest& m);
void save_manifest(const std::filesystem::path& dir, const CorpusManifest& m);
CorpusManifest load_manifest(const std::filesystem::path& dir);

std::filesystem::path resolve_image(const std::filesystem::path& dir, const PersonRecord& r);

struct CorpusSpec {
  std::uint64_t seed = 0;
  std::size_t identities = 64;
  std::size_t images_per_identity = 4;
  std::size_t captions_per_image = 2;
  double train_fraction = 0.75;
  double val_fraction = 0.125;
  double test_fraction = 0.125;
  RenderConfig render;

  /// Throws ParameterError on invalid counts or fractions.
  void validate() const;
};

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};
/// val and test take floor(n * fraction); train receives the remainder.
SplitCounts split_counts(const CorpusSpec& spec);

/// Renders every image into `dir/images` and writes the manifest. Output is a
/// pure function of the spec.
CorpusManifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& dir);

/// Reads CUHK-PEDES style annotations: JSON Lines (or one JSON array) of
/// {"id", "file_path", "captions": [...], "split"}. Identity ids are
/// remapped densely in order of first appearance; image paths are resolved
/// against `image_root` (default: the annotation file's directory) and stored
/// absolute. Errors name the offending line.
CorpusManifest ingest_external(const std::filesystem::path& annotations,
                               const std::filesystem::path& image_root = {});

}  // namespace tbps::corpus
