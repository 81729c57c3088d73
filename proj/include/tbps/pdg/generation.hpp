#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tbps/core/rng.hpp"
#include "tbps/corpus/attributes.hpp"
#include "tbps/corpus/image.hpp"
#include "tbps/corpus/manifest.hpp"
#include "tbps/corpus/render.hpp"

namespace tbps::pdg {

/// Editable clothes nouns (Cl) and colours (Co, name -> RGB).
struct GenerationSets {
  std::vector<std::string> clothes;
  std::vector<corpus::NamedColor> colors;

  static GenerationSets defaults();
  bool is_clothes(std::string_view w) const;
  bool is_color(std::string_view w) const;
  void validate() const;
};

void to_json(nlohmann::json& j, const GenerationSets& s);
void from_json(const nlohmann::json& j, GenerationSets& s);

/// A colour word and the clothes noun it modifies.
struct EditablePhrase {
  std::size_t color_word = 0;  // word index
  std::size_t noun_word = 0;   // word index, color_word < noun_word <= color_word + 2
  std::string color;
  std::string noun;
  std::size_t color_begin = 0;  // byte range of the colour word in the source text
  std::size_t color_end = 0;
};

/// Rule-based chunker: a colour from Co followed within two words by a noun.
/// Only phrases whose noun is in Cl are returned. Exact on the synthetic
/// caption grammar; free-form text may be chunked imperfectly.
std::vector<EditablePhrase> editable_phrases(std::string_view s, const GenerationSets& sets);
std::optional<EditablePhrase> select_editable_phrase(std::string_view s, const GenerationSets& sets,
                                                     Rng& rng);

/// Source pair for controlled generation.
struct PairSource {
  std::string caption;
  corpus::RgbImage image;
  corpus::PersonAttributes attrs;
  std::uint64_t jitter_seed = 0;
};

/// Produces the image of an edited description of the same scene.
class ConditionalPairSynthesizer {
 public:
  virtual ~ConditionalPairSynthesizer() = default;
  virtual corpus::RgbImage generate(const PairSource& source,
                                    const corpus::PersonAttributes& edited) const = 0;
};

/// The procedural renderer re-run with the source jitter seed.
class RendererSynthesizer final : public ConditionalPairSynthesizer {
 public:
  explicit RendererSynthesizer(corpus::RenderConfig config = {}) : config_(config) {}
  corpus::RgbImage generate(const PairSource& source,
                            const corpus::PersonAttributes& edited) const override;

 private:
  corpus::RenderConfig config_;
};

struct GeneratedPair {
  std::string caption;
  corpus::RgbImage image;
  corpus::PersonAttributes attrs;
  EditablePhrase phrase;
  std::string new_color;
  corpus::Region region = corpus::Region::Upper;  // garment whose pixels may change
};

/// Picks an editable phrase, swaps its colour for a different one from Co and
/// asks the synthesizer for the matching image. nullopt when the caption has
/// no editable phrase. Throws DataError when caption and attributes disagree.
std::optional<GeneratedPair> controlled_pair_generate(const PairSource& source,
                                                      const GenerationSets& sets,
                                                      const ConditionalPairSynthesizer& synthesizer,
                                                      Rng& rng);

struct PdgGenerateStats {
  std::size_t sources = 0;    // identities considered
  std::size_t generated = 0;  // pairs written
  std::size_t skipped = 0;    // identities without an editable caption
  std::size_t without_attributes = 0;  // train records the renderer cannot redraw
};

/// Appends `per_id` generated pairs per synthetic training identity. Each
/// pair gets a fresh identity id, split train and generated=true; images go
/// to `dir/images`. Previously generated records are never used as sources.
PdgGenerateStats pdg_generate(corpus::CorpusManifest& manifest, const std::filesystem::path& dir,
                              std::size_t per_id, std::uint64_t seed, const GenerationSets& sets,
                              const ConditionalPairSynthesizer& synthesizer);

}  // namespace tbps::pdg
