#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tbps/corpus/attributes.hpp"

namespace tbps::corpus {

inline constexpr int kGrammarVersion = 1;

std::size_t caption_template_count();

/// Caption from template `index`. Every garment is mentioned once with its
/// colour immediately before the garment noun.
std::string caption_from_template(const PersonAttributes& attrs, std::size_t index);
/// A uniformly chosen template.
std::string caption(const PersonAttributes& attrs, Rng& template_rng);
/// `count` captions from distinct templates (count <= caption_template_count()).
std::vector<std::string> captions_for(const PersonAttributes& attrs, std::size_t count,
                                      Rng& template_rng);

/// What the inverse grammar recovers from a caption. Skin tone is never
/// mentioned and therefore not recoverable.
struct ParsedCaption {
  std::optional<Garment> upper;
  std::optional<Garment> lower;
  std::optional<std::string> shoes_color;
  std::optional<Garment> accessory;
  std::optional<std::size_t> hair_tone;  // absent from some templates

  /// True when every captioned attribute of `attrs` was recovered.
  bool matches(const PersonAttributes& attrs) const;
};

ParsedCaption parse_caption(std::string_view caption);

}  // namespace tbps::corpus
