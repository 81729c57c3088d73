#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tbps/core/rng.hpp"

namespace tbps::corpus {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct NamedColor {
  std::string name;
  Rgb rgb;
};

inline constexpr int kPaletteVersion = 1;

/// Garment/accessory colour palette (single lowercase words).
const std::vector<NamedColor>& color_palette();
std::optional<Rgb> palette_rgb(std::string_view color);
bool is_palette_color(std::string_view color);

const std::vector<std::string>& upper_types();      // shirt, t-shirt, coat, jacket
const std::vector<std::string>& lower_types();      // pants, shorts, skirt
const std::vector<std::string>& accessory_types();  // bag, backpack
const std::vector<NamedColor>& skin_tones();
const std::vector<NamedColor>& hair_tones();        // named: black, brown, blond

struct Garment {
  std::string type;
  std::string color;
  bool operator==(const Garment&) const = default;
};

/// Everything that determines a synthetic person's caption and, together with
/// a jitter seed, their rendered image.
struct PersonAttributes {
  std::size_t identity = 0;
  Garment upper;
  Garment lower;
  std::string shoes_color;
  std::optional<Garment> accessory;
  std::size_t skin_tone = 0;
  std::size_t hair_tone = 0;

  bool operator==(const PersonAttributes&) const = default;
  /// Throws DataError when a categorical value is outside its palette.
  void validate() const;
  /// Same person ignoring the identity number.
  bool same_appearance(const PersonAttributes& other) const;
};

void to_json(nlohmann::json& j, const PersonAttributes& a);
void from_json(const nlohmann::json& j, PersonAttributes& a);

/// Uniform draw over every attribute palette. Accessory is absent with
/// probability 1/3, otherwise a bag or backpack of a uniform colour.
PersonAttributes sample_identity(Rng& rng, std::size_t identity = 0);

}  // namespace tbps::corpus
