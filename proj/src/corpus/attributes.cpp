#include "tbps/corpus/attributes.hpp"

#include <algorithm>

#include "tbps/core/errors.hpp"

namespace tbps::corpus {
namespace {

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

const std::vector<NamedColor>& color_palette() {
  static const std::vector<NamedColor> colors = {
      {"red", {220, 40, 40}},     {"blue", {40, 70, 220}},    {"green", {40, 160, 60}},
      {"yellow", {235, 210, 40}}, {"black", {25, 25, 25}},    {"white", {240, 240, 240}},
      {"purple", {130, 50, 170}}, {"orange", {245, 140, 30}},
  };
  return colors;
}

std::optional<Rgb> palette_rgb(std::string_view color) {
  for (const auto& c : color_palette())
    if (c.name == color) return c.rgb;
  return std::nullopt;
}

bool is_palette_color(std::string_view color) { return palette_rgb(color).has_value(); }

const std::vector<std::string>& upper_types() {
  static const std::vector<std::string> v = {"shirt", "t-shirt", "coat", "jacket"};
  return v;
}

const std::vector<std::string>& lower_types() {
  static const std::vector<std::string> v = {"pants", "shorts", "skirt"};
  return v;
}

const std::vector<std::string>& accessory_types() {
  static const std::vector<std::string> v = {"bag", "backpack"};
  return v;
}

const std::vector<NamedColor>& skin_tones() {
  static const std::vector<NamedColor> v = {
      {"light", {240, 200, 170}}, {"medium", {200, 150, 110}}, {"dark", {120, 80, 55}}};
  return v;
}

const std::vector<NamedColor>& hair_tones() {
  static const std::vector<NamedColor> v = {
      {"black", {35, 28, 22}}, {"brown", {105, 62, 30}}, {"blond", {222, 190, 110}}};
  return v;
}

void PersonAttributes::validate() const {
  auto fail = [this](const std::string& what) {
    throw DataError("identity " + std::to_string(identity) + ": " + what);
  };
  if (!contains(upper_types(), upper.type)) fail("unknown upper garment '" + upper.type + "'");
  if (!contains(lower_types(), lower.type)) fail("unknown lower garment '" + lower.type + "'");
  if (!is_palette_color(upper.color)) fail("upper colour '" + upper.color + "' not in palette");
  if (!is_palette_color(lower.color)) fail("lower colour '" + lower.color + "' not in palette");
  if (!is_palette_color(shoes_color)) fail("shoe colour '" + shoes_color + "' not in palette");
  if (accessory) {
    if (!contains(accessory_types(), accessory->type))
      fail("unknown accessory '" + accessory->type + "'");
    if (!is_palette_color(accessory->color))
      fail("accessory colour '" + accessory->color + "' not in palette");
  }
  if (skin_tone >= skin_tones().size()) fail("skin tone out of range");
  if (hair_tone >= hair_tones().size()) fail("hair tone out of range");
}

bool PersonAttributes::same_appearance(const PersonAttributes& other) const {
  PersonAttributes a = *this;
  a.identity = other.identity;
  return a == other;
}

void to_json(nlohmann::json& j, const PersonAttributes& a) {
  j = {{"identity", a.identity},
       {"upper", {{"type", a.upper.type}, {"color", a.upper.color}}},
       {"lower", {{"type", a.lower.type}, {"color", a.lower.color}}},
       {"shoes", a.shoes_color},
       {"skin", a.skin_tone},
       {"hair", a.hair_tone}};
  if (a.accessory) j["accessory"] = {{"type", a.accessory->type}, {"color", a.accessory->color}};
}

void from_json(const nlohmann::json& j, PersonAttributes& a) {
  a.identity = j.at("identity").get<std::size_t>();
  a.upper = {j.at("upper").at("type").get<std::string>(), j.at("upper").at("color").get<std::string>()};
  a.lower = {j.at("lower").at("type").get<std::string>(), j.at("lower").at("color").get<std::string>()};
  a.shoes_color = j.at("shoes").get<std::string>();
  a.skin_tone = j.at("skin").get<std::size_t>();
  a.hair_tone = j.at("hair").get<std::size_t>();
  if (j.contains("accessory") && !j["accessory"].is_null())
    a.accessory = Garment{j["accessory"].at("type").get<std::string>(),
                          j["accessory"].at("color").get<std::string>()};
  else
    a.accessory.reset();
}

PersonAttributes sample_identity(Rng& rng, std::size_t identity) {
  const auto& colors = color_palette();
  auto color = [&] { return colors[rng.below(colors.size())].name; };
  PersonAttributes a;
  a.identity = identity;
  a.upper.type = upper_types()[rng.below(upper_types().size())];
  a.upper.color = color();
  a.lower.type = lower_types()[rng.below(lower_types().size())];
  a.lower.color = color();
  a.shoes_color = color();
  const std::size_t acc = rng.below(3);
  const std::string acc_color = color();
  if (acc > 0) a.accessory = Garment{accessory_types()[acc - 1], acc_color};
  a.skin_tone = rng.below(skin_tones().size());
  a.hair_tone = rng.below(hair_tones().size());
  return a;
}

}  // namespace tbps::corpus
