#include "tbps/corpus/caption.hpp"

#include <algorithm>

#include "tbps/core/errors.hpp"
#include "tbps/text/tokenizer.hpp"

namespace tbps::corpus {
namespace {

struct Slots {
  std::string upper, lower, shoes, hair, accessory;
};

Slots slots_of(const PersonAttributes& a) {
  Slots s;
  s.upper = a.upper.color + " " + a.upper.type;
  s.lower = a.lower.color + " " + a.lower.type;
  s.shoes = a.shoes_color + " shoes";
  s.hair = hair_tones()[a.hair_tone].name + " hair";
  if (a.accessory) s.accessory = a.accessory->color + " " + a.accessory->type;
  return s;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::size_t caption_template_count() { return 4; }

std::string caption_from_template(const PersonAttributes& attrs, std::size_t index) {
  const Slots s = slots_of(attrs);
  const bool acc = attrs.accessory.has_value();
  switch (index) {
    case 0:
      return "a person wearing a " + s.upper + ", " + s.lower + " and " + s.shoes + ", with " +
             s.hair + (acc ? ", carrying a " + s.accessory : "") + ".";
    case 1:
      return "the pedestrian has " + s.hair + " and wears a " + s.upper + ", " + s.lower +
             " and " + s.shoes + "." + (acc ? " the person carries a " + s.accessory + "." : "");
    case 2:
      return "this person is dressed in a " + s.upper + " with " + s.lower + " and " + s.shoes +
             (acc ? " and holds a " + s.accessory : "") + ".";
    case 3:
      return "someone with " + s.hair + " walks by in a " + s.upper + " and " + s.lower +
             ", wearing " + s.shoes + (acc ? " and carrying a " + s.accessory : "") + ".";
    default:
      throw ParameterError("caption template index out of range");
  }
}

std::string caption(const PersonAttributes& attrs, Rng& template_rng) {
  return caption_from_template(attrs, template_rng.below(caption_template_count()));
}

std::vector<std::string> captions_for(const PersonAttributes& attrs, std::size_t count,
                                      Rng& template_rng) {
  if (count == 0 || count > caption_template_count())
    throw ParameterError("captions per image must be in [1, " +
                         std::to_string(caption_template_count()) + "]");
  auto picks = template_rng.sample_distinct(caption_template_count(), count);
  template_rng.shuffle(picks);
  std::vector<std::string> out;
  for (auto t : picks) out.push_back(caption_from_template(attrs, t));
  return out;
}

ParsedCaption parse_caption(std::string_view caption) {
  ParsedCaption p;
  const auto words = text::words_of(caption);
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    const std::string& c = words[i];
    const std::string& noun = words[i + 1];
    if (is_palette_color(c)) {
      if (contains(upper_types(), noun)) p.upper = Garment{noun, c};
      else if (contains(lower_types(), noun)) p.lower = Garment{noun, c};
      else if (noun == "shoes") p.shoes_color = c;
      else if (contains(accessory_types(), noun)) p.accessory = Garment{noun, c};
    }
    if (noun == "hair")
      for (std::size_t h = 0; h < hair_tones().size(); ++h)
        if (hair_tones()[h].name == c) p.hair_tone = h;
  }
  return p;
}

bool ParsedCaption::matches(const PersonAttributes& a) const {
  return upper == a.upper && lower == a.lower && shoes_color == a.shoes_color &&
         accessory == a.accessory && (!hair_tone || *hair_tone == a.hair_tone);
}

}  // namespace tbps::corpus
