#include "tbps/pdg/generation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "tbps/core/errors.hpp"
#include "tbps/text/tokenizer.hpp"

namespace tbps::pdg {

namespace {

// Nouns that end a colour's scope even when they are not editable.
const std::vector<std::string>& scope_nouns() {
  static const std::vector<std::string> v = {"shoes", "bag", "backpack", "hair"};
  return v;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

GenerationSets GenerationSets::defaults() {
  return {{"shirt", "t-shirt", "coat", "jacket", "pants", "shorts", "skirt", "dress"},
          corpus::color_palette()};
}

bool GenerationSets::is_clothes(std::string_view w) const { return contains(clothes, w); }

bool GenerationSets::is_color(std::string_view w) const {
  return std::any_of(colors.begin(), colors.end(), [&](const auto& c) { return c.name == w; });
}

void GenerationSets::validate() const {
  if (clothes.empty() || colors.size() < 2)
    throw ParameterError("generation sets need clothes and at least two colours");
  for (const auto& c : colors)
    if (c.name.empty() || text::words_of(c.name).size() != 1 || text::words_of(c.name)[0] != c.name)
      throw ParameterError("colour names must be single lowercase words: '" + c.name + "'");
}

void to_json(nlohmann::json& j, const GenerationSets& s) {
  nlohmann::json colors = nlohmann::json::object();
  for (const auto& c : s.colors) colors[c.name] = {c.rgb.r, c.rgb.g, c.rgb.b};
  j = {{"clothes", s.clothes}, {"colors", colors}};
}

void from_json(const nlohmann::json& j, GenerationSets& s) {
  s = GenerationSets::defaults();
  if (j.contains("clothes")) s.clothes = j["clothes"].get<std::vector<std::string>>();
  if (j.contains("colors")) {
    s.colors.clear();
    for (const auto& [name, rgb] : j["colors"].items())
      s.colors.push_back({name, corpus::Rgb{rgb.at(0).get<std::uint8_t>(),
                                            rgb.at(1).get<std::uint8_t>(),
                                            rgb.at(2).get<std::uint8_t>()}});
  }
  s.validate();
}

std::vector<EditablePhrase> editable_phrases(std::string_view s, const GenerationSets& sets) {
  const auto words = text::split_words(s);
  std::vector<EditablePhrase> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!sets.is_color(words[i].text)) continue;
    for (std::size_t k = i + 1; k <= i + 2 && k < words.size(); ++k) {
      const std::string& w = words[k].text;
      if (sets.is_clothes(w)) {
        out.push_back({i, k, words[i].text, w, words[i].begin, words[i].end});
        break;
      }
      if (sets.is_color(w) || contains(scope_nouns(), w)) break;
    }
  }
  return out;
}

std::optional<EditablePhrase> select_editable_phrase(std::string_view s, const GenerationSets& sets,
                                                     Rng& rng) {
  auto phrases = editable_phrases(s, sets);
  if (phrases.empty()) return std::nullopt;
  return phrases[rng.below(phrases.size())];
}

corpus::RgbImage RendererSynthesizer::generate(const PairSource& source,
                                               const corpus::PersonAttributes& edited) const {
  corpus::RenderConfig cfg = config_;
  if (source.image.height > 0) cfg = {source.image.height, source.image.width};
  return corpus::render(edited, source.jitter_seed, cfg).image;
}

std::optional<GeneratedPair> controlled_pair_generate(const PairSource& source,
                                                      const GenerationSets& sets,
                                                      const ConditionalPairSynthesizer& synthesizer,
                                                      Rng& rng) {
  const auto phrase = select_editable_phrase(source.caption, sets, rng);
  if (!phrase) return std::nullopt;

  GeneratedPair out;
  out.phrase = *phrase;
  out.attrs = source.attrs;
  corpus::Garment* garment = nullptr;
  if (source.attrs.upper.type == phrase->noun) {
    garment = &out.attrs.upper;
    out.region = corpus::Region::Upper;
  } else if (source.attrs.lower.type == phrase->noun) {
    garment = &out.attrs.lower;
    out.region = corpus::Region::Lower;
  }
  if (!garment || garment->color != phrase->color)
    throw DataError("caption phrase '" + phrase->color + " " + phrase->noun +
                    "' does not match the record's attributes");

  std::vector<std::size_t> choices;
  for (std::size_t c = 0; c < sets.colors.size(); ++c)
    if (sets.colors[c].name != phrase->color) choices.push_back(c);
  if (choices.empty()) throw ParameterError("colour set has no alternative colour");
  out.new_color = sets.colors[choices[rng.below(choices.size())]].name;
  garment->color = out.new_color;

  out.caption = source.caption;
  out.caption.replace(phrase->color_begin, phrase->color_end - phrase->color_begin, out.new_color);
  try {
    out.image = synthesizer.generate(source, out.attrs);
  } catch (const std::exception& e) {
    throw DataError("synthesizer failed for identity " + std::to_string(source.attrs.identity) +
                    ": " + e.what());
  }
  if (out.image.height != source.image.height || out.image.width != source.image.width)
    throw DataError("synthesizer changed the image dimensions");
  return out;
}

PdgGenerateStats pdg_generate(corpus::CorpusManifest& manifest, const std::filesystem::path& dir,
                              std::size_t per_id, std::uint64_t seed, const GenerationSets& sets,
                              const ConditionalPairSynthesizer& synthesizer) {
  if (per_id == 0) throw ParameterError("per-id count must be positive");
  sets.validate();
  std::map<std::size_t, std::vector<std::size_t>> by_identity;
  std::size_t without_attrs = 0;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.split != corpus::Split::Train || r.generated) continue;
    if (r.attrs) by_identity[r.id].push_back(i);
    else ++without_attrs;
  }

  PdgGenerateStats stats;
  stats.without_attributes = without_attrs;
  std::size_t next_id = manifest.next_identity();
  std::filesystem::create_directories(dir / "images");
  std::vector<corpus::PersonRecord> added;
  for (const auto& [identity, indices] : by_identity) {
    ++stats.sources;
    bool any = false;
    for (std::size_t k = 0; k < per_id; ++k) {
      Rng rng(derive_seed(derive_seed(seed, identity), k));
      // Try records in a seeded order until one has an editable caption.
      std::vector<std::size_t> order = indices;
      rng.shuffle(order);
      for (std::size_t idx : order) {
        const auto& src = manifest.records[idx];
        PairSource source{src.caption, corpus::read_png(corpus::resolve_image(dir, src)),
                          *src.attrs, src.jitter_seed};
        auto pair = controlled_pair_generate(source, sets, synthesizer, rng);
        if (!pair) continue;
        char name[64];
        std::snprintf(name, sizeof name, "images/gen_%05zu.png", next_id);
        corpus::write_png(dir / name, pair->image);
        corpus::PersonRecord r;
        r.id = next_id++;
        r.image = name;
        r.caption = pair->caption;
        r.split = corpus::Split::Train;
        r.generated = true;
        r.attrs = pair->attrs;
        r.attrs->identity = r.id;
        r.jitter_seed = src.jitter_seed;
        added.push_back(std::move(r));
        ++stats.generated;
        any = true;
        break;
      }
    }
    if (!any) ++stats.skipped;
  }
  manifest.records.insert(manifest.records.end(), added.begin(), added.end());
  return stats;
}

}  // namespace tbps::pdg
