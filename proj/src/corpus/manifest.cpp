#include "tbps/corpus/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tbps/core/errors.hpp"
#include "tbps/corpus/caption.hpp"

namespace tbps::corpus {
namespace fs = std::filesystem;
using nlohmann::json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw DataError("unknown split '" + std::string(s) + "'");
}

json record_to_json(const PersonRecord& r) {
  json j = {{"id", r.id},
            {"image", r.image},
            {"caption", r.caption},
            {"split", split_name(r.split)},
            {"generated", r.generated}};
  if (r.attrs) {
    json a = *r.attrs;
    a["jitter_seed"] = r.jitter_seed;
    j["attrs"] = std::move(a);
  }
  return j;
}

PersonRecord record_from_json(const json& j) {
  PersonRecord r;
  r.id = j.at("id").get<std::size_t>();
  r.image = j.at("image").get<std::string>();
  r.caption = j.at("caption").get<std::string>();
  r.split = parse_split(j.at("split").get<std::string>());
  r.generated = j.value("generated", false);
  if (j.contains("attrs") && !j["attrs"].is_null()) {
    r.attrs = j["attrs"].get<PersonAttributes>();
    r.attrs->validate();
    r.jitter_seed = j["attrs"].at("jitter_seed").get<std::uint64_t>();
  }
  return r;
}

bool CorpusManifest::operator==(const CorpusManifest& o) const {
  return records == o.records && grammar_version == o.grammar_version &&
         palette_version == o.palette_version && seed == o.seed &&
         render.height == o.render.height && render.width == o.render.width;
}

std::vector<const PersonRecord*> CorpusManifest::in_split(Split s) const {
  std::vector<const PersonRecord*> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(&r);
  return out;
}

std::vector<std::size_t> CorpusManifest::identities(Split s) const {
  std::set<std::size_t> ids;
  for (const auto& r : records)
    if (r.split == s) ids.insert(r.id);
  return {ids.begin(), ids.end()};
}

std::size_t CorpusManifest::next_identity() const {
  std::size_t next = 0;
  for (const auto& r : records) next = std::max(next, r.id + 1);
  return next;
}

std::string manifest_jsonl(const CorpusManifest& m) {
  std::string out;
  for (const auto& r : m.records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const fs::path& dir, const CorpusManifest& m) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir / kManifestFile, std::ios::binary);
    if (!f) throw DataError("cannot write " + (dir / kManifestFile).string());
    f << manifest_jsonl(m);
  }
  const json meta = {{"format", "tbps-corpus"},
                     {"grammar_version", m.grammar_version},
                     {"palette_version", m.palette_version},
                     {"seed", m.seed},
                     {"height", m.render.height},
                     {"width", m.render.width}};
  std::ofstream f(dir / kCorpusMetaFile, std::ios::binary);
  if (!f) throw DataError("cannot write " + (dir / kCorpusMetaFile).string());
  f << meta.dump(2) << '\n';
}

CorpusManifest load_manifest(const fs::path& dir) {
  CorpusManifest m;
  const fs::path meta_path = dir / kCorpusMetaFile;
  if (fs::exists(meta_path)) {
    std::ifstream f(meta_path);
    json meta;
    try {
      meta = json::parse(f);
    } catch (const json::exception& e) {
      throw DataError(meta_path.string() + ": " + e.what());
    }
    m.grammar_version = meta.value("grammar_version", 0);
    m.palette_version = meta.value("palette_version", 0);
    m.seed = meta.value("seed", std::uint64_t{0});
    m.render.height = meta.value("height", m.render.height);
    m.render.width = meta.value("width", m.render.width);
  }
  const fs::path path = dir / kManifestFile;
  std::ifstream f(path);
  if (!f) throw DataError("corpus manifest not found: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (m.records.empty()) throw DataError("corpus manifest is empty: " + path.string());
  return m;
}

fs::path resolve_image(const fs::path& dir, const PersonRecord& r) {
  const fs::path p(r.image);
  return p.is_absolute() ? p : dir / p;
}

void CorpusSpec::validate() const {
  if (identities < 2) throw ParameterError("corpus needs at least 2 identities");
  if (images_per_identity == 0) throw ParameterError("images per identity must be positive");
  if (captions_per_image == 0 || captions_per_image > caption_template_count())
    throw ParameterError("captions per image must be in [1, " +
                         std::to_string(caption_template_count()) + "]");
  for (double f : {train_fraction, val_fraction, test_fraction})
    if (!(f >= 0.0 && f <= 1.0)) throw ParameterError("split fractions must lie in [0, 1]");
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9)
    throw ParameterError("split fractions must sum to 1");
  if (split_counts(*this).train == 0) throw ParameterError("split leaves no training identity");
}

SplitCounts split_counts(const CorpusSpec& spec) {
  const double n = static_cast<double>(spec.identities);
  SplitCounts c;
  // Guard against 0.125 * 64 landing a hair below 8 after rounding.
  c.val = static_cast<std::size_t>(std::floor(n * spec.val_fraction + 1e-9));
  c.test = static_cast<std::size_t>(std::floor(n * spec.test_fraction + 1e-9));
  c.train = spec.identities - std::min(spec.identities, c.val + c.test);
  return c;
}

CorpusManifest generate_corpus(const CorpusSpec& spec, const fs::path& dir) {
  spec.validate();
  const SplitCounts counts = split_counts(spec);
  CorpusManifest m;
  m.grammar_version = kGrammarVersion;
  m.palette_version = kPaletteVersion;
  m.seed = spec.seed;
  m.render = spec.render;

  const std::uint64_t attr_stream = derive_seed(spec.seed, 1);
  const std::uint64_t image_stream = derive_seed(spec.seed, 2);
  std::vector<PersonAttributes> people;
  for (std::size_t id = 0; id < spec.identities; ++id) {
    // Resample until the appearance is new so identities stay distinguishable.
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(derive_seed(attr_stream, id), attempt));
      PersonAttributes a = sample_identity(rng, id);
      const bool dup = std::any_of(people.begin(), people.end(),
                                   [&](const PersonAttributes& p) { return p.same_appearance(a); });
      if (!dup) {
        people.push_back(a);
        break;
      }
    }
  }

  fs::create_directories(dir / "images");
  for (std::size_t id = 0; id < spec.identities; ++id) {
    const Split split = id < counts.train                ? Split::Train
                        : id < counts.train + counts.val ? Split::Val
                                                         : Split::Test;
    for (std::size_t k = 0; k < spec.images_per_identity; ++k) {
      const std::uint64_t jitter = derive_seed(derive_seed(image_stream, id), k);
      char name[64];
      std::snprintf(name, sizeof name, "images/%05zu_%02zu.png", id, k);
      write_png(dir / name, render(people[id], jitter, spec.render).image);
      Rng template_rng(derive_seed(jitter, 7));
      for (auto& text : captions_for(people[id], spec.captions_per_image, template_rng)) {
        PersonRecord r;
        r.id = id;
        r.image = name;
        r.caption = std::move(text);
        r.split = split;
        r.attrs = people[id];
        r.jitter_seed = jitter;
        m.records.push_back(std::move(r));
      }
    }
  }
  save_manifest(dir, m);
  return m;
}

namespace {

PersonRecord external_base(const json& j, std::map<std::string, std::size_t>& id_map,
                           const fs::path& root) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  if (!j.contains("id")) throw DataError("record has no \"id\"");
  const json& raw_id = j["id"];
  const std::string key = raw_id.is_string() ? raw_id.get<std::string>() : raw_id.dump();
  const auto [it, inserted] = id_map.try_emplace(key, id_map.size());
  PersonRecord r;
  r.id = it->second;
  const char* path_key = j.contains("file_path") ? "file_path" : "image";
  if (!j.contains(path_key) || !j[path_key].is_string())
    throw DataError("record has no \"file_path\" string");
  r.image = fs::absolute(root / j[path_key].get<std::string>()).lexically_normal().string();
  if (!j.contains("split") || !j["split"].is_string()) throw DataError("record has no \"split\"");
  r.split = parse_split(j["split"].get<std::string>());
  return r;
}

void append_external(const json& j, std::map<std::string, std::size_t>& id_map,
                     const fs::path& root, std::vector<PersonRecord>& out) {
  PersonRecord base = external_base(j, id_map, root);
  if (!j.contains("captions") || !j["captions"].is_array() || j["captions"].empty())
    throw DataError("record has no \"captions\" list");
  for (const auto& c : j["captions"]) {
    if (!c.is_string()) throw DataError("caption is not a string");
    PersonRecord r = base;
    r.caption = c.get<std::string>();
    out.push_back(std::move(r));
  }
}

}  // namespace

CorpusManifest ingest_external(const fs::path& annotations, const fs::path& image_root) {
  std::ifstream f(annotations);
  if (!f) throw DataError("cannot open annotation file " + annotations.string());
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string content = buf.str();
  const fs::path root = image_root.empty() ? annotations.parent_path() : image_root;

  CorpusManifest m;
  std::map<std::string, std::size_t> id_map;
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw DataError(annotations.string() + ": annotation file is empty");

  if (content[first] == '[') {
    json arr;
    try {
      arr = json::parse(content);
    } catch (const json::exception& e) {
      throw DataError(annotations.string() + ": " + e.what());
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      try {
        append_external(arr[i], id_map, root, m.records);
      } catch (const std::exception& e) {
        throw DataError(annotations.string() + ": record " + std::to_string(i + 1) + ": " +
                        e.what());
      }
    }
  } else {
    std::istringstream lines(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        append_external(json::parse(line), id_map, root, m.records);
      } catch (const std::exception& e) {
        throw DataError(annotations.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  if (m.records.empty()) throw DataError(annotations.string() + ": no records");
  return m;
}

}  // namespace tbps::corpus
