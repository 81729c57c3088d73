#include "tbps/text/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "tbps/core/errors.hpp"

namespace tbps::text {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

const char* const kReserved[kReservedIds] = {"[PAD]", "[UNK]", "[SEM]"};

}  // namespace

std::vector<Word> split_words(std::string_view s) {
  std::vector<Word> words;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    if (!is_alnum(s[i])) {
      ++i;
      continue;
    }
    Word w;
    w.begin = i;
    while (i < n) {
      if (is_alnum(s[i])) {
        w.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
        ++i;
      } else if ((s[i] == '-' || s[i] == '\'') && i + 1 < n && is_alnum(s[i + 1])) {
        w.text.push_back(s[i]);
        ++i;
      } else {
        break;
      }
    }
    w.end = i;
    words.push_back(std::move(w));
  }
  return words;
}

std::vector<std::string> words_of(std::string_view s) {
  std::vector<std::string> out;
  for (auto& w : split_words(s)) out.push_back(std::move(w.text));
  return out;
}

std::size_t word_count(std::string_view s) { return split_words(s).size(); }

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  for (const char* r : kReserved) {
    token_to_id_.emplace(r, id_to_token_.size());
    id_to_token_.emplace_back(r);
  }
  for (auto& t : tokens) {
    if (t.empty()) throw DataError("vocabulary: empty token");
    if (!token_to_id_.emplace(t, id_to_token_.size()).second)
      throw DataError("vocabulary: duplicate token '" + t + "'");
    id_to_token_.push_back(std::move(t));
  }
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= id_to_token_.size()) throw DataError("vocabulary: id out of range");
  return id_to_token_[id];
}

std::vector<std::string> Vocabulary::tokens() const {
  return {id_to_token_.begin() + kReservedIds, id_to_token_.end()};
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens()) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(std::span<const std::string> captions) {
  if (captions.empty()) throw DataError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& c : captions)
    for (auto& w : words_of(c)) ++freq[w];
  std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(entries.size());
  for (auto& [w, _] : entries) tokens.push_back(w);
  return Vocabulary(std::move(tokens));
}

std::size_t TokenizedText::active_length() const {
  std::size_t n = 0;
  while (n < attention.size() && attention[n]) ++n;
  return n;
}

TokenizedText encode(std::string_view s, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 2) throw ParameterError("encode: max_len must be at least 2");
  TokenizedText t;
  t.words = words_of(s);
  t.ids.assign(max_len, kPadId);
  t.attention.assign(max_len, 0);
  t.ids[0] = kSemId;
  t.attention[0] = 1;
  const std::size_t kept = std::min(t.words.size(), max_len - 1);
  for (std::size_t i = 0; i < kept; ++i) {
    t.ids[i + 1] = vocab.id(t.words[i]);
    t.attention[i + 1] = 1;
  }
  return t;
}

}  // namespace tbps::text
