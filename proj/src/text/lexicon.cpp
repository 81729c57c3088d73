#include "tbps/text/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "tbps/core/errors.hpp"
#include "tbps/text/tokenizer.hpp"
#include "builtin_lexicon.inc"  // generated from data/synonyms.tsv

namespace tbps::text {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

SynonymLexicon SynonymLexicon::parse(std::string_view text) {
  SynonymLexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string::npos)
      throw DataError("lexicon line " + std::to_string(line_no) + ": missing TAB separator");
    const std::string head = lower(trim(std::string_view(t).substr(0, tab)));
    if (head.empty()) throw DataError("lexicon line " + std::to_string(line_no) + ": empty headword");
    auto& syns = lex.entries_[head];
    std::stringstream list(t.substr(tab + 1));
    std::string item;
    while (std::getline(list, item, ',')) {
      std::string syn = lower(trim(item));
      if (syn.empty() || syn == head) continue;
      if (std::find(syns.begin(), syns.end(), syn) == syns.end()) syns.push_back(std::move(syn));
    }
  }
  return lex;
}

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string_view SynonymLexicon::builtin_text() { return kBuiltinLexicon; }

const SynonymLexicon& SynonymLexicon::builtin() {
  static const SynonymLexicon lex = parse(kBuiltinLexicon);
  return lex;
}

const std::vector<std::string>& SynonymLexicon::synonyms(std::string_view word) const {
  static const std::vector<std::string> kEmpty;
  auto it = entries_.find(lower(word));
  return it == entries_.end() ? kEmpty : it->second;
}

std::vector<std::string> SynonymLexicon::all_words() const {
  std::set<std::string> words;
  for (const auto& [head, syns] : entries_) {
    words.insert(head);
    words.insert(syns.begin(), syns.end());
  }
  return {words.begin(), words.end()};
}

std::string synonym_of(const std::string& word, const SynonymLexicon& lexicon, Rng& rng) {
  const auto& syns = lexicon.synonyms(word);
  if (syns.empty()) return word;
  return syns[rng.below(syns.size())];
}

}  // namespace tbps::text
