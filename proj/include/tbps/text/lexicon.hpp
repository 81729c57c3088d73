#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tbps/core/rng.hpp"

namespace tbps::text {

/// Word -> synonyms table. File format: one entry per line,
/// `headword<TAB>syn1,syn2,...`; blank lines and lines starting with '#'
/// are ignored. Lookups are case-insensitive and a headword is never listed
/// as its own synonym.
class SynonymLexicon {
 public:
  SynonymLexicon() = default;

  static SynonymLexicon parse(std::string_view text);
  static SynonymLexicon load(const std::filesystem::path& path);
  /// The lexicon shipped with the project (synthetic caption grammar plus
  /// common clothing terms); identical to data/synonyms.tsv.
  static const SynonymLexicon& builtin();
  static std::string_view builtin_text();

  const std::vector<std::string>& synonyms(std::string_view word) const;
  bool has_synonyms(std::string_view word) const { return !synonyms(word).empty(); }
  /// Every headword and synonym, sorted.
  std::vector<std::string> all_words() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

/// A uniformly chosen synonym, or `word` itself when the lexicon has none.
std::string synonym_of(const std::string& word, const SynonymLexicon& lexicon, Rng& rng);

}  // namespace tbps::text
