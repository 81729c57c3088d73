#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tbps::text {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;
inline constexpr std::size_t kSemId = 2;
inline constexpr std::size_t kReservedIds = 3;
inline constexpr std::size_t kDefaultMaxLen = 64;

/// One word of a sentence together with its byte range in the source text.
struct Word {
  std::string text;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Lowercases and splits on whitespace and punctuation. Hyphens and
/// apostrophes between alphanumerics stay inside a word ("t-shirt").
std::vector<Word> split_words(std::string_view s);
std::vector<std::string> words_of(std::string_view s);
std::size_t word_count(std::string_view s);
std::string join_words(std::span<const std::string> words);

class Vocabulary {
 public:
  Vocabulary();
  /// Ids 0..2 are reserved; `tokens` receive ids 3, 4, ... in order.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return id_to_token_.size(); }
  std::size_t id(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  /// Non-reserved tokens in id order.
  std::vector<std::string> tokens() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::size_t> token_to_id_;
};

/// Tokens ordered by frequency (descending), ties broken lexicographically.
Vocabulary build_vocab(std::span<const std::string> captions);

struct TokenizedText {
  std::vector<std::size_t> ids;         // exactly max_len entries, ids[0] == kSemId
  std::vector<std::uint8_t> attention;  // 1 on [SEM] and words, 0 on padding
  std::vector<std::string> words;       // original (lowercased) words

  /// Number of leading positions with attention 1.
  std::size_t active_length() const;
};

TokenizedText encode(std::string_view s, const Vocabulary& vocab,
                     std::size_t max_len = kDefaultMaxLen);

}  // namespace tbps::text
