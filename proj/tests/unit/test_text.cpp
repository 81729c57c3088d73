#include <doctest.h>

#include <set>

#include "tbps/core/errors.hpp"
#include "tbps/text/lexicon.hpp"
#include "tbps/text/tokenizer.hpp"
#include "test_support.hpp"

using namespace tbps;
using namespace tbps::text;

TEST_CASE("build_vocab orders by frequency then lexicographically") {
  const std::vector<std::string> caps = {"a a b"};
  const Vocabulary v = build_vocab(caps);
  CHECK(v.id("a") == 3);
  CHECK(v.id("b") == 4);
  CHECK(v.size() == 5);
  const std::vector<std::string> ties = {"zeta alpha", "beta"};
  const Vocabulary t = build_vocab(ties);
  CHECK(t.tokens() == std::vector<std::string>{"alpha", "beta", "zeta"});
  CHECK(build_vocab(caps) == v);
}

TEST_CASE("build_vocab rejects an empty corpus") {
  CHECK_THROWS_AS(build_vocab(std::vector<std::string>{}), DataError);
}

TEST_CASE("reserved ids are fixed") {
  const Vocabulary v(std::vector<std::string>{"x"});
  CHECK(v.token(kPadId) == "[PAD]");
  CHECK(v.token(kUnkId) == "[UNK]");
  CHECK(v.token(kSemId) == "[SEM]");
  CHECK(v.id("missing") == kUnkId);
}

TEST_CASE("encode the empty string") {
  const Vocabulary v(std::vector<std::string>{"red"});
  const TokenizedText t = encode("", v, 64);
  REQUIRE(t.ids.size() == 64);
  CHECK(t.ids[0] == kSemId);
  for (std::size_t i = 1; i < 64; ++i) CHECK(t.ids[i] == kPadId);
  CHECK(t.attention[0] == 1);
  CHECK(t.attention[1] == 0);
}

TEST_CASE("encode lowercases, strips punctuation and maps unknown words") {
  const Vocabulary v(std::vector<std::string>{"red", "shirt"});
  const TokenizedText t = encode("Red shirt.", v, 8);
  CHECK(t.ids == std::vector<std::size_t>{2, v.id("red"), v.id("shirt"), 0, 0, 0, 0, 0});
  CHECK(t.active_length() == 3);
  const TokenizedText u = encode("red hat", v, 8);
  CHECK(u.ids[2] == kUnkId);
}

TEST_CASE("encode truncates the tail") {
  std::string s;
  for (int i = 0; i < 100; ++i) s += "w" + std::to_string(i) + " ";
  const Vocabulary v(std::vector<std::string>{"w0", "w62", "w63"});
  const TokenizedText t = encode(s, v, 64);
  CHECK(t.ids.size() == 64);
  CHECK(t.active_length() == 64);
  CHECK(t.ids[63] == v.id("w62"));
  CHECK(t.words.size() == 100);
}

TEST_CASE("mask count equals one plus the kept word count") {
  const Vocabulary v(std::vector<std::string>{"a"});
  for (const std::string s : {"", "a", "a b c", "one, two; three four"})
    for (std::size_t max_len : {2u, 3u, 64u}) {
      const auto t = encode(s, v, max_len);
      std::size_t ones = 0;
      for (auto m : t.attention) ones += m;
      CHECK(ones == 1 + std::min(word_count(s), max_len - 1));
    }
  CHECK_THROWS_AS(encode("a", v, 1), ParameterError);
}

TEST_CASE("encode is idempotent on its normalized form") {
  const Vocabulary v(std::vector<std::string>{"red", "t-shirt"});
  const std::string s = "A RED T-Shirt, and... more!";
  const auto a = encode(s, v, 16);
  const auto b = encode(join_words(a.words), v, 16);
  CHECK(a.ids == b.ids);
  CHECK(a.attention == b.attention);
}

TEST_CASE("word_count examples") {
  CHECK(word_count("a man wearing a red shirt") == 6);
  CHECK(word_count("") == 0);
  CHECK(word_count("hello,") == 1);
  CHECK(words_of("a t-shirt, the man's bag") ==
        std::vector<std::string>{"a", "t-shirt", "the", "man's", "bag"});
}

TEST_CASE("split_words records byte offsets") {
  const std::string s = "Red  shirt!";
  const auto w = split_words(s);
  REQUIRE(w.size() == 2);
  CHECK(s.substr(w[1].begin, w[1].end - w[1].begin) == "shirt");
}

TEST_CASE("vocabulary save and load round trip") {
  tbps::testing::TempDir dir("vocab");
  const std::vector<std::string> caps = {"red shirt red"};
  const Vocabulary v = build_vocab(caps);
  v.save(dir.path() / "vocab.txt");
  CHECK(Vocabulary::load(dir.path() / "vocab.txt") == v);
}

TEST_CASE("synonym_of falls back to the word itself") {
  const auto lex = SynonymLexicon::parse("jacket\tcoat\n");
  Rng rng(1);
  CHECK(synonym_of("umbrella", lex, rng) == "umbrella");
  CHECK(synonym_of("jacket", lex, rng) == "coat");
  CHECK(synonym_of("JACKET", lex, rng) == "coat");
}

TEST_CASE("synonym_of is deterministic under a seed and never empty") {
  const auto& lex = SynonymLexicon::builtin();
  for (const auto& w : lex.all_words()) {
    Rng a(5), b(5);
    const auto s = synonym_of(w, lex, a);
    CHECK(s == synonym_of(w, lex, b));
    CHECK(!s.empty());
  }
}

TEST_CASE("lexicon parsing drops self synonyms and comments") {
  const auto lex = SynonymLexicon::parse("# comment\nShirt\tshirt, Top ,blouse\n\n");
  CHECK(lex.synonyms("shirt") == std::vector<std::string>{"top", "blouse"});
  CHECK(lex.size() == 1);
}

TEST_CASE("builtin lexicon covers the caption grammar") {
  const auto& lex = SynonymLexicon::builtin();
  for (const char* w : {"shirt", "t-shirt", "coat", "jacket", "pants", "shorts", "skirt", "red",
                        "blue", "wearing", "person"})
    CHECK(lex.has_synonyms(w));
  for (const auto& w : lex.all_words())
    for (const auto& s : lex.synonyms(w)) CHECK(s != w);
}
