#include "tbps/pdg/text_ops.hpp"

#include <algorithm>
#include <cmath>

#include "tbps/core/errors.hpp"
#include "tbps/text/tokenizer.hpp"

namespace tbps::pdg {

std::string_view text_op_name(TextOp op) {
  switch (op) {
    case TextOp::SDEL: return "sdel";
    case TextOp::CDEL: return "cdel";
    case TextOp::REPL: return "repl";
  }
  return "sdel";
}

TextOp parse_text_op(std::string_view name) {
  if (name == "sdel" || name == "SDEL") return TextOp::SDEL;
  if (name == "cdel" || name == "CDEL") return TextOp::CDEL;
  if (name == "repl" || name == "REPL") return TextOp::REPL;
  throw ParameterError("unknown text operation '" + std::string(name) + "'");
}

TextOp random_text_op(Rng& rng) { return static_cast<TextOp>(rng.below(3)); }

std::size_t altered_word_count(std::size_t word_count, double sigma) {
  if (!(sigma > 0.0 && sigma < 1.0))
    throw ParameterError("sigma must lie strictly inside (0, 1), got " + std::to_string(sigma));
  return static_cast<std::size_t>(std::floor(static_cast<double>(word_count) * sigma));
}

ApproximateText approximate_text(std::string_view s, TextOp op, double sigma,
                                 const text::SynonymLexicon& lexicon, Rng& rng) {
  std::vector<std::string> words = text::words_of(s);
  ApproximateText out;
  out.op = op;
  out.altered = altered_word_count(words.size(), sigma);
  if (out.altered == 0) {
    out.text = std::string(s);
    return out;
  }

  switch (op) {
    case TextOp::SDEL:
      out.positions = rng.sample_distinct(words.size(), out.altered);
      break;
    case TextOp::CDEL: {
      const std::size_t start = rng.below(words.size() - out.altered + 1);
      for (std::size_t i = 0; i < out.altered; ++i) out.positions.push_back(start + i);
      break;
    }
    case TextOp::REPL: {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < words.size(); ++i)
        if (lexicon.has_synonyms(words[i])) candidates.push_back(i);
      const std::size_t k = std::min(out.altered, candidates.size());
      for (std::size_t idx : rng.sample_distinct(candidates.size(), k))
        out.positions.push_back(candidates[idx]);
      out.altered = k;
      for (std::size_t p : out.positions) words[p] = text::synonym_of(words[p], lexicon, rng);
      out.text = text::join_words(words);
      return out;
    }
  }

  std::vector<std::string> kept;
  std::size_t next = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (next < out.positions.size() && out.positions[next] == i) {
      ++next;
      continue;
    }
    kept.push_back(words[i]);
  }
  out.text = text::join_words(kept);
  return out;
}

}  // namespace tbps::pdg
