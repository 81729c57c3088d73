#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tbps/core/rng.hpp"
#include "tbps/text/lexicon.hpp"

namespace tbps::pdg {

enum class TextOp { SDEL, CDEL, REPL };

inline constexpr double kDefaultSigma = 0.2;

std::string_view text_op_name(TextOp op);
TextOp parse_text_op(std::string_view name);
TextOp random_text_op(Rng& rng);

/// floor(word_count * sigma). Throws ParameterError unless 0 < sigma < 1.
std::size_t altered_word_count(std::size_t word_count, double sigma);

struct ApproximateText {
  std::string text;
  TextOp op = TextOp::SDEL;
  std::size_t altered = 0;                // N_w
  std::vector<std::size_t> positions;     // altered word indices in the original, ascending
};

/// SDEL removes N_w distinct random words, CDEL one contiguous run of N_w
/// words, REPL swaps N_w distinct words for synonyms. Positions for REPL are
/// drawn among words that have a synonym, so every chosen slot changes; when
/// fewer such words exist, all of them are replaced. The result is the
/// normalised (lowercase, space-joined) word sequence, or `s` unchanged when
/// N_w is 0.
ApproximateText approximate_text(std::string_view s, TextOp op, double sigma,
                                 const text::SynonymLexicon& lexicon, Rng& rng);

}  // namespace tbps::pdg
