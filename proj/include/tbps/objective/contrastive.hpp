#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tbps/core/tensor.hpp"

namespace tbps::objective {

inline constexpr double kDefaultTau = 0.005;
inline constexpr double kDefaultMu = 0.1;
/// Below this original-pair similarity the ratio regulariser is skipped.
inline constexpr double kRegDenominatorFloor = 1e-6;

/// Cosine similarity. Throws ParameterError on a zero vector.
double similarity(std::span<const double> text, std::span<const double> image);

/// N x N matrix with entry (j, k) = f_T^j . f_I^k; the diagonal holds the
/// matched pairs.
struct SimilarityMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double at(std::size_t j, std::size_t k) const { return values[j * n + k]; }
  static SimilarityMatrix from_rows(std::size_t n, std::vector<double> values);
};

/// Builds S from row-stacked unit-norm embeddings (N x D each).
SimilarityMatrix similarity_matrix(std::span<const double> text_embs,
                                   std::span<const double> image_embs, std::size_t dim);

/// -log softmax_k(S_jk / tau)[j], evaluated with log-sum-exp.
double loss_t2i(const SimilarityMatrix& s, std::size_t j, double tau);
/// Same as loss_t2i on the transposed matrix (image j queries all texts).
double loss_i2t(const SimilarityMatrix& s, std::size_t j, double tau);
/// max(0, dot_approx / dot_orig - 1); 0 when dot_orig <= kRegDenominatorFloor.
double loss_reg(double dot_approx, double dot_orig);

struct LossBreakdown {
  std::vector<double> t2i;
  std::vector<double> i2t;
  std::vector<double> reg;           // L_c(j), 0 where phi(j) == 0
  std::vector<std::uint8_t> phi;     // 1 when row j uses an approximate text
  double tau = kDefaultTau;
  double mu = kDefaultMu;
  double total = 0.0;

  double sum_t2i() const;
  double sum_i2t() const;
  double sum_reg() const;
};

/// Plain-number evaluation of the batch objective:
///   total = sum_j L_t2i(j) + L_i2t(j) + mu * phi(j) * L_c(j).
LossBreakdown total_loss(const SimilarityMatrix& s, std::span<const std::uint8_t> phi,
                         std::span<const double> reg, double tau, double mu);

/// Row j of the batch carries an approximate text; `original_text` is the
/// 1 x D embedding of the text it replaced.
struct ApproxTextTerm {
  std::size_t row = 0;
  Tensor original_text;
};

struct ContrastiveLoss {
  Tensor total;  // differentiable scalar
  LossBreakdown breakdown;
};

/// Differentiable batch objective over row-stacked unit-norm embeddings
/// (M x D each; row j of both forms pair j).
ContrastiveLoss contrastive_loss(const Tensor& text_embs, const Tensor& image_embs,
                                 std::span<const ApproxTextTerm> approx, double tau, double mu);

/// r_k = exp(S_k / tau) / sum_i exp(S_i / tau) over one query's negatives.
std::vector<double> relative_penalty(std::span<const double> negatives, double tau);

/// Mean pairwise cosine similarity over distinct pairs of unit-norm rows.
double uniformity_diag(std::span<const double> embeddings, std::size_t dim);

}  // namespace tbps::objective
