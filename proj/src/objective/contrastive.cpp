#include "tbps/objective/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tbps/core/errors.hpp"
#include "tbps/core/ops.hpp"

namespace tbps::objective {
namespace {

void check_tau(double tau) {
  if (!(tau > 0.0)) throw ParameterError("temperature must be positive, got " + std::to_string(tau));
}

double log_sum_exp(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (double v : x) total += std::exp(v - mx);
  return mx + std::log(total);
}

double vec_sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

double similarity(std::span<const double> text, std::span<const double> image) {
  if (text.size() != image.size())
    throw DimensionError("similarity: vectors have different lengths");
  double dot = 0.0, nt = 0.0, ni = 0.0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    dot += text[i] * image[i];
    nt += text[i] * text[i];
    ni += image[i] * image[i];
  }
  if (nt == 0.0 || ni == 0.0) throw ParameterError("similarity: zero vector");
  return std::clamp(dot / (std::sqrt(nt) * std::sqrt(ni)), -1.0, 1.0);
}

SimilarityMatrix SimilarityMatrix::from_rows(std::size_t n, std::vector<double> values) {
  if (values.size() != n * n) throw DimensionError("similarity matrix must be square");
  return {n, std::move(values)};
}

SimilarityMatrix similarity_matrix(std::span<const double> text_embs,
                                   std::span<const double> image_embs, std::size_t dim) {
  if (dim == 0 || text_embs.size() % dim != 0 || text_embs.size() != image_embs.size())
    throw DimensionError("similarity_matrix: embedding buffers do not match");
  const std::size_t n = text_embs.size() / dim;
  SimilarityMatrix s{n, std::vector<double>(n * n)};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += text_embs[j * dim + d] * image_embs[k * dim + d];
      s.values[j * n + k] = dot;
    }
  return s;
}

double loss_t2i(const SimilarityMatrix& s, std::size_t j, double tau) {
  check_tau(tau);
  if (j >= s.n) throw DimensionError("loss_t2i: pair index out of range");
  std::vector<double> logits(s.n);
  for (std::size_t k = 0; k < s.n; ++k) logits[k] = s.at(j, k) / tau;
  return log_sum_exp(logits) - logits[j];
}

double loss_i2t(const SimilarityMatrix& s, std::size_t j, double tau) {
  check_tau(tau);
  if (j >= s.n) throw DimensionError("loss_i2t: pair index out of range");
  std::vector<double> logits(s.n);
  for (std::size_t k = 0; k < s.n; ++k) logits[k] = s.at(k, j) / tau;
  return log_sum_exp(logits) - logits[j];
}

double loss_reg(double dot_approx, double dot_orig) {
  if (dot_orig <= kRegDenominatorFloor) return 0.0;
  return std::max(0.0, dot_approx / dot_orig - 1.0);
}

double LossBreakdown::sum_t2i() const { return vec_sum(t2i); }
double LossBreakdown::sum_i2t() const { return vec_sum(i2t); }
double LossBreakdown::sum_reg() const { return vec_sum(reg); }

LossBreakdown total_loss(const SimilarityMatrix& s, std::span<const std::uint8_t> phi,
                         std::span<const double> reg, double tau, double mu) {
  check_tau(tau);
  if (phi.size() != s.n || reg.size() != s.n)
    throw DimensionError("total_loss: indicator/regulariser length differs from batch size");
  LossBreakdown out;
  out.tau = tau;
  out.mu = mu;
  out.phi.assign(phi.begin(), phi.end());
  for (std::size_t j = 0; j < s.n; ++j) {
    if (phi[j] > 1) throw ParameterError("total_loss: indicator must be 0 or 1");
    out.t2i.push_back(loss_t2i(s, j, tau));
    out.i2t.push_back(loss_i2t(s, j, tau));
    out.reg.push_back(phi[j] ? reg[j] : 0.0);
    out.total += out.t2i.back() + out.i2t.back() + mu * out.reg.back();
  }
  return out;
}

ContrastiveLoss contrastive_loss(const Tensor& text_embs, const Tensor& image_embs,
                                 std::span<const ApproxTextTerm> approx, double tau, double mu) {
  using namespace ops;
  check_tau(tau);
  if (text_embs.shape() != image_embs.shape())
    throw DimensionError("contrastive_loss: text " + shape_str(text_embs.shape()) +
                         " and image " + shape_str(image_embs.shape()) + " batches differ");
  const std::size_t m = text_embs.rows();
  const Tensor sim = matmul_nt(text_embs, image_embs);
  const Tensor logits = scale(sim, 1.0 / tau);
  const Tensor t2i = scale(diagonal(log_softmax_rows(logits)), -1.0);
  const Tensor i2t = scale(diagonal(log_softmax_rows(transpose(logits))), -1.0);

  ContrastiveLoss out;
  auto& bd = out.breakdown;
  bd.tau = tau;
  bd.mu = mu;
  bd.t2i.assign(t2i.data().begin(), t2i.data().end());
  bd.i2t.assign(i2t.data().begin(), i2t.data().end());
  bd.reg.assign(m, 0.0);
  bd.phi.assign(m, 0);

  Tensor total = add(sum(t2i), sum(i2t));
  for (const auto& term : approx) {
    if (term.row >= m) throw DimensionError("contrastive_loss: approximate-text row out of range");
    bd.phi[term.row] = 1;
    const Tensor image_row = slice_rows(image_embs, term.row, 1);
    const Tensor orig_dot = sum(mul(image_row, term.original_text));
    if (orig_dot.item() <= kRegDenominatorFloor) continue;
    const std::size_t diag_index = term.row * m + term.row;
    const Tensor approx_dot = take(sim, std::span(&diag_index, 1));
    const Tensor reg = relu(add_scalar(div(approx_dot, orig_dot), -1.0));
    bd.reg[term.row] = reg.item();
    if (mu != 0.0) total = add(total, scale(reg, mu));
  }
  bd.total = total.item();
  out.total = total;
  return out;
}

std::vector<double> relative_penalty(std::span<const double> negatives, double tau) {
  check_tau(tau);
  if (negatives.empty()) throw DimensionError("relative_penalty: no negatives");
  std::vector<double> r(negatives.size());
  const double mx = *std::max_element(negatives.begin(), negatives.end());
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = std::exp((negatives[i] - mx) / tau);
    total += r[i];
  }
  for (auto& v : r) v /= total;
  return r;
}

double uniformity_diag(std::span<const double> embeddings, std::size_t dim) {
  if (dim == 0 || embeddings.size() % dim != 0)
    throw DimensionError("uniformity_diag: buffer is not a whole number of rows");
  const std::size_t n = embeddings.size() / dim;
  if (n < 2) throw DimensionError("uniformity_diag: need at least two embeddings");
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += embeddings[a * dim + d] * embeddings[b * dim + d];
      total += dot;
    }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

}  // namespace tbps::objective
