#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tbps::harness {

/// Row-stacked unit-norm embeddings with one identity per row.
struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<double> values;      // rows x dim
  std::vector<std::size_t> ids;

  std::size_t size() const { return ids.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span(values).subspan(i * dim, dim);
  }
};

/// Gallery indices ordered by descending dot product with `query`; equal
/// scores keep gallery order.
std::vector<std::size_t> rank_gallery(std::span<const double> query, const EmbeddingSet& gallery);

/// Percentage of queries with a same-identity item among their top k.
double topk_accuracy(const EmbeddingSet& queries, const EmbeddingSet& gallery, std::size_t k);

/// Mean over queries of average precision over all same-identity gallery
/// items, as a percentage. Throws DataError when a query identity has no
/// gallery item.
double mean_average_precision(const EmbeddingSet& queries, const EmbeddingSet& gallery);

/// 1-based rank of the first same-identity item per query (0 if none).
std::vector<std::size_t> first_match_ranks(const EmbeddingSet& queries,
                                           const EmbeddingSet& gallery);

}  // namespace tbps::harness
