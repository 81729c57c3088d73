#include "tbps/harness/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "tbps/core/errors.hpp"

namespace tbps::harness {
namespace {

void check_sets(const EmbeddingSet& queries, const EmbeddingSet& gallery) {
  if (gallery.size() == 0) throw DataError("gallery is empty");
  if (queries.dim != gallery.dim) throw DimensionError("query and gallery dimensions differ");
  if (queries.values.size() != queries.size() * queries.dim ||
      gallery.values.size() != gallery.size() * gallery.dim)
    throw DimensionError("embedding buffer does not match its identity list");
}

}  // namespace

std::vector<std::size_t> rank_gallery(std::span<const double> query, const EmbeddingSet& gallery) {
  std::vector<double> scores(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    const auto row = gallery.row(g);
    scores[g] = std::inner_product(query.begin(), query.end(), row.begin(), 0.0);
  }
  std::vector<std::size_t> order(gallery.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<std::size_t> first_match_ranks(const EmbeddingSet& queries,
                                           const EmbeddingSet& gallery) {
  check_sets(queries, gallery);
  std::vector<std::size_t> ranks(queries.size(), 0);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto order = rank_gallery(queries.row(q), gallery);
    for (std::size_t r = 0; r < order.size(); ++r)
      if (gallery.ids[order[r]] == queries.ids[q]) {
        ranks[q] = r + 1;
        break;
      }
  }
  return ranks;
}

double topk_accuracy(const EmbeddingSet& queries, const EmbeddingSet& gallery, std::size_t k) {
  if (k == 0) throw ParameterError("k must be at least 1");
  const auto ranks = first_match_ranks(queries, gallery);
  if (ranks.empty()) return 0.0;
  const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                  [k](std::size_t r) { return r != 0 && r <= k; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_average_precision(const EmbeddingSet& queries, const EmbeddingSet& gallery) {
  check_sets(queries, gallery);
  if (queries.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto order = rank_gallery(queries.row(q), gallery);
    std::size_t hits = 0;
    double precision_sum = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r)
      if (gallery.ids[order[r]] == queries.ids[q]) {
        ++hits;
        precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    if (hits == 0)
      throw DataError("query " + std::to_string(q) + " (identity " +
                      std::to_string(queries.ids[q]) + ") has no match in the gallery");
    total += precision_sum / static_cast<double>(hits);
  }
  return 100.0 * total / static_cast<double>(queries.size());
}

}  // namespace tbps::harness
