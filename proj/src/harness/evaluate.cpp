#include "tbps/harness/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tbps/core/errors.hpp"
#include "tbps/harness/train.hpp"
#include "tbps/objective/contrastive.hpp"

namespace tbps::harness {

namespace fs = std::filesystem;

SplitView split_view(const corpus::CorpusManifest& manifest, std::optional<corpus::Split> split) {
  SplitView v;
  std::set<std::string> seen;
  for (const auto& r : manifest.records) {
    if (r.generated || (split && r.split != *split)) continue;
    v.queries.push_back(&r);
    if (seen.insert(r.image).second) v.gallery.push_back(&r);
  }
  return v;
}

EmbeddingSet embed_texts(const TrainedModel& m, const std::vector<std::string>& texts) {
  EmbeddingSet s;
  s.dim = m.model.text.config().transformer.dim;
  for (const auto& t : texts) {
    const auto tok = text::encode(t, m.vocab, m.model.text.config().max_len);
    const auto e = m.model.text.encode(tok).embedding;
    s.values.insert(s.values.end(), e.data().begin(), e.data().end());
    s.ids.push_back(0);
  }
  return s;
}

EmbeddingSet embed_texts(const TrainedModel& m, const std::vector<const corpus::PersonRecord*>& rs) {
  std::vector<std::string> texts;
  for (const auto* r : rs) texts.push_back(r->caption);
  EmbeddingSet s = embed_texts(m, texts);
  for (std::size_t i = 0; i < rs.size(); ++i) s.ids[i] = rs[i]->id;
  return s;
}

EmbeddingSet embed_images(const TrainedModel& m, const std::vector<const corpus::PersonRecord*>& rs,
                          const fs::path& corpus_dir) {
  const auto& vc = m.model.vision.config();
  ImageStore store(corpus_dir, vc.height, vc.width);
  EmbeddingSet s;
  s.dim = vc.transformer.dim;
  for (const auto* r : rs) {
    const auto e = m.model.vision.encode(store.get(*r)).embedding;
    s.values.insert(s.values.end(), e.data().begin(), e.data().end());
    s.ids.push_back(r->id);
  }
  return s;
}

PenaltySummary penalty_summary(const EmbeddingSet& queries, const EmbeddingSet& gallery, double tau) {
  PenaltySummary p;
  p.tau = tau;
  p.histogram.assign(10, 0);
  std::size_t counted = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<double> neg;
    const auto qr = queries.row(q);
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      if (gallery.ids[g] == queries.ids[q]) continue;
      const auto gr = gallery.row(g);
      double dot = 0.0;
      for (std::size_t d = 0; d < qr.size(); ++d) dot += qr[d] * gr[d];
      neg.push_back(dot);
    }
    if (neg.empty()) continue;
    const auto r = objective::relative_penalty(neg, tau);
    const double mx = *std::max_element(r.begin(), r.end());
    p.max_mean += mx;
    ++p.histogram[std::min<std::size_t>(9, static_cast<std::size_t>(mx * 10.0))];
    ++counted;
  }
  if (counted) p.max_mean /= static_cast<double>(counted);
  return p;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json topk_json = nlohmann::json::object();
  for (const auto& [k, v] : topk) topk_json["top" + std::to_string(k)] = v;
  return {{"split", split},
          {"queries", queries},
          {"gallery", gallery},
          {"topk", topk_json},
          {"mAP", map},
          {"ranks", ranks},
          {"uniformity", uniformity},
          {"relative_penalty",
           {{"tau", penalty.tau}, {"max_mean", penalty.max_mean}, {"histogram", penalty.histogram}}}};
}

EvalReport evaluate(const TrainedModel& m, const corpus::CorpusManifest& manifest,
                    const fs::path& corpus_dir, corpus::Split split,
                    const std::vector<std::size_t>& ks, double tau) {
  const SplitView view = split_view(manifest, split);
  if (view.queries.empty())
    throw DataError("split '" + std::string(corpus::split_name(split)) + "' has no records");
  const EmbeddingSet q = embed_texts(m, view.queries);
  const EmbeddingSet g = embed_images(m, view.gallery, corpus_dir);
  EvalReport rep;
  rep.split = corpus::split_name(split);
  rep.queries = q.size();
  rep.gallery = g.size();
  for (std::size_t k : ks) rep.topk[k] = topk_accuracy(q, g, k);
  rep.map = mean_average_precision(q, g);
  rep.ranks = first_match_ranks(q, g);
  rep.uniformity = g.size() >= 2 ? objective::uniformity_diag(g.values, g.dim) : 0.0;
  rep.penalty = penalty_summary(q, g, tau);
  return rep;
}

void write_embeddings_csv(const fs::path& path, const EmbeddingSet& set,
                          const std::vector<std::string>& images) {
  if (images.size() != set.size()) throw DimensionError("one image name per embedding required");
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << "id,image";
  for (std::size_t d = 0; d < set.dim; ++d) f << ",e_" << d;
  f << '\n';
  char buf[32];
  for (std::size_t i = 0; i < set.size(); ++i) {
    f << set.ids[i] << ',' << images[i];
    for (double v : set.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      f << ',' << buf;
    }
    f << '\n';
  }
}

EmbeddingSet read_embeddings_csv(const fs::path& path, std::vector<std::string>* images) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw DataError(path.string() + ": empty embedding file");
  EmbeddingSet s;
  s.dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != s.dim + 2)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    try {
      s.ids.push_back(std::stoull(cells[0]));
      if (images) images->push_back(cells[1]);
      for (std::size_t d = 0; d < s.dim; ++d) s.values.push_back(std::stod(cells[d + 2]));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return s;
}

std::vector<RetrievalHit> retrieve(const TrainedModel& m, const corpus::CorpusManifest& manifest,
                                   const fs::path& corpus_dir, std::optional<corpus::Split> split,
                                   const std::string& query, std::size_t topk,
                                   const fs::path& cache) {
  if (text::word_count(query) == 0) throw UsageError("query is empty");
  if (topk == 0) throw UsageError("topk must be at least 1");
  const SplitView view = split_view(manifest, split);
  if (view.gallery.empty()) throw DataError("gallery is empty");

  EmbeddingSet g;
  std::vector<std::string> images;
  bool cached = false;
  if (!cache.empty() && fs::exists(cache)) {
    g = read_embeddings_csv(cache, &images);
    cached = g.dim == m.model.vision.config().transformer.dim && g.size() == view.gallery.size();
  }
  if (!cached) {
    images.clear();
    g = embed_images(m, view.gallery, corpus_dir);
    for (const auto* r : view.gallery) images.push_back(r->image);
    if (!cache.empty()) {
      fs::create_directories(cache.parent_path());
      write_embeddings_csv(cache, g, images);
    }
  }
  const EmbeddingSet q = embed_texts(m, std::vector<std::string>{query});
  const auto order = rank_gallery(q.row(0), g);
  std::vector<RetrievalHit> hits;
  for (std::size_t r = 0; r < std::min(topk, order.size()); ++r) {
    const std::size_t i = order[r];
    double score = 0.0;
    for (std::size_t d = 0; d < g.dim; ++d) score += q.values[d] * g.values[i * g.dim + d];
    hits.push_back({g.ids[i], images[i], score});
  }
  return hits;
}

nlohmann::json diagnostics(const TrainedModel& m, const corpus::CorpusManifest& manifest,
                           const fs::path& corpus_dir, corpus::Split split,
                           const std::vector<double>& taus) {
  const SplitView view = split_view(manifest, split);
  if (view.queries.empty()) throw DataError("split has no records");
  const EmbeddingSet q = embed_texts(m, view.queries);
  const EmbeddingSet g = embed_images(m, view.gallery, corpus_dir);
  const double uniformity = g.size() >= 2 ? objective::uniformity_diag(g.values, g.dim) : 0.0;

  // One (caption, image) pair per identity forms an in-batch-style matrix.
  std::vector<const corpus::PersonRecord*> pairs;
  std::set<std::size_t> ids;
  for (const auto* r : view.queries)
    if (ids.insert(r->id).second) pairs.push_back(r);
  const EmbeddingSet pt = embed_texts(m, pairs);
  const EmbeddingSet pi = embed_images(m, pairs, corpus_dir);
  const auto s = objective::similarity_matrix(pt.values, pi.values, pt.dim);
  const std::vector<std::uint8_t> phi(s.n, 0);
  const std::vector<double> reg(s.n, 0.0);

  nlohmann::json out = nlohmann::json::array();
  for (double tau : taus) {
    const auto p = penalty_summary(q, g, tau);
    const auto bd = objective::total_loss(s, phi, reg, tau, 0.0);
    out.push_back({{"tau", tau},
                   {"r_histogram", p.histogram},
                   {"r_max_mean", p.max_mean},
                   {"uniformity", uniformity},
                   {"loss_terms",
                    {{"pairs", s.n},
                     {"t2i", bd.sum_t2i()},
                     {"i2t", bd.sum_i2t()},
                     {"reg", bd.sum_reg()},
                     {"total", bd.total}}}});
  }
  return out;
}

}  // namespace tbps::harness
