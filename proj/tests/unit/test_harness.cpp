#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "tbps/core/errors.hpp"
#include "tbps/corpus/manifest.hpp"
#include "tbps/harness/config.hpp"
#include "tbps/harness/evaluate.hpp"
#include "tbps/harness/metrics.hpp"
#include "tbps/harness/train.hpp"
#include "test_support.hpp"

using namespace tbps;
using namespace tbps::harness;

namespace {

EmbeddingSet make_set(std::size_t dim, std::vector<double> values, std::vector<std::size_t> ids) {
  EmbeddingSet s;
  s.dim = dim;
  s.values = std::move(values);
  s.ids = std::move(ids);
  return s;
}

EmbeddingSet random_set(std::size_t n, std::size_t dim, std::size_t identities, Rng& rng) {
  EmbeddingSet s;
  s.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    std::vector<double> row(dim);
    for (auto& v : row) {
      v = rng.normal();
      norm += v * v;
    }
    for (auto& v : row) s.values.push_back(v / std::sqrt(norm));
    s.ids.push_back(rng.below(identities));
  }
  return s;
}

// Brute force reference: count strictly better-scoring items.
std::vector<std::size_t> brute_ranks(std::span<const double> q, const EmbeddingSet& g) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < g.dim; ++d) s += q[d] * g.row(i)[d];
    scored.push_back({-s, i});
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> order;
  for (auto& [_, i] : scored) order.push_back(i);
  return order;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.text.transformer = {1, 16, 2, 2};
  c.vision.transformer = {1, 16, 2, 2};
  c.vision.height = 32;
  c.vision.width = 16;
  c.vision.patch = 8;
  c.vision.stride = 8;
  c.batch_size = 4;
  c.epochs = 2;
  c.warmup_epochs = 1;
  c.tau = 0.1;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("make_batches: 48 identities, N=16 gives 3 batches") {
  std::vector<std::size_t> ids(48);
  for (std::size_t i = 0; i < 48; ++i) ids[i] = i;
  Rng rng(1);
  const auto batches = make_batches(ids, 16, rng);
  CHECK(batches.size() == 3);
  Rng again(1);
  CHECK(make_batches(ids, 16, again) == batches);
}

TEST_CASE("make_batches visits every record once with distinct identities per batch") {
  std::vector<std::size_t> ids;
  for (std::size_t id = 0; id < 48; ++id)
    for (int k = 0; k < 4; ++k) ids.push_back(id);
  Rng rng(1);
  const auto batches = make_batches(ids, 16, rng);
  CHECK(batches.size() == 12);
  std::set<std::size_t> records;
  for (const auto& b : batches) {
    CHECK(b.size() == 16);
    std::set<std::size_t> seen;
    for (auto r : b) {
      CHECK(seen.insert(ids[r]).second);
      CHECK(records.insert(r).second);
    }
  }
  CHECK(records.size() == ids.size());
  // 20 identities: 4 of them are left over each round.
  CHECK(make_batches(std::vector<std::size_t>(ids.begin(), ids.begin() + 4 * 20), 16, rng).size() == 4);
  CHECK_THROWS_AS(make_batches(std::vector<std::size_t>(ids.begin(), ids.begin() + 4 * 10), 16, rng),
                  UsageError);
}

TEST_CASE("learning rate schedule") {
  TrainConfig c;
  c.lr = 1e-3;
  c.warmup_epochs = 3;
  c.decay = 0.1;
  c.decay_period = 10;
  CHECK(lr_at(0, c) == doctest::Approx(1e-3 / 3));
  CHECK(lr_at(2, c) == doctest::Approx(1e-3));
  CHECK(lr_at(3, c) == doctest::Approx(1e-3));
  CHECK(lr_at(12, c) == doctest::Approx(1e-3));
  CHECK(lr_at(13, c) == doctest::Approx(1e-4));
  CHECK(lr_at(23, c) == doctest::Approx(1e-5));
}

TEST_CASE("metrics on a hand-built gallery") {
  // Scores 0.9, 0.8, 0.7, 0.6 with identities [B, A, C, A] for query A.
  const auto g = make_set(2, {0.9, 0, 0.8, 0, 0.7, 0, 0.6, 0}, {1, 0, 2, 0});
  const auto q = make_set(2, {1, 0}, {0});
  CHECK(topk_accuracy(q, g, 1) == 0.0);
  CHECK(topk_accuracy(q, g, 2) == 100.0);
  CHECK(first_match_ranks(q, g)[0] == 2);
  CHECK(mean_average_precision(q, g) == doctest::Approx(100.0 * (0.5 + 0.5) / 2));
  // AP = (1/1 + 2/3) / 2 for relevant items at ranks 1 and 3.
  const auto g2 = make_set(1, {0.9, 0.8, 0.7}, {0, 1, 0});
  const auto q2 = make_set(1, {1}, {0});
  CHECK(mean_average_precision(q2, g2) == doctest::Approx(100.0 * 5.0 / 6.0));
  const auto q3 = make_set(1, {1}, {7});
  CHECK_THROWS_AS(mean_average_precision(q3, g2), DataError);
}

TEST_CASE("ties keep gallery order") {
  const auto g = make_set(1, {0.5, 0.5, 0.5}, {2, 0, 1});
  const auto order = rank_gallery(std::vector<double>{1.0}, g);
  CHECK(order == std::vector<std::size_t>{0, 1, 2});
  const auto q = make_set(1, {1}, {1});
  CHECK(first_match_ranks(q, g)[0] == 3);
}

TEST_CASE("metrics agree with brute force on random galleries") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_set(30, 5, 6, rng);
    auto q = random_set(10, 5, 6, rng);
    for (auto& id : q.ids) id = g.ids[rng.below(g.size())];
    double top1 = 0, top5 = 0, map = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto order = brute_ranks(q.row(i), g);
      CHECK(order == rank_gallery(q.row(i), g));
      std::size_t hits = 0;
      double ap = 0.0;
      std::size_t first = 0;
      for (std::size_t r = 0; r < order.size(); ++r)
        if (g.ids[order[r]] == q.ids[i]) {
          ++hits;
          ap += static_cast<double>(hits) / static_cast<double>(r + 1);
          if (!first) first = r + 1;
        }
      top1 += first <= 1;
      top5 += first <= 5;
      map += ap / static_cast<double>(hits);
    }
    CHECK(topk_accuracy(q, g, 1) == doctest::Approx(100.0 * top1 / 10));
    CHECK(topk_accuracy(q, g, 5) == doctest::Approx(100.0 * top5 / 10));
    CHECK(mean_average_precision(q, g) == doctest::Approx(100.0 * map / 10));
    CHECK(topk_accuracy(q, g, 30) == 100.0);
  }
}

TEST_CASE("random embeddings score near chance") {
  Rng rng(3);
  double total = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_set(100, 16, 100, rng);
    auto q = random_set(100, 16, 100, rng);
    for (std::size_t i = 0; i < 100; ++i) q.ids[i] = g.ids[i];
    total += topk_accuracy(q, g, 1);
  }
  CHECK(total / 20 < 5.0);
}

TEST_CASE("train config json round trip and validation") {
  TrainConfig c;
  c.tau = 0.02;
  c.mixup = false;
  nlohmann::json j = c;
  const auto back = j.get<TrainConfig>();
  CHECK(back.tau == 0.02);
  CHECK_FALSE(back.mixup);
  j["bogus"] = 1;
  CHECK_THROWS(j.get<TrainConfig>());
  c.tau = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = TrainConfig{};
  c.sigma = 1.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = TrainConfig{};
  c.batch_size = 1;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("training is deterministic, lr zero keeps parameters, eval and retrieval behave") {
  tbps::testing::TempDir dir("train");
  corpus::CorpusSpec spec;
  spec.seed = 4;
  spec.identities = 16;
  spec.images_per_identity = 2;
  spec.render = {32, 16};
  const auto m = corpus::generate_corpus(spec, dir.path());
  auto cfg = tiny_config();

  const auto a = train(cfg, m, dir.path());
  const auto b = train(cfg, m, dir.path());
  save_model(dir.path() / "a.ckpt", a.model);
  save_model(dir.path() / "b.ckpt", b.model);
  CHECK(checkpoint_hash(dir.path() / "a.ckpt") == checkpoint_hash(dir.path() / "b.ckpt"));
  REQUIRE(a.log.size() == 2);
  CHECK(a.log[0].batches == 12);
  for (const auto& e : a.log) CHECK(std::isfinite(e.mean_loss));

  // Checkpoints hold float32, so compare two evaluations of the stored model.
  const auto ra = evaluate(load_model(dir.path() / "a.ckpt"), m, dir.path(), corpus::Split::Test);
  const auto rb = evaluate(load_model(dir.path() / "b.ckpt"), m, dir.path(), corpus::Split::Test);
  CHECK(ra.to_json().dump() == rb.to_json().dump());
  CHECK(ra.queries == 2 * 2 * 2);
  CHECK(ra.gallery == 2 * 2);
  CHECK(ra.topk.at(10) == 100.0);

  cfg.lr = 0.0;
  cfg.epochs = 1;
  const auto init = train(cfg, m, dir.path());
  cfg.epochs = 3;
  const auto frozen = train(cfg, m, dir.path());
  const auto p0 = init.model.model.parameters(), p1 = frozen.model.model.parameters();
  REQUIRE(p0.size() == p1.size());
  for (std::size_t i = 0; i < p0.size(); ++i) {
    const auto d0 = p0[i].tensor.data(), d1 = p1[i].tensor.data();
    CHECK(std::equal(d0.begin(), d0.end(), d1.begin(), d1.end()));
  }

  const auto hits = retrieve(a.model, m, dir.path(), corpus::Split::Test, "a person wearing a red shirt", 100,
                             dir.path() / "cache.csv");
  CHECK(hits.size() == 4);
  for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score >= hits[i].score);
  CHECK(std::filesystem::exists(dir.path() / "cache.csv"));
  const auto cached = retrieve(a.model, m, dir.path(), corpus::Split::Test, "a person wearing a red shirt", 2,
                               dir.path() / "cache.csv");
  REQUIRE(cached.size() == 2);
  CHECK(cached[0].score == hits[0].score);
  CHECK(cached[0].image == hits[0].image);

  CHECK_THROWS_AS(load_model(dir.path() / "cache.csv"), DataError);
}

TEST_CASE("embeddings csv round trips exactly") {
  tbps::testing::TempDir dir("csv");
  Rng rng(8);
  const auto s = random_set(5, 3, 3, rng);
  const std::vector<std::string> images = {"a.png", "b.png", "c.png", "d.png", "e.png"};
  write_embeddings_csv(dir.path() / "e.csv", s, images);
  std::vector<std::string> back_images;
  const auto back = read_embeddings_csv(dir.path() / "e.csv", &back_images);
  CHECK(back.values == s.values);
  CHECK(back.ids == s.ids);
  CHECK(back_images == images);
}

TEST_CASE("non-finite loss aborts with a last-good checkpoint") {
  tbps::testing::TempDir dir("nan");
  corpus::CorpusSpec spec;
  spec.seed = 5;
  spec.identities = 16;
  spec.images_per_identity = 1;
  spec.render = {32, 16};
  const auto m = corpus::generate_corpus(spec, dir.path());
  auto cfg = tiny_config();
  cfg.tau = 1e-320;  // similarities divided by tau overflow
  cfg.warmup_epochs = 0;
  cfg.epochs = 3;
  cfg.checkpoint = dir.path() / "model.ckpt";
  CHECK_THROWS_AS(train(cfg, m, dir.path()), NumericalError);
  CHECK(std::filesystem::exists(dir.path() / "model.ckpt.lastgood"));
  CHECK(std::filesystem::exists(dir.path() / "model.ckpt.nan.json"));
  const auto last = load_model(dir.path() / "model.ckpt.lastgood");
  for (const auto& p : last.model.parameters()) CHECK(p.tensor.all_finite());
}

TEST_CASE("desk config: mean per-pair loss strictly decreases over the first 5 epochs") {
  tbps::testing::TempDir dir("desk");
  corpus::CorpusSpec spec;
  spec.seed = 1;
  const auto m = corpus::generate_corpus(spec, dir.path());
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.epochs = 5;
  const auto out = train(cfg, m, dir.path());
  REQUIRE(out.log.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) {
    INFO("epoch " << e << ": " << out.log[e - 1].mean_pair_loss << " -> " << out.log[e].mean_pair_loss);
    CHECK(out.log[e].mean_pair_loss < out.log[e - 1].mean_pair_loss);
  }
}
