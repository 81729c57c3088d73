#include "tbps/harness/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tbps/core/adam.hpp"
#include "tbps/core/errors.hpp"
#include "tbps/core/ops.hpp"
#include "tbps/core/tape.hpp"
#include "tbps/corpus/image.hpp"
#include "tbps/pdg/mixup.hpp"
#include "tbps/pdg/text_ops.hpp"
#include "tbps/text/lexicon.hpp"

namespace tbps::harness {

namespace fs = std::filesystem;

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> identities,
                                                   std::size_t n, Rng& rng) {
  if (n < 2) throw UsageError("batch size must be at least 2");
  std::map<std::size_t, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < identities.size(); ++i) by_id[identities[i]].push_back(i);
  if (by_id.size() < n)
    throw UsageError("batch size " + std::to_string(n) + " exceeds the " +
                     std::to_string(by_id.size()) + " distinct training identities");
  for (auto& [id, records] : by_id) rng.shuffle(records);
  // Round r takes the r-th record of every identity that still has one, so
  // each batch holds distinct identities and every record is visited once.
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t round = 0;; ++round) {
    std::vector<std::size_t> picks;
    for (const auto& [id, records] : by_id)
      if (round < records.size()) picks.push_back(records[round]);
    if (picks.empty()) break;
    rng.shuffle(picks);
    for (std::size_t b = 0; b + n <= picks.size(); b += n)
      batches.emplace_back(picks.begin() + static_cast<std::ptrdiff_t>(b),
                           picks.begin() + static_cast<std::ptrdiff_t>(b + n));
  }
  return batches;
}

const model::ImageData& ImageStore::get(const corpus::PersonRecord& r) {
  auto it = cache_.find(r.image);
  if (it != cache_.end()) return it->second;
  const auto rgb = corpus::read_png(corpus::resolve_image(dir_, r));
  auto data = corpus::to_image_data(corpus::resize_nearest(rgb, height_, width_));
  return cache_.emplace(r.image, std::move(data)).first->second;
}

namespace {

std::vector<std::uint8_t> window_mask(const text::TokenizedText& t, std::size_t len) {
  return {t.attention.begin(), t.attention.begin() + static_cast<std::ptrdiff_t>(len)};
}

bool all_ones(std::span<const std::uint8_t> m) {
  return std::all_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; });
}

/// Token states after the first layer (or the embeddings for a 0-layer model).
Tensor text_first_states(const model::TextEncoder& enc, const text::TokenizedText& t,
                         std::size_t len) {
  const Tensor z0 = enc.embed(std::span(t.ids).first(len));
  if (enc.layers.empty()) return z0;
  const auto mask = window_mask(t, len);
  const auto& tc = enc.config().transformer;
  return model::transformer_layer(z0, enc.layers[0], tc.heads,
                                  all_ones(mask) ? std::span<const std::uint8_t>{} : mask,
                                  tc.ln_eps);
}

Tensor vision_first_states(const model::VisionEncoder& enc, const model::ImageData& image) {
  const Tensor z0 = enc.embed(image);
  if (enc.layers.empty()) return z0;
  const auto& tc = enc.config().transformer;
  return model::transformer_layer(z0, enc.layers[0], tc.heads, {}, tc.ln_eps);
}

}  // namespace

objective::ContrastiveLoss batch_loss(const model::DualEncoder& model,
                                      std::span<const SamplePlan> plans, double tau, double mu,
                                      double lambda) {
  const std::size_t first = model.text.layers.empty() ? 0 : 1;
  std::vector<Tensor> texts, images;
  std::vector<objective::ApproxTextTerm> approx;
  std::vector<Tensor> mixed_texts, mixed_images;

  for (std::size_t j = 0; j < plans.size(); ++j) {
    const SamplePlan& p = plans[j];
    if (!p.image) throw ParameterError("batch row without an image");
    const auto img = model.vision.encode(*p.image);
    texts.push_back(model.text.encode(p.text).embedding);
    images.push_back(img.embedding);
    if (p.original) approx.push_back({j, model.text.encode(*p.original).embedding});

    if (p.mix) {
      // Image: reuse this sample's first-layer states, mix with the partner's.
      const Tensor zi = model.vision.layers.empty() ? img.hidden.states[0] : img.hidden.states[1];
      const Tensor zp = vision_first_states(model.vision, *p.mix->image);
      mixed_images.push_back(
          model.vision.encode_states(pdg::mixup_hidden(zi, zp, lambda), first).embedding);

      // Text: both sequences over a common window; a position stays visible
      // when either text has a token there.
      const std::size_t len = std::max(p.text.active_length(), p.mix->text.active_length());
      const Tensor za = text_first_states(model.text, p.text, len);
      const Tensor zb = text_first_states(model.text, p.mix->text, len);
      std::vector<std::uint8_t> mask(len);
      for (std::size_t k = 0; k < len; ++k) mask[k] = p.text.attention[k] | p.mix->text.attention[k];
      mixed_texts.push_back(model.text
                                .encode_states(pdg::mixup_hidden(za, zb, lambda),
                                               all_ones(mask) ? std::span<const std::uint8_t>{}
                                                              : std::span<const std::uint8_t>(mask),
                                               first)
                                .embedding);
    }
  }
  texts.insert(texts.end(), mixed_texts.begin(), mixed_texts.end());
  images.insert(images.end(), mixed_images.begin(), mixed_images.end());
  return objective::contrastive_loss(ops::concat_rows(texts), ops::concat_rows(images), approx,
                                     tau, mu);
}

text::Vocabulary training_vocabulary(std::span<const corpus::PersonRecord* const> records) {
  std::vector<std::string> captions;
  for (const auto* r : records) captions.push_back(r->caption);
  for (const auto& w : text::SynonymLexicon::builtin().all_words()) captions.push_back(w);
  return text::build_vocab(captions);
}

std::vector<const corpus::PersonRecord*> training_records(const corpus::CorpusManifest& manifest,
                                                          const TrainConfig& config) {
  std::vector<const corpus::PersonRecord*> out;
  for (const auto& r : manifest.records)
    if (r.split == corpus::Split::Train && (config.text_img_gen || !r.generated)) out.push_back(&r);
  if (out.empty()) throw DataError("corpus has no training records");
  return out;
}

namespace {

struct Snapshot {
  std::vector<std::vector<double>> values;
};

Snapshot snapshot(std::span<const NamedTensor> params) {
  Snapshot s;
  for (const auto& p : params) s.values.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return s;
}

void restore(std::span<const NamedTensor> params, const Snapshot& s) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    auto dst = t.mutable_data();
    std::copy(s.values[i].begin(), s.values[i].end(), dst.begin());
  }
}

bool params_finite(std::span<const NamedTensor> params) {
  return std::all_of(params.begin(), params.end(),
                     [](const NamedTensor& p) { return p.tensor.all_finite(); });
}

[[noreturn]] void abort_non_finite(const TrainConfig& config, const TrainedModel& model,
                                   std::size_t epoch, std::size_t step,
                                   const objective::LossBreakdown& bd) {
  std::string where = "epoch " + std::to_string(epoch) + ", step " + std::to_string(step);
  if (!config.checkpoint.empty()) {
    fs::path lastgood = config.checkpoint;
    lastgood += ".lastgood";
    save_model(lastgood, model);
    fs::path dump = config.checkpoint;
    dump += ".nan.json";
    nlohmann::json j = {{"epoch", epoch},      {"step", step},   {"tau", bd.tau},
                        {"mu", bd.mu},         {"total", bd.total}, {"t2i", bd.t2i},
                        {"i2t", bd.i2t},       {"reg", bd.reg},  {"phi", bd.phi},
                        {"lastgood", lastgood.string()}};
    // JSON has no NaN; nlohmann writes null for non-finite numbers.
    std::ofstream(dump) << j.dump(2) << '\n';
    where += "; last good parameters saved to " + lastgood.string();
  }
  throw NumericalError("non-finite loss at " + where);
}

}  // namespace

TrainOutcome train(const TrainConfig& config, const corpus::CorpusManifest& manifest,
                   const fs::path& corpus_dir, const EpochCallback& on_epoch) {
  config.validate();
  const auto records = training_records(manifest, config);
  std::vector<std::size_t> identities;
  for (const auto* r : records) identities.push_back(r->id);

  TrainOutcome out;
  out.model.vocab = training_vocabulary(records);
  nlohmann::json info = config;
  info.erase("corpus");
  info.erase("checkpoint");
  out.model.train_config = info;

  model::TextEncoderConfig text_cfg = config.text;
  text_cfg.vocab_size = out.model.vocab.size();
  out.model.model = model::DualEncoder::init(text_cfg, config.vision, config.seed);
  auto& net = out.model.model;

  ImageStore store(corpus_dir, config.vision.height, config.vision.width);
  std::vector<text::TokenizedText> tokenized;
  for (const auto* r : records) tokenized.push_back(text::encode(r->caption, out.model.vocab, text_cfg.max_len));

  auto params = net.parameters();
  AdamState adam = make_adam_state(params, {config.lr, config.beta1, config.beta2, config.adam_eps});
  Rng rng(derive_seed(config.seed, 100));
  const auto& lexicon = text::SynonymLexicon::builtin();

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.lr = lr_at(epoch, config);
    adam.config.lr = log.lr;
    double loss_sum = 0.0, pair_loss_sum = 0.0;
    for (const auto& batch : make_batches(identities, config.batch_size, rng)) {
      std::vector<SamplePlan> plans;
      for (std::size_t idx : batch) {
        SamplePlan p;
        p.image = &store.get(*records[idx]);
        p.text = tokenized[idx];
        if (config.text_gen && rng.bernoulli(config.text_gen_probability)) {
          const auto op = pdg::random_text_op(rng);
          const auto approx = pdg::approximate_text(records[idx]->caption, op, config.sigma, lexicon, rng);
          p.original = tokenized[idx];
          p.text = text::encode(approx.text, out.model.vocab, text_cfg.max_len);
          ++log.approx_texts;
        }
        if (config.mixup && rng.bernoulli(config.mixup_probability)) {
          // Partner: uniform over training records of another identity.
          std::size_t partner = 0;
          do {
            partner = rng.below(records.size());
          } while (identities[partner] == identities[idx]);
          p.mix = MixPartner{tokenized[partner], &store.get(*records[partner])};
          ++log.mixed_pairs;
        }
        plans.push_back(std::move(p));
      }

      net.zero_grad();
      const auto loss = batch_loss(net, plans, config.tau, config.mu, config.lambda);
      if (!std::isfinite(loss.breakdown.total))
        abort_non_finite(config, out.model, epoch, step, loss.breakdown);
      backward(loss.total);
      const Snapshot before = snapshot(params);
      adam_step(params, adam);
      if (!params_finite(params)) {
        restore(params, before);
        abort_non_finite(config, out.model, epoch, step, loss.breakdown);
      }
      loss_sum += loss.breakdown.total;
      pair_loss_sum += loss.breakdown.total / static_cast<double>(loss.breakdown.t2i.size());
      ++log.batches;
      ++step;
    }
    log.mean_loss = log.batches ? loss_sum / static_cast<double>(log.batches) : 0.0;
    log.mean_pair_loss = log.batches ? pair_loss_sum / static_cast<double>(log.batches) : 0.0;
    out.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  net.zero_grad();
  return out;
}

}  // namespace tbps::harness
