#include "tbps/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "tbps/core/errors.hpp"

namespace tbps::harness {

using nlohmann::json;

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ParameterError(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

void TrainConfig::validate() const {
  text.transformer.validate();
  vision.validate();
  if (text.transformer.dim != vision.transformer.dim)
    throw ParameterError("text and vision encoders must share the embedding dimension");
  if (text.max_len < 2) throw ParameterError("text.max_len must be at least 2");
  if (batch_size < 2) throw ParameterError("batch_size must be at least 2");
  if (epochs == 0) throw ParameterError("epochs must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ParameterError("lr must be non-negative");
  if (!(decay > 0.0)) throw ParameterError("decay must be positive");
  if (decay_period == 0) throw ParameterError("decay_period must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ParameterError("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ParameterError("adam_eps must be positive");
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");
  if (!(mu >= 0.0)) throw ParameterError("mu must be non-negative");
  check_probability(lambda, "lambda");
  if (!(sigma > 0.0 && sigma < 1.0)) throw ParameterError("sigma must lie strictly inside (0, 1)");
  check_probability(text_gen_probability, "text_gen_probability");
  check_probability(mixup_probability, "mixup_probability");
  generation.validate();
}

void to_json(json& j, const TrainConfig& c) {
  json text = c.text;
  text.erase("vocab_size");
  j = {{"text", text},
       {"vision", c.vision},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"lr", c.lr},
       {"warmup_epochs", c.warmup_epochs},
       {"decay", c.decay},
       {"decay_period", c.decay_period},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"adam_eps", c.adam_eps},
       {"tau", c.tau},
       {"mu", c.mu},
       {"lambda", c.lambda},
       {"sigma", c.sigma},
       {"text_gen_probability", c.text_gen_probability},
       {"mixup_probability", c.mixup_probability},
       {"text_img_gen", c.text_img_gen},
       {"text_gen", c.text_gen},
       {"mixup", c.mixup},
       {"seed", c.seed},
       {"corpus", c.corpus.string()},
       {"checkpoint", c.checkpoint.string()},
       {"generation", c.generation}};
}

void from_json(const json& j, TrainConfig& c) {
  static const std::set<std::string> known = {
      "text", "vision", "batch_size", "epochs", "lr", "warmup_epochs", "decay", "decay_period",
      "beta1", "beta2", "adam_eps", "tau", "mu", "lambda", "sigma", "text_gen_probability",
      "mixup_probability", "text_img_gen", "text_gen", "mixup", "seed", "corpus", "checkpoint",
      "generation"};
  if (!j.is_object()) throw ParameterError("train config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ParameterError("unknown train config field '" + key + "'");

  TrainConfig d;
  if (j.contains("text")) {
    json t = j["text"];
    if (!t.contains("vocab_size")) t["vocab_size"] = 0;
    d.text = t.get<model::TextEncoderConfig>();
  }
  if (j.contains("vision")) d.vision = j["vision"].get<model::VisionEncoderConfig>();
  d.batch_size = j.value("batch_size", d.batch_size);
  d.epochs = j.value("epochs", d.epochs);
  d.lr = j.value("lr", d.lr);
  d.warmup_epochs = j.value("warmup_epochs", d.warmup_epochs);
  d.decay = j.value("decay", d.decay);
  d.decay_period = j.value("decay_period", d.decay_period);
  d.beta1 = j.value("beta1", d.beta1);
  d.beta2 = j.value("beta2", d.beta2);
  d.adam_eps = j.value("adam_eps", d.adam_eps);
  d.tau = j.value("tau", d.tau);
  d.mu = j.value("mu", d.mu);
  d.lambda = j.value("lambda", d.lambda);
  d.sigma = j.value("sigma", d.sigma);
  d.text_gen_probability = j.value("text_gen_probability", d.text_gen_probability);
  d.mixup_probability = j.value("mixup_probability", d.mixup_probability);
  d.text_img_gen = j.value("text_img_gen", d.text_img_gen);
  d.text_gen = j.value("text_gen", d.text_gen);
  d.mixup = j.value("mixup", d.mixup);
  d.seed = j.value("seed", d.seed);
  d.corpus = j.value("corpus", std::string{});
  d.checkpoint = j.value("checkpoint", std::string{});
  if (j.contains("generation")) d.generation = j["generation"].get<pdg::GenerationSets>();
  c = std::move(d);
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  TrainConfig c;
  try {
    c = j.get<TrainConfig>();
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  c.validate();
  // Relative corpus paths are taken relative to the config file.
  if (!c.corpus.empty() && c.corpus.is_relative()) c.corpus = path.parent_path() / c.corpus;
  return c;
}

double lr_at(std::size_t epoch, const TrainConfig& c) {
  if (c.warmup_epochs > 0 && epoch < c.warmup_epochs)
    return c.lr * static_cast<double>(epoch + 1) / static_cast<double>(c.warmup_epochs);
  const std::size_t steps = (epoch - c.warmup_epochs) / c.decay_period;
  return c.lr * std::pow(c.decay, static_cast<double>(steps));
}

}  // namespace tbps::harness
