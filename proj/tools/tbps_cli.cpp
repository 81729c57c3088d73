// Command-line front end: corpus generation, PDG, training, evaluation.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tbps/core/errors.hpp"
#include "tbps/corpus/manifest.hpp"
#include "tbps/harness/config.hpp"
#include "tbps/harness/evaluate.hpp"
#include "tbps/harness/train.hpp"
#include "tbps/pdg/generation.hpp"

namespace fs = std::filesystem;
using namespace tbps;

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw UsageError(std::string("bad ") + what + " list: " + s);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

std::optional<corpus::Split> parse_split_arg(const std::string& s) {
  if (s == "all") return std::nullopt;
  try {
    return corpus::parse_split(s);
  } catch (const DataError&) {
    throw UsageError("split must be train, val, test or all");
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-encoder text-based person search toolkit"};
  app.require_subcommand(1);

  // gen-corpus
  corpus::CorpusSpec spec;
  std::string corpus_out, split_fractions = "0.75,0.125,0.125";
  auto* gen = app.add_subcommand("gen-corpus", "Render a synthetic person corpus");
  gen->add_option("--seed", spec.seed, "Generation seed");
  gen->add_option("--identities", spec.identities, "Number of identities");
  gen->add_option("--images-per-id", spec.images_per_identity, "Images per identity");
  gen->add_option("--captions-per-image", spec.captions_per_image, "Captions per image");
  gen->add_option("--split", split_fractions, "train,val,test fractions");
  gen->add_option("--height", spec.render.height, "Image height");
  gen->add_option("--width", spec.render.width, "Image width");
  gen->add_option("--out", corpus_out, "Output directory")->required();

  // pdg-generate
  std::string pdg_corpus, pdg_config;
  std::size_t per_id = 1;
  std::uint64_t pdg_seed = 0;
  auto* pdg_cmd = app.add_subcommand("pdg-generate", "Append controlled text-image pairs");
  pdg_cmd->add_option("--corpus", pdg_corpus, "Corpus directory")->required();
  pdg_cmd->add_option("--per-id", per_id, "Generated pairs per training identity");
  pdg_cmd->add_option("--seed", pdg_seed, "Generation seed");
  pdg_cmd->add_option("--config", pdg_config, "Train config supplying the clothes/colour sets");

  // train
  std::string train_config, train_out, train_corpus;
  std::optional<std::uint64_t> train_seed;
  auto* train_cmd = app.add_subcommand("train", "Train the dual encoder");
  train_cmd->add_option("--config", train_config, "Train config JSON")->required();
  train_cmd->add_option("--out", train_out, "Checkpoint path (overrides the config)");
  train_cmd->add_option("--corpus", train_corpus, "Corpus directory (overrides the config)");
  train_cmd->add_option("--seed", train_seed, "Seed (overrides the config)");

  // eval
  std::string eval_ckpt, eval_corpus, eval_split = "test", eval_k = "1,5,10", eval_json;
  double eval_tau = 0.005;
  auto* eval_cmd = app.add_subcommand("eval", "Top-k accuracy and mAP on a split");
  eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--corpus", eval_corpus, "Corpus directory")->required();
  eval_cmd->add_option("--split", eval_split, "train, val or test");
  eval_cmd->add_option("--k", eval_k, "Comma-separated k values");
  eval_cmd->add_option("--tau", eval_tau, "Temperature for the relative-penalty summary");
  eval_cmd->add_option("--json", eval_json, "Write the report here");

  // retrieve
  std::string ret_ckpt, ret_corpus, ret_query, ret_split = "test";
  std::size_t ret_topk = 10;
  bool ret_no_cache = false;
  auto* ret_cmd = app.add_subcommand("retrieve", "Rank gallery images for a text query");
  ret_cmd->add_option("--ckpt", ret_ckpt, "Checkpoint")->required();
  ret_cmd->add_option("--corpus", ret_corpus, "Corpus directory")->required();
  ret_cmd->add_option("--query", ret_query, "Query text")->required();
  ret_cmd->add_option("--topk", ret_topk, "Number of results");
  ret_cmd->add_option("--split", ret_split, "Gallery split or all");
  ret_cmd->add_flag("--no-cache", ret_no_cache, "Do not read or write the gallery cache");

  // diag
  std::string diag_ckpt, diag_corpus, diag_taus = "0.2,0.07,0.005", diag_json, diag_split = "test";
  auto* diag_cmd = app.add_subcommand("diag", "Relative-penalty and uniformity diagnostics");
  diag_cmd->add_option("--ckpt", diag_ckpt, "Checkpoint")->required();
  diag_cmd->add_option("--corpus", diag_corpus, "Corpus directory")->required();
  diag_cmd->add_option("--taus", diag_taus, "Comma-separated temperatures");
  diag_cmd->add_option("--split", diag_split, "Split");
  diag_cmd->add_option("--json", diag_json, "Write diagnostics here");

  // export-embeddings
  std::string exp_ckpt, exp_corpus, exp_split = "test", exp_out;
  auto* exp_cmd = app.add_subcommand("export-embeddings", "Write gallery embeddings as CSV");
  exp_cmd->add_option("--ckpt", exp_ckpt, "Checkpoint")->required();
  exp_cmd->add_option("--corpus", exp_corpus, "Corpus directory")->required();
  exp_cmd->add_option("--split", exp_split, "Split or all");
  exp_cmd->add_option("--out", exp_out, "CSV path")->required();

  // ingest
  std::string ing_file, ing_root, ing_out;
  auto* ing_cmd = app.add_subcommand("ingest", "Convert external annotations to a manifest");
  ing_cmd->add_option("--annotations", ing_file, "JSON or JSON Lines annotation file")->required();
  ing_cmd->add_option("--image-root", ing_root, "Directory image paths are relative to");
  ing_cmd->add_option("--out", ing_out, "Output corpus directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const auto f = parse_list<double>(split_fractions, "split");
      if (f.size() != 3) throw UsageError("--split needs three fractions");
      spec.train_fraction = f[0];
      spec.val_fraction = f[1];
      spec.test_fraction = f[2];
      try {
        spec.validate();
      } catch (const ParameterError& e) {
        throw UsageError(e.what());
      }
      const auto m = corpus::generate_corpus(spec, corpus_out);
      const auto c = corpus::split_counts(spec);
      std::printf("wrote %zu records (%zu/%zu/%zu identities) to %s\n", m.records.size(), c.train,
                  c.val, c.test, corpus_out.c_str());
    } else if (*pdg_cmd) {
      auto m = corpus::load_manifest(pdg_corpus);
      pdg::GenerationSets sets = pdg::GenerationSets::defaults();
      if (!pdg_config.empty()) sets = harness::load_train_config(pdg_config).generation;
      const pdg::RendererSynthesizer synth(m.render);
      const auto stats = pdg::pdg_generate(m, pdg_corpus, per_id, pdg_seed, sets, synth);
      corpus::save_manifest(pdg_corpus, m);
      std::printf("generated %zu pairs from %zu identities (%zu without an editable phrase)\n",
                  stats.generated, stats.sources, stats.skipped);
      if (stats.without_attributes)
        std::fprintf(stderr,
                     "note: %zu training records have no attributes (ingested data) and were skipped; "
                     "the renderer can only redraw synthetic people, and the phrase chunker is exact "
                     "only on the synthetic caption grammar\n",
                     stats.without_attributes);
    } else if (*train_cmd) {
      auto cfg = harness::load_train_config(train_config);
      if (!train_out.empty()) cfg.checkpoint = train_out;
      if (!train_corpus.empty()) cfg.corpus = train_corpus;
      if (train_seed) cfg.seed = *train_seed;
      if (cfg.corpus.empty()) throw UsageError("no corpus given (config field or --corpus)");
      if (cfg.checkpoint.empty()) throw UsageError("no checkpoint path given (--out)");
      const auto m = corpus::load_manifest(cfg.corpus);
      fs::path log_path = cfg.checkpoint;
      log_path += ".log.jsonl";
      std::ofstream log(log_path);
      const auto outcome = harness::train(cfg, m, cfg.corpus, [&](const harness::EpochLog& e) {
        const nlohmann::json j = {{"epoch", e.epoch},         {"lr", e.lr},
                                  {"mean_loss", e.mean_loss}, {"mean_pair_loss", e.mean_pair_loss},
                                  {"batches", e.batches},
                                  {"approx_texts", e.approx_texts}, {"mixed_pairs", e.mixed_pairs}};
        log << j.dump() << '\n';
        log.flush();
        std::printf("epoch %3zu  lr %.3g  loss %.5f  per pair %.5f\n", e.epoch, e.lr, e.mean_loss,
                    e.mean_pair_loss);
        std::fflush(stdout);
      });
      harness::save_model(cfg.checkpoint, outcome.model);
      std::printf("saved %s\n", cfg.checkpoint.string().c_str());
    } else if (*eval_cmd) {
      const auto model = harness::load_model(eval_ckpt);
      const auto m = corpus::load_manifest(eval_corpus);
      const auto split = parse_split_arg(eval_split);
      if (!split) throw UsageError("eval needs a single split");
      const auto ks = parse_list<std::size_t>(eval_k, "k");
      for (auto k : ks)
        if (k == 0) throw UsageError("k must be at least 1");
      const auto rep = harness::evaluate(model, m, eval_corpus, *split, ks, eval_tau);
      for (const auto& [k, v] : rep.topk) std::printf("top%-3zu %6.2f\n", k, v);
      std::printf("mAP    %6.2f\n", rep.map);
      if (!eval_json.empty()) write_json(eval_json, rep.to_json());
    } else if (*ret_cmd) {
      const auto model = harness::load_model(ret_ckpt);
      const auto m = corpus::load_manifest(ret_corpus);
      fs::path cache;
      if (!ret_no_cache)
        cache = fs::path(ret_corpus) / "cache" /
                ("gallery-" + harness::checkpoint_hash(ret_ckpt) + "-" + ret_split + ".csv");
      const auto hits =
          harness::retrieve(model, m, ret_corpus, parse_split_arg(ret_split), ret_query, ret_topk, cache);
      for (std::size_t i = 0; i < hits.size(); ++i)
        std::printf("%3zu  %.6f  id=%zu  %s\n", i + 1, hits[i].score, hits[i].id,
                    hits[i].image.c_str());
    } else if (*diag_cmd) {
      const auto model = harness::load_model(diag_ckpt);
      const auto m = corpus::load_manifest(diag_corpus);
      const auto split = parse_split_arg(diag_split);
      if (!split) throw UsageError("diag needs a single split");
      const auto taus = parse_list<double>(diag_taus, "tau");
      for (double t : taus)
        if (!(t > 0.0)) throw UsageError("temperatures must be positive");
      const auto j = harness::diagnostics(model, m, diag_corpus, *split, taus);
      if (diag_json.empty())
        std::cout << j.dump(2) << '\n';
      else
        write_json(diag_json, j);
    } else if (*exp_cmd) {
      const auto model = harness::load_model(exp_ckpt);
      const auto m = corpus::load_manifest(exp_corpus);
      const auto view = harness::split_view(m, parse_split_arg(exp_split));
      const auto g = harness::embed_images(model, view.gallery, exp_corpus);
      std::vector<std::string> images;
      for (const auto* r : view.gallery) images.push_back(r->image);
      harness::write_embeddings_csv(exp_out, g, images);
      std::printf("wrote %zu embeddings to %s\n", g.size(), exp_out.c_str());
    } else if (*ing_cmd) {
      const auto m = corpus::ingest_external(ing_file, ing_root);
      corpus::save_manifest(ing_out, m);
      std::printf("ingested %zu records into %s\n", m.records.size(), ing_out.c_str());
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const ParameterError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  }
  return 0;
}
