#include <doctest.h>

#include <algorithm>
#include <set>

#include "tbps/core/errors.hpp"
#include "tbps/core/ops.hpp"
#include "tbps/corpus/caption.hpp"
#include "tbps/corpus/manifest.hpp"
#include "tbps/pdg/generation.hpp"
#include "tbps/pdg/mixup.hpp"
#include "tbps/pdg/text_ops.hpp"
#include "tbps/text/tokenizer.hpp"
#include "test_support.hpp"

using namespace tbps;
using namespace tbps::pdg;

namespace {

const std::string kCaption = "a man wearing a red shirt and blue pants walks with a black bag";

// Is `sub` a subsequence of `full`?
bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& full) {
  std::size_t i = 0;
  for (const auto& w : full)
    if (i < sub.size() && sub[i] == w) ++i;
  return i == sub.size();
}

}  // namespace

TEST_CASE("altered word count") {
  CHECK(altered_word_count(15, 0.2) == 3);
  CHECK(altered_word_count(4, 0.2) == 0);
  CHECK(altered_word_count(5, 0.2) == 1);
  CHECK(altered_word_count(10, 0.5) == 5);
  CHECK_THROWS_AS(altered_word_count(10, 0.0), ParameterError);
  CHECK_THROWS_AS(altered_word_count(10, 1.0), ParameterError);
}

TEST_CASE("text ops on the reference caption") {
  const auto& lex = text::SynonymLexicon::builtin();
  const auto original = text::words_of(kCaption);
  REQUIRE(original.size() == 14);
  Rng rng(1);

  const auto sdel = approximate_text(kCaption, TextOp::SDEL, 0.2, lex, rng);
  CHECK(sdel.altered == 2);
  CHECK(text::word_count(sdel.text) == 12);
  CHECK(is_subsequence(text::words_of(sdel.text), original));

  const auto cdel = approximate_text(kCaption, TextOp::CDEL, 0.2, lex, rng);
  const auto cw = text::words_of(cdel.text);
  CHECK(cw.size() == 12);
  REQUIRE(cdel.positions.size() == 2);
  CHECK(cdel.positions[1] - cdel.positions[0] == 1);
  std::vector<std::string> expect(original.begin(), original.begin() + cdel.positions[0]);
  expect.insert(expect.end(), original.begin() + cdel.positions[0] + 2, original.end());
  CHECK(cw == expect);

  const auto repl = approximate_text(kCaption, TextOp::REPL, 0.2, lex, rng);
  const auto rw = text::words_of(repl.text);
  REQUIRE(rw.size() == 14);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < 14; ++i) {
    if (rw[i] == original[i]) continue;
    ++changed;
    const auto& syn = lex.synonyms(original[i]);
    CHECK(std::find(syn.begin(), syn.end(), rw[i]) != syn.end());
  }
  CHECK(changed == 2);
}

TEST_CASE("short captions are returned unchanged") {
  Rng rng(2);
  for (TextOp op : {TextOp::SDEL, TextOp::CDEL, TextOp::REPL}) {
    const auto r = approximate_text("A red Shirt.", op, 0.2, text::SynonymLexicon::builtin(), rng);
    CHECK(r.text == "A red Shirt.");
    CHECK(r.altered == 0);
    CHECK(r.positions.empty());
  }
  CHECK(approximate_text("", TextOp::SDEL, 0.2, text::SynonymLexicon::builtin(), rng).text.empty());
}

TEST_CASE("text op invariants over random captions") {
  const auto& lex = text::SynonymLexicon::builtin();
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto attrs = corpus::sample_identity(rng);
    const auto cap = corpus::caption(attrs, rng);
    const auto words = text::words_of(cap);
    const double sigma = rng.uniform(0.05, 0.6);
    const std::size_t nw = static_cast<std::size_t>(std::floor(words.size() * sigma));
    const TextOp op = random_text_op(rng);
    const auto r = approximate_text(cap, op, sigma, lex, rng);
    const auto out = text::words_of(r.text);
    INFO(cap << " / " << text_op_name(op));
    if (op == TextOp::REPL) {
      CHECK(out.size() == words.size());
    } else {
      CHECK(out.size() == words.size() - nw);
      CHECK(is_subsequence(out, words));
    }
    CHECK(std::is_sorted(r.positions.begin(), r.positions.end()));
  }
}

TEST_CASE("text ops are deterministic under a seed") {
  const auto& lex = text::SynonymLexicon::builtin();
  Rng a(9), b(9);
  for (TextOp op : {TextOp::SDEL, TextOp::CDEL, TextOp::REPL})
    CHECK(approximate_text(kCaption, op, 0.3, lex, a).text ==
          approximate_text(kCaption, op, 0.3, lex, b).text);
}

TEST_CASE("op names round trip") {
  for (TextOp op : {TextOp::SDEL, TextOp::CDEL, TextOp::REPL}) CHECK(parse_text_op(text_op_name(op)) == op);
  CHECK_THROWS(parse_text_op("SWAP"));
}

TEST_CASE("mixup examples") {
  const Tensor a = Tensor::from({1, 2}, {1, 0}), b = Tensor::from({1, 2}, {0, 1});
  CHECK(mixup_hidden(a, b, 0.5).data()[0] == 0.5);
  CHECK(mixup_hidden(a, b, 0.5).data()[1] == 0.5);
  CHECK(mixup_hidden(a, b, 1.0).data()[0] == 1.0);
  CHECK(mixup_hidden(a, b, 0.0).data()[1] == 1.0);
  CHECK_THROWS(mixup_hidden(a, Tensor::from({2, 1}, {0, 1}), 0.5));
}

TEST_CASE("mixup is linear with gradient lambda and 1 - lambda") {
  Rng rng(4);
  const Tensor a = tbps::testing::random_tensor({3, 4}, rng), b = tbps::testing::random_tensor({3, 4}, rng);
  const Tensor m = mixup_hidden(a, b, 0.3);
  for (std::size_t i = 0; i < 12; ++i)
    CHECK(m.data()[i] == doctest::Approx(0.3 * a.data()[i] + 0.7 * b.data()[i]).epsilon(1e-14));
  backward(ops::sum(m));
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(a.grad()[i] == doctest::Approx(0.3));
    CHECK(b.grad()[i] == doctest::Approx(0.7));
  }
}

TEST_CASE("mixup config validation") {
  MixupConfig c;
  c.validate();
  c.lambda = 1.5;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c.lambda = 0.5;
  c.probability = -0.1;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("editable phrase selection") {
  const auto sets = GenerationSets::defaults();
  Rng rng(5);
  const auto p = select_editable_phrase("a man in a blue jacket and black pants", sets, rng);
  REQUIRE(p);
  CHECK(((p->color == "blue" && p->noun == "jacket") || (p->color == "black" && p->noun == "pants")));
  CHECK_FALSE(select_editable_phrase("a tall man walking", sets, rng));
  const auto phrases = editable_phrases("a man in a blue jacket and black pants", sets);
  REQUIRE(phrases.size() == 2);
  CHECK(phrases[0].color_word == 4);
  CHECK(phrases[0].noun_word == 5);
  CHECK(phrases[1].color == "black");
  // The shoes and the bag are not clothes.
  CHECK(editable_phrases("black shoes and a red bag", sets).empty());
  // Colour of a multi-word phrase.
  const auto light = editable_phrases("a red long coat", sets);
  REQUIRE(light.size() == 1);
  CHECK(light[0].noun == "coat");
}

TEST_CASE("controlled pair generation edits exactly one garment") {
  const auto sets = GenerationSets::defaults();
  const RendererSynthesizer synth;
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto attrs = corpus::sample_identity(rng);
    const std::uint64_t jitter = rng.next_u64();
    const auto rendered = corpus::render(attrs, jitter);
    const PairSource src{corpus::caption(attrs, rng), rendered.image, attrs, jitter};
    const auto g = controlled_pair_generate(src, sets, synth, rng);
    REQUIRE(g);
    CHECK(g->new_color != g->phrase.color);
    CHECK(sets.is_color(g->new_color));

    // Captions differ only in the swapped colour word.
    auto ow = text::words_of(src.caption), nw = text::words_of(g->caption);
    REQUIRE(ow.size() == nw.size());
    for (std::size_t i = 0; i < ow.size(); ++i)
      CHECK((ow[i] == nw[i]) == (i != g->phrase.color_word));
    CHECK(nw[g->phrase.color_word] == g->new_color);

    // Pixels change only under the edited region and the region takes the new colour.
    const auto mask = rendered.regions.mask(g->region);
    const auto rgb = *corpus::palette_rgb(g->new_color);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const auto* px = &g->image.pixels[3 * i];
      if (mask[i]) {
        CHECK(px[0] == rgb.r);
        CHECK(px[1] == rgb.g);
        CHECK(px[2] == rgb.b);
      } else {
        CHECK(std::equal(px, px + 3, &src.image.pixels[3 * i]));
      }
    }
    CHECK(corpus::parse_caption(g->caption).matches(g->attrs));
  }
}

TEST_CASE("controlled generation rejects captions that disagree with the attributes") {
  Rng rng(7);
  auto attrs = corpus::sample_identity(rng);
  attrs.upper = {"shirt", "red"};
  const auto img = corpus::render(attrs, 1).image;
  const PairSource src{"a person wearing a green shirt", img, attrs, 1};
  CHECK_THROWS_AS(controlled_pair_generate(src, GenerationSets::defaults(), RendererSynthesizer{}, rng),
                  DataError);
  const PairSource none{"a person walking", img, attrs, 1};
  CHECK_FALSE(controlled_pair_generate(none, GenerationSets::defaults(), RendererSynthesizer{}, rng));
}

TEST_CASE("pdg_generate appends fresh identities without touching the originals") {
  tbps::testing::TempDir dir("pdg");
  corpus::CorpusSpec spec;
  spec.seed = 3;
  spec.identities = 8;
  spec.images_per_identity = 2;
  auto m = corpus::generate_corpus(spec, dir.path());
  const auto before = m;
  const std::size_t train_ids = m.identities(corpus::Split::Train).size();
  const auto stats = pdg_generate(m, dir.path(), 2, 11, GenerationSets::defaults(), RendererSynthesizer{});
  CHECK(stats.generated == 2 * train_ids);
  CHECK(m.records.size() == before.records.size() + stats.generated);
  CHECK(std::equal(before.records.begin(), before.records.end(), m.records.begin()));
  std::set<std::size_t> ids;
  for (std::size_t i = before.records.size(); i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    CHECK(r.generated);
    CHECK(r.split == corpus::Split::Train);
    CHECK(r.id >= before.next_identity());
    ids.insert(r.id);
    CHECK(corpus::read_png(corpus::resolve_image(dir.path(), r)) == corpus::render(*r.attrs, r.jitter_seed).image);
  }
  CHECK(ids.size() == stats.generated);

  // A second run draws only from the original records.
  const auto again = pdg_generate(m, dir.path(), 1, 12, GenerationSets::defaults(), RendererSynthesizer{});
  CHECK(again.generated == train_ids);
}

TEST_CASE("generation sets validation and json") {
  auto s = GenerationSets::defaults();
  nlohmann::json j = s;
  const auto back = j.get<GenerationSets>();
  CHECK(back.clothes == s.clothes);
  CHECK(back.colors.size() == s.colors.size());
  s.colors.resize(1);
  CHECK_THROWS_AS(s.validate(), ParameterError);
}
