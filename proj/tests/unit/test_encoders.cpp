#include <doctest.h>

#include <cmath>

#include "tbps/core/errors.hpp"
#include "tbps/core/ops.hpp"
#include "tbps/core/tape.hpp"
#include "tbps/model/encoder.hpp"
#include "test_support.hpp"

using namespace tbps;
using namespace tbps::model;

namespace {

ImageData random_image(std::size_t h, std::size_t w, std::size_t c, Rng& rng) {
  ImageData img{h, w, c, std::vector<double>(h * w * c)};
  for (auto& p : img.pixels) p = rng.uniform(-1, 1);
  return img;
}

TransformerConfig small_transformer(std::size_t layers = 2) {
  TransformerConfig t;
  t.layers = layers;
  t.dim = 16;
  t.heads = 2;
  t.mlp_ratio = 2;
  return t;
}

void zero(Tensor t) {
  for (auto& v : t.mutable_data()) v = 0.0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.at(i) - b.at(i)));
  return m;
}

}  // namespace

TEST_CASE("slice_patches counts") {
  Rng rng(1);
  CHECK(slice_patches(random_image(8, 8, 3, rng), 8, 3).rows() == 1);
  CHECK(slice_patches(random_image(64, 32, 3, rng), 8, 8).rows() == 32);
  CHECK(slice_patches(random_image(40, 28, 1, rng), 16, 12).rows() == 6);
  CHECK(slice_patches(random_image(64, 32, 3, rng), 8, 4).rows() == 15 * 7);
  CHECK_THROWS_AS(slice_patches(random_image(8, 4, 1, rng), 6, 2), DimensionError);
}

TEST_CASE("slice_patches of a full-size patch is the flattened image") {
  Rng rng(2);
  const auto img = random_image(4, 4, 2, rng);
  const Tensor p = slice_patches(img, 4, 1);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(p.at(i) == img.pixels[i]);
}

TEST_CASE("slice_patches layout is row-major over patches then (dy, dx, c)") {
  ImageData img{4, 6, 1, {}};
  for (std::size_t i = 0; i < 24; ++i) img.pixels.push_back(static_cast<double>(i));
  const Tensor p = slice_patches(img, 2, 2);
  REQUIRE(p.shape() == Shape{6, 4});
  // Patch (row 1, col 2) starts at pixel (2, 4).
  CHECK(p.at(5, 0) == 16.0);
  CHECK(p.at(5, 1) == 17.0);
  CHECK(p.at(5, 2) == 22.0);
  CHECK(p.at(5, 3) == 23.0);
}

TEST_CASE("text embedding rows") {
  Rng rng(3);
  TextEncoderConfig cfg{small_transformer(), 10, 8};
  auto enc = TextEncoder::init(cfg, rng);
  const std::vector<std::size_t> pads = {text::kSemId, 0, 0};
  const Tensor z = enc.embed(pads);
  for (std::size_t d = 0; d < 16; ++d) CHECK(z.at(0, d) == enc.sem.at(d) + enc.pos.at(d));
  zero(enc.pos);
  const std::vector<std::size_t> ids = {text::kSemId, 5, 7};
  const Tensor z2 = enc.embed(ids);
  for (std::size_t d = 0; d < 16; ++d) {
    CHECK(z2.at(1, d) == enc.token_embed.at(5, d));
    CHECK(z2.at(2, d) == enc.token_embed.at(7, d));
  }
  const std::vector<std::size_t> bad = {text::kSemId, 10};
  CHECK_THROWS(enc.embed(bad));
}

TEST_CASE("texts equal up to padding length encode identically") {
  Rng rng(4);
  TextEncoderConfig cfg{small_transformer(), 12, 16};
  const auto enc = TextEncoder::init(cfg, rng);
  text::Vocabulary v(std::vector<std::string>{"a", "b", "c"});
  const auto t = text::encode("a b c", v, 16);
  const auto full = enc.encode(t, 16).embedding;
  const auto trimmed = enc.encode(t).embedding;
  CHECK(max_abs_diff(full, trimmed) < 1e-12);
  const auto t8 = text::encode("a b c", v, 8);
  CHECK(max_abs_diff(enc.encode(t8, 8).embedding, trimmed) < 1e-12);
}

TEST_CASE("image embedding of a zero image") {
  Rng rng(5);
  VisionEncoderConfig cfg{small_transformer(), 16, 8, 3, 4, 2};
  auto enc = VisionEncoder::init(cfg, rng);
  zero(enc.pos);
  zero(enc.patch_b);
  const Tensor z = enc.embed(ImageData{16, 8, 3, std::vector<double>(16 * 8 * 3, 0.0)});
  CHECK(z.rows() == cfg.num_patches() + 1);
  for (std::size_t d = 0; d < 16; ++d) CHECK(z.at(0, d) == enc.sem.at(d));
  for (std::size_t i = 16; i < z.numel(); ++i) CHECK(z.at(i) == 0.0);
}

TEST_CASE("one changed pixel only affects the patches covering it") {
  Rng rng(6);
  VisionEncoderConfig cfg{small_transformer(), 16, 12, 3, 4, 2};
  const auto enc = VisionEncoder::init(cfg, rng);
  auto img = random_image(16, 12, 3, rng);
  const Tensor a = enc.embed(img);
  const std::size_t py = 5, px = 6;
  img.pixels[(py * 12 + px) * 3 + 1] += 0.5;
  const Tensor b = enc.embed(img);
  for (std::size_t gy = 0; gy < cfg.grid_h(); ++gy)
    for (std::size_t gx = 0; gx < cfg.grid_w(); ++gx) {
      const bool covers = gy * 2 <= py && py < gy * 2 + 4 && gx * 2 <= px && px < gx * 2 + 4;
      const std::size_t row = 1 + gy * cfg.grid_w() + gx;
      double diff = 0.0;
      for (std::size_t d = 0; d < 16; ++d) diff += std::abs(a.at(row, d) - b.at(row, d));
      CHECK((diff > 0.0) == covers);
    }
}

TEST_CASE("zero-weight layer is the identity") {
  Rng rng(7);
  auto layer = LayerParams::init(small_transformer(), rng);
  for (Tensor t : {layer.wq, layer.bq, layer.wk, layer.bk, layer.wv, layer.bv, layer.wo, layer.bo,
                   layer.w1, layer.b1, layer.w2, layer.b2})
    zero(t);
  const Tensor z = tbps::testing::random_tensor({5, 16}, rng, 1.0, false);
  const Tensor out = transformer_layer(z, layer, 2, {}, 1e-5);
  CHECK(max_abs_diff(out, z) == 0.0);
}

TEST_CASE("single-token attention attends to itself") {
  Rng rng(8);
  const auto layer = LayerParams::init(small_transformer(), rng);
  const Tensor z = tbps::testing::random_tensor({1, 16}, rng, 1.0, false);
  // With one token the attention output is its own value projection, so the
  // layer equals the hand-composed residual blocks.
  const Tensor h = ops::layer_norm(z, layer.ln1_gamma, layer.ln1_beta, 1e-5);
  const Tensor v = ops::add(ops::matmul(h, layer.wv), layer.bv);
  const Tensor z1 = ops::add(z, ops::add(ops::matmul(v, layer.wo), layer.bo));
  const Tensor h2 = ops::layer_norm(z1, layer.ln2_gamma, layer.ln2_beta, 1e-5);
  const Tensor m = ops::add(ops::matmul(ops::gelu(ops::add(ops::matmul(h2, layer.w1), layer.b1)),
                                        layer.w2), layer.b2);
  CHECK(max_abs_diff(transformer_layer(z, layer, 2, {}, 1e-5), ops::add(z1, m)) < 1e-12);
}

TEST_CASE("attention is permutation equivariant over non-SEM tokens") {
  Rng rng(9);
  const auto layer = LayerParams::init(small_transformer(), rng);
  const Tensor z = tbps::testing::random_tensor({4, 16}, rng, 1.0, false);
  std::vector<double> swapped(z.data().begin(), z.data().end());
  for (std::size_t d = 0; d < 16; ++d) std::swap(swapped[1 * 16 + d], swapped[3 * 16 + d]);
  const Tensor a = transformer_layer(z, layer, 2, {}, 1e-5);
  const Tensor b = transformer_layer(Tensor::from({4, 16}, swapped), layer, 2, {}, 1e-5);
  for (std::size_t d = 0; d < 16; ++d) {
    CHECK(std::abs(a.at(0, d) - b.at(0, d)) < 1e-12);
    CHECK(std::abs(a.at(1, d) - b.at(3, d)) < 1e-12);
    CHECK(std::abs(a.at(3, d) - b.at(1, d)) < 1e-12);
  }
}

TEST_CASE("masked tokens do not influence unmasked outputs") {
  Rng rng(10);
  const auto layer = LayerParams::init(small_transformer(), rng);
  const Tensor z = tbps::testing::random_tensor({4, 16}, rng, 1.0, false);
  std::vector<double> changed(z.data().begin(), z.data().end());
  for (std::size_t d = 0; d < 16; ++d) changed[3 * 16 + d] += 5.0;
  const std::vector<std::uint8_t> mask = {1, 1, 1, 0};
  const Tensor a = transformer_layer(z, layer, 2, mask, 1e-5);
  const Tensor b = transformer_layer(Tensor::from({4, 16}, changed), layer, 2, mask, 1e-5);
  for (std::size_t i = 0; i < 3 * 16; ++i) CHECK(a.at(i) == b.at(i));
}

TEST_CASE("encodings are unit norm and deterministic") {
  Rng rng(11);
  VisionEncoderConfig cfg{small_transformer(), 16, 8, 3, 4, 4};
  const auto enc = VisionEncoder::init(cfg, rng);
  const auto img = random_image(16, 8, 3, rng);
  const auto a = enc.encode(img).embedding;
  const auto b = enc.encode(img).embedding;
  double n = 0.0;
  for (double v : a.data()) n += v * v;
  CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-6);
  CHECK(max_abs_diff(a, b) == 0.0);
  CHECK(enc.encode(img).hidden.states.size() == 3);
}

TEST_CASE("zero-layer encoder normalizes the SEM row") {
  Rng rng(12);
  VisionEncoderConfig cfg{small_transformer(0), 8, 8, 3, 4, 4};
  const auto enc = VisionEncoder::init(cfg, rng);
  const auto img = random_image(8, 8, 3, rng);
  const Tensor z0 = enc.embed(img);
  const Tensor expect = ops::l2_normalize_rows(ops::slice_rows(z0, 0, 1));
  CHECK(max_abs_diff(enc.encode(img).embedding, expect) < 1e-15);
}

TEST_CASE("position interpolation") {
  const std::vector<double> grid = {1.0, 2.0, 3.0, 4.0};  // 2 x 2 grid, D = 1
  CHECK(interpolate_pos_embed(grid, 2, 2, 1, 2, 2) == grid);
  const std::vector<double> col = {2.0, -4.0};  // 2 x 1, D = 1
  const auto three = interpolate_pos_embed(col, 2, 1, 1, 3, 1);
  CHECK(three[0] == 2.0);
  CHECK(three[1] == doctest::Approx(-1.0));
  CHECK(three[2] == -4.0);
  const std::vector<double> constant(3 * 2 * 4, 0.7);
  for (double v : interpolate_pos_embed(constant, 3, 2, 4, 7, 5)) CHECK(v == doctest::Approx(0.7));
  CHECK_THROWS(interpolate_pos_embed(grid, 2, 2, 1, 0, 2));
}

TEST_CASE("with_resolution keeps the SEM position and resamples the grid") {
  Rng rng(13);
  VisionEncoderConfig cfg{small_transformer(), 16, 8, 3, 4, 4};
  const auto enc = VisionEncoder::init(cfg, rng);
  const auto big = enc.with_resolution(28, 16);
  CHECK(big.pos.rows() == big.config().num_patches() + 1);
  for (std::size_t d = 0; d < 16; ++d) CHECK(big.pos.at(0, d) == enc.pos.at(0, d));
  const auto img = random_image(28, 16, 3, rng);
  const auto e = big.encode(img);
  double n = 0.0;
  for (double v : e.embedding.data()) n += v * v;
  CHECK(std::abs(n - 1.0) < 1e-9);
}

TEST_CASE("every parameter receives a gradient") {
  Rng rng(14);
  TextEncoderConfig tc{small_transformer(), 12, 8};
  VisionEncoderConfig vc{small_transformer(), 16, 8, 3, 4, 4};
  const auto model = DualEncoder::init(tc, vc, 14);
  text::Vocabulary v(std::vector<std::string>{"a", "b", "c", "d", "e", "f", "g", "h", "i"});
  std::vector<Tensor> te, ie;
  const char* caps[] = {"a b c", "d e", "f g h i"};
  for (int i = 0; i < 3; ++i) {
    te.push_back(model.text.encode(text::encode(caps[i], v, 8)).embedding);
    ie.push_back(model.vision.encode(random_image(16, 8, 3, rng)).embedding);
  }
  const Tensor s = ops::matmul_nt(ops::concat_rows(te), ops::concat_rows(ie));
  backward(ops::sum(ops::scale(ops::diagonal(ops::log_softmax_rows(ops::scale(s, 10.0))), -1.0)));
  for (const auto& p : model.parameters()) {
    if (p.name == "text.token_embed" || p.name == "text.pos") continue;  // rows partly unused
    bool nonzero = false;
    for (double g : p.tensor.grad()) nonzero = nonzero || g != 0.0;
    INFO(p.name);
    CHECK(nonzero);
  }
}

TEST_CASE("config json round trip and validation") {
  VisionEncoderConfig cfg;
  nlohmann::json j = cfg;
  const auto back = j.get<VisionEncoderConfig>();
  CHECK(back.num_patches() == cfg.num_patches());
  VisionEncoderConfig bad = cfg;
  bad.transformer.heads = 5;
  CHECK_THROWS(bad.validate());
  bad = cfg;
  bad.stride = 9;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("checkpoint parameters rebuild the same model") {
  TextEncoderConfig tc{small_transformer(), 12, 8};
  VisionEncoderConfig vc{small_transformer(), 16, 8, 3, 4, 4};
  const auto a = DualEncoder::init(tc, vc, 3);
  const auto b = DualEncoder::from_parameters(a.config_json(), a.parameters());
  const auto pa = a.parameters(), pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(max_abs_diff(pa[i].tensor, pb[i].tensor) == 0.0);
    CHECK(pa[i].tensor.node() != pb[i].tensor.node());
  }
}
