#include "tbps/model/encoder.hpp"

#include <cmath>
#include <map>

#include "tbps/core/errors.hpp"
#include "tbps/core/ops.hpp"

namespace tbps::model {
namespace {

Tensor init_normal(Shape shape, double std, Rng& rng) {
  auto t = Tensor::zeros(std::move(shape), true);
  for (auto& v : t.mutable_data()) v = rng.truncated_normal(std);
  return t;
}

Tensor init_const(Shape shape, double value) { return Tensor::full(std::move(shape), value, true); }

// Copies values of `src` into the existing leaf `dst` (shapes must agree).
void assign(Tensor& dst, const Tensor& src, const std::string& name) {
  if (dst.shape() != src.shape())
    throw DataError("parameter '" + name + "' has shape " + shape_str(src.shape()) +
                    ", expected " + shape_str(dst.shape()));
  auto d = dst.mutable_data();
  auto s = src.data();
  std::copy(s.begin(), s.end(), d.begin());
}

using ParamIndex = std::map<std::string, const Tensor*>;

ParamIndex index_params(std::span<const NamedTensor> params) {
  ParamIndex idx;
  for (const auto& p : params) idx[p.name] = &p.tensor;
  return idx;
}

void assign_all(std::vector<NamedTensor> targets, const ParamIndex& idx) {
  for (auto& t : targets) {
    auto it = idx.find(t.name);
    if (it == idx.end()) throw DataError("checkpoint: missing parameter '" + t.name + "'");
    assign(t.tensor, *it->second, t.name);
  }
}

}  // namespace

void TransformerConfig::validate() const {
  if (dim == 0 || heads == 0 || mlp_ratio == 0)
    throw DimensionError("transformer config: dim, heads and mlp_ratio must be positive");
  if (dim % heads != 0)
    throw DimensionError("transformer config: dim " + std::to_string(dim) +
                         " not divisible by heads " + std::to_string(heads));
  if (!(ln_eps > 0.0)) throw ParameterError("transformer config: ln_eps must be positive");
}

void TextEncoderConfig::validate() const {
  transformer.validate();
  if (vocab_size <= text::kReservedIds)
    throw DimensionError("text encoder: vocabulary has no ordinary tokens");
  if (max_len < 2) throw DimensionError("text encoder: max_len must be at least 2");
}

void VisionEncoderConfig::validate() const {
  transformer.validate();
  if (channels == 0 || patch == 0 || stride == 0)
    throw DimensionError("vision encoder: channels, patch and stride must be positive");
  if (patch > height || patch > width)
    throw DimensionError("vision encoder: patch " + std::to_string(patch) +
                         " larger than image " + std::to_string(height) + "x" +
                         std::to_string(width));
  if (stride > patch)
    throw DimensionError("vision encoder: stride " + std::to_string(stride) +
                         " exceeds patch size " + std::to_string(patch));
}

void to_json(nlohmann::json& j, const TransformerConfig& c) {
  j = {{"layers", c.layers},   {"dim", c.dim},       {"heads", c.heads},
       {"mlp_ratio", c.mlp_ratio}, {"ln_eps", c.ln_eps}, {"init_std", c.init_std}};
}

void from_json(const nlohmann::json& j, TransformerConfig& c) {
  TransformerConfig d;
  c.layers = j.value("layers", d.layers);
  c.dim = j.value("dim", d.dim);
  c.heads = j.value("heads", d.heads);
  c.mlp_ratio = j.value("mlp_ratio", d.mlp_ratio);
  c.ln_eps = j.value("ln_eps", d.ln_eps);
  c.init_std = j.value("init_std", d.init_std);
}

void to_json(nlohmann::json& j, const TextEncoderConfig& c) {
  j = c.transformer;
  j["vocab_size"] = c.vocab_size;
  j["max_len"] = c.max_len;
}

void from_json(const nlohmann::json& j, TextEncoderConfig& c) {
  c.transformer = j.get<TransformerConfig>();
  c.vocab_size = j.value("vocab_size", std::size_t{0});
  c.max_len = j.value("max_len", text::kDefaultMaxLen);
}

void to_json(nlohmann::json& j, const VisionEncoderConfig& c) {
  j = c.transformer;
  j["height"] = c.height;
  j["width"] = c.width;
  j["channels"] = c.channels;
  j["patch"] = c.patch;
  j["stride"] = c.stride;
}

void from_json(const nlohmann::json& j, VisionEncoderConfig& c) {
  VisionEncoderConfig d;
  c.transformer = j.get<TransformerConfig>();
  c.height = j.value("height", d.height);
  c.width = j.value("width", d.width);
  c.channels = j.value("channels", d.channels);
  c.patch = j.value("patch", d.patch);
  c.stride = j.value("stride", d.stride);
}

Tensor slice_patches(const ImageData& image, std::size_t patch, std::size_t stride) {
  const std::size_t h = image.height, w = image.width, c = image.channels;
  if (patch == 0 || stride == 0) throw DimensionError("slice_patches: patch and stride must be positive");
  if (patch > h || patch > w)
    throw DimensionError("slice_patches: patch " + std::to_string(patch) + " exceeds image " +
                         std::to_string(h) + "x" + std::to_string(w));
  if (image.pixels.size() != h * w * c)
    throw DimensionError("slice_patches: pixel buffer does not match image dimensions");
  const std::size_t gh = (h - patch) / stride + 1;
  const std::size_t gw = (w - patch) / stride + 1;
  const std::size_t len = patch * patch * c;
  std::vector<double> out(gh * gw * len);
  std::size_t k = 0;
  for (std::size_t py = 0; py < gh; ++py) {
    for (std::size_t px = 0; px < gw; ++px) {
      double* dst = out.data() + k * len;
      for (std::size_t dy = 0; dy < patch; ++dy) {
        const double* src = image.pixels.data() + ((py * stride + dy) * w + px * stride) * c;
        std::copy_n(src, patch * c, dst + dy * patch * c);
      }
      ++k;
    }
  }
  return Tensor::from({gh * gw, len}, std::move(out));
}

LayerParams LayerParams::init(const TransformerConfig& cfg, Rng& rng) {
  const std::size_t d = cfg.dim, hidden = cfg.dim * cfg.mlp_ratio;
  const double s = cfg.init_std;
  LayerParams p;
  p.ln1_gamma = init_const({d}, 1.0);
  p.ln1_beta = init_const({d}, 0.0);
  p.wq = init_normal({d, d}, s, rng);
  p.bq = init_const({d}, 0.0);
  p.wk = init_normal({d, d}, s, rng);
  p.bk = init_const({d}, 0.0);
  p.wv = init_normal({d, d}, s, rng);
  p.bv = init_const({d}, 0.0);
  p.wo = init_normal({d, d}, s, rng);
  p.bo = init_const({d}, 0.0);
  p.ln2_gamma = init_const({d}, 1.0);
  p.ln2_beta = init_const({d}, 0.0);
  p.w1 = init_normal({d, hidden}, s, rng);
  p.b1 = init_const({hidden}, 0.0);
  p.w2 = init_normal({hidden, d}, s, rng);
  p.b2 = init_const({d}, 0.0);
  return p;
}

LayerParams LayerParams::clone() const {
  return {ln1_gamma.clone(true), ln1_beta.clone(true), wq.clone(true), bq.clone(true),
          wk.clone(true),        bk.clone(true),       wv.clone(true), bv.clone(true),
          wo.clone(true),        bo.clone(true),       ln2_gamma.clone(true),
          ln2_beta.clone(true),  w1.clone(true),       b1.clone(true), w2.clone(true),
          b2.clone(true)};
}

void LayerParams::append_named(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + "ln1.gamma", ln1_gamma});
  out.push_back({prefix + "ln1.beta", ln1_beta});
  out.push_back({prefix + "attn.wq", wq});
  out.push_back({prefix + "attn.bq", bq});
  out.push_back({prefix + "attn.wk", wk});
  out.push_back({prefix + "attn.bk", bk});
  out.push_back({prefix + "attn.wv", wv});
  out.push_back({prefix + "attn.bv", bv});
  out.push_back({prefix + "attn.wo", wo});
  out.push_back({prefix + "attn.bo", bo});
  out.push_back({prefix + "ln2.gamma", ln2_gamma});
  out.push_back({prefix + "ln2.beta", ln2_beta});
  out.push_back({prefix + "mlp.w1", w1});
  out.push_back({prefix + "mlp.b1", b1});
  out.push_back({prefix + "mlp.w2", w2});
  out.push_back({prefix + "mlp.b2", b2});
}

Tensor transformer_layer(const Tensor& z, const LayerParams& p, std::size_t heads,
                         std::span<const std::uint8_t> mask, double ln_eps) {
  using namespace ops;
  const std::size_t d = z.cols();
  if (heads == 0 || d % heads != 0)
    throw DimensionError("transformer_layer: dim " + std::to_string(d) +
                         " not divisible by heads " + std::to_string(heads));
  if (!mask.empty() && mask.size() != z.rows())
    throw DimensionError("transformer_layer: mask length does not match token count");
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  const Tensor h = layer_norm(z, p.ln1_gamma, p.ln1_beta, ln_eps);
  const Tensor q = add(matmul(h, p.wq), p.bq);
  const Tensor k = add(matmul(h, p.wk), p.bk);
  const Tensor v = add(matmul(h, p.wv), p.bv);
  std::vector<Tensor> head_out;
  head_out.reserve(heads);
  for (std::size_t i = 0; i < heads; ++i) {
    const Tensor qi = heads == 1 ? q : slice_cols(q, i * dh, dh);
    const Tensor ki = heads == 1 ? k : slice_cols(k, i * dh, dh);
    const Tensor vi = heads == 1 ? v : slice_cols(v, i * dh, dh);
    const Tensor attn = softmax_rows(scale(matmul_nt(qi, ki), inv_sqrt), mask);
    head_out.push_back(matmul(attn, vi));
  }
  const Tensor merged = heads == 1 ? head_out[0] : concat_cols(head_out);
  const Tensor z_mid = add(z, add(matmul(merged, p.wo), p.bo));

  const Tensor h2 = layer_norm(z_mid, p.ln2_gamma, p.ln2_beta, ln_eps);
  const Tensor m = add(matmul(gelu(add(matmul(h2, p.w1), p.b1)), p.w2), p.b2);
  return add(z_mid, m);
}

Encoding encode_from(const Tensor& z, std::span<const LayerParams> layers, std::size_t first_layer,
                     std::size_t heads, std::span<const std::uint8_t> mask, double ln_eps) {
  if (first_layer > layers.size())
    throw DimensionError("encode_from: first layer beyond model depth");
  Encoding enc;
  enc.hidden.states.push_back(z);
  Tensor cur = z;
  for (std::size_t l = first_layer; l < layers.size(); ++l) {
    cur = transformer_layer(cur, layers[l], heads, mask, ln_eps);
    enc.hidden.states.push_back(cur);
  }
  enc.embedding = ops::l2_normalize_rows(ops::slice_rows(cur, 0, 1));
  return enc;
}

std::vector<double> interpolate_pos_embed(std::span<const double> grid, std::size_t g_h,
                                          std::size_t g_w, std::size_t dim, std::size_t new_g_h,
                                          std::size_t new_g_w) {
  if (g_h == 0 || g_w == 0 || dim == 0)
    throw DimensionError("interpolate_pos_embed: source grid must be non-empty");
  if (new_g_h == 0 || new_g_w == 0)
    throw DimensionError("interpolate_pos_embed: target grid must be non-empty");
  if (grid.size() != g_h * g_w * dim)
    throw DimensionError("interpolate_pos_embed: grid buffer does not match dimensions");
  std::vector<double> out(new_g_h * new_g_w * dim);
  auto coord = [](std::size_t i, std::size_t n_new, std::size_t n_old) {
    if (n_new == 1 || n_old == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(n_old - 1) / static_cast<double>(n_new - 1);
  };
  for (std::size_t y = 0; y < new_g_h; ++y) {
    const double sy = coord(y, new_g_h, g_h);
    const std::size_t y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, g_h - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < new_g_w; ++x) {
      const double sx = coord(x, new_g_w, g_w);
      const std::size_t x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, g_w - 1);
      const double fx = sx - static_cast<double>(x0);
      double* dst = out.data() + (y * new_g_w + x) * dim;
      const double* a = grid.data() + (y0 * g_w + x0) * dim;
      const double* b = grid.data() + (y0 * g_w + x1) * dim;
      const double* c = grid.data() + (y1 * g_w + x0) * dim;
      const double* e = grid.data() + (y1 * g_w + x1) * dim;
      for (std::size_t k = 0; k < dim; ++k) {
        const double top = fx == 0.0 ? a[k] : (1.0 - fx) * a[k] + fx * b[k];
        const double bot = fx == 0.0 ? c[k] : (1.0 - fx) * c[k] + fx * e[k];
        dst[k] = fy == 0.0 ? top : (1.0 - fy) * top + fy * bot;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- text

TextEncoder TextEncoder::init(const TextEncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto& t = cfg.transformer;
  TextEncoder enc;
  enc.config_ = cfg;
  enc.token_embed = init_normal({cfg.vocab_size, t.dim}, t.init_std, rng);
  enc.sem = init_normal({1, t.dim}, t.init_std, rng);
  enc.pos = init_normal({cfg.max_len, t.dim}, t.init_std, rng);
  for (std::size_t l = 0; l < t.layers; ++l) enc.layers.push_back(LayerParams::init(t, rng));
  return enc;
}

Tensor TextEncoder::embed(std::span<const std::size_t> ids) const {
  if (ids.empty() || ids[0] != text::kSemId)
    throw DimensionError("TextEncoder::embed: sequence must start with [SEM]");
  if (ids.size() > config_.max_len)
    throw DimensionError("TextEncoder::embed: sequence longer than max_len");
  for (auto id : ids)
    if (id >= config_.vocab_size)
      throw DimensionError("TextEncoder::embed: token id " + std::to_string(id) +
                           " out of range for vocabulary of " + std::to_string(config_.vocab_size));
  const Tensor pos_rows = ops::slice_rows(pos, 0, ids.size());
  if (ids.size() == 1) return ops::add(sem, pos_rows);
  const Tensor words = ops::gather_rows(token_embed, ids.subspan(1));
  const Tensor parts[] = {sem, words};
  return ops::add(ops::concat_rows(parts), pos_rows);
}

Encoding TextEncoder::encode(const text::TokenizedText& t, std::size_t length) const {
  const std::size_t active = t.active_length();
  std::size_t n = length == 0 ? active : length;
  if (n > t.ids.size()) throw DimensionError("TextEncoder::encode: window exceeds sequence");
  const Tensor z0 = embed(std::span(t.ids).first(n));
  const std::span<const std::uint8_t> mask =
      n == active ? std::span<const std::uint8_t>{} : std::span(t.attention).first(n);
  return encode_states(z0, mask, 0);
}

Encoding TextEncoder::encode_states(const Tensor& z, std::span<const std::uint8_t> mask,
                                    std::size_t first_layer) const {
  const auto& t = config_.transformer;
  return encode_from(z, layers, first_layer, t.heads, mask, t.ln_eps);
}

void TextEncoder::append_named(std::vector<NamedTensor>& out) const {
  out.push_back({"text.token_embed", token_embed});
  out.push_back({"text.sem", sem});
  out.push_back({"text.pos", pos});
  for (std::size_t l = 0; l < layers.size(); ++l)
    layers[l].append_named("text.layer" + std::to_string(l) + ".", out);
}

void TextEncoder::assign_from(std::span<const NamedTensor> params) {
  std::vector<NamedTensor> mine;
  append_named(mine);
  assign_all(std::move(mine), index_params(params));
}

// -------------------------------------------------------------- vision

VisionEncoder VisionEncoder::init(const VisionEncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto& t = cfg.transformer;
  VisionEncoder enc;
  enc.config_ = cfg;
  const std::size_t patch_len = cfg.patch * cfg.patch * cfg.channels;
  enc.patch_w = init_normal({patch_len, t.dim}, t.init_std, rng);
  enc.patch_b = init_const({t.dim}, 0.0);
  enc.sem = init_normal({1, t.dim}, t.init_std, rng);
  enc.pos = init_normal({cfg.num_patches() + 1, t.dim}, t.init_std, rng);
  for (std::size_t l = 0; l < t.layers; ++l) enc.layers.push_back(LayerParams::init(t, rng));
  return enc;
}

Tensor VisionEncoder::embed(const ImageData& image) const {
  if (image.height != config_.height || image.width != config_.width ||
      image.channels != config_.channels)
    throw DimensionError("VisionEncoder::embed: image is " + std::to_string(image.height) + "x" +
                         std::to_string(image.width) + "x" + std::to_string(image.channels) +
                         ", encoder expects " + std::to_string(config_.height) + "x" +
                         std::to_string(config_.width) + "x" + std::to_string(config_.channels));
  const Tensor patches = slice_patches(image, config_.patch, config_.stride);
  const Tensor tokens = ops::add(ops::matmul(patches, patch_w), patch_b);
  const Tensor parts[] = {sem, tokens};
  return ops::add(ops::concat_rows(parts), pos);
}

Encoding VisionEncoder::encode(const ImageData& image) const {
  return encode_states(embed(image), 0);
}

Encoding VisionEncoder::encode_states(const Tensor& z, std::size_t first_layer) const {
  const auto& t = config_.transformer;
  return encode_from(z, layers, first_layer, t.heads, {}, t.ln_eps);
}

VisionEncoder VisionEncoder::with_resolution(std::size_t height, std::size_t width) const {
  VisionEncoderConfig cfg = config_;
  cfg.height = height;
  cfg.width = width;
  cfg.validate();
  VisionEncoder out = *this;
  out.config_ = cfg;
  out.patch_w = patch_w.clone(true);
  out.patch_b = patch_b.clone(true);
  out.sem = sem.clone(true);
  for (auto& layer : out.layers) layer = layer.clone();
  const std::size_t d = config_.transformer.dim;
  const auto old = pos.data();
  const auto grid = interpolate_pos_embed(old.subspan(d), config_.grid_h(), config_.grid_w(), d,
                                          cfg.grid_h(), cfg.grid_w());
  std::vector<double> values(old.begin(), old.begin() + static_cast<std::ptrdiff_t>(d));
  values.insert(values.end(), grid.begin(), grid.end());
  out.pos = Tensor::from({cfg.num_patches() + 1, d}, std::move(values), true);
  return out;
}

void VisionEncoder::append_named(std::vector<NamedTensor>& out) const {
  out.push_back({"vision.patch_w", patch_w});
  out.push_back({"vision.patch_b", patch_b});
  out.push_back({"vision.sem", sem});
  out.push_back({"vision.pos", pos});
  for (std::size_t l = 0; l < layers.size(); ++l)
    layers[l].append_named("vision.layer" + std::to_string(l) + ".", out);
}

void VisionEncoder::assign_from(std::span<const NamedTensor> params) {
  std::vector<NamedTensor> mine;
  append_named(mine);
  assign_all(std::move(mine), index_params(params));
}

// ---------------------------------------------------------------- dual

DualEncoder DualEncoder::init(const TextEncoderConfig& text_cfg,
                              const VisionEncoderConfig& vision_cfg, std::uint64_t seed) {
  if (text_cfg.transformer.dim != vision_cfg.transformer.dim)
    throw DimensionError("dual encoder: text and vision embedding sizes differ");
  DualEncoder m;
  Rng text_rng(derive_seed(seed, 1));
  Rng vision_rng(derive_seed(seed, 2));
  m.text = TextEncoder::init(text_cfg, text_rng);
  m.vision = VisionEncoder::init(vision_cfg, vision_rng);
  return m;
}

std::vector<NamedTensor> DualEncoder::parameters() const {
  std::vector<NamedTensor> out;
  text.append_named(out);
  vision.append_named(out);
  return out;
}

void DualEncoder::zero_grad() const {
  for (auto& p : parameters()) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

nlohmann::json DualEncoder::config_json() const {
  return {{"text", text.config()}, {"vision", vision.config()}};
}

DualEncoder DualEncoder::from_parameters(const nlohmann::json& config,
                                         std::span<const NamedTensor> params) {
  const auto text_cfg = config.at("text").get<TextEncoderConfig>();
  const auto vision_cfg = config.at("vision").get<VisionEncoderConfig>();
  DualEncoder m = init(text_cfg, vision_cfg, 0);
  m.text.assign_from(params);
  m.vision.assign_from(params);
  return m;
}

}  // namespace tbps::model
