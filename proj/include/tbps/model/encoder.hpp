#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tbps/core/rng.hpp"
#include "tbps/core/tensor.hpp"
#include "tbps/text/tokenizer.hpp"

namespace tbps::model {

/// Structure shared by both encoders.
struct TransformerConfig {
  std::size_t layers = 2;
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  double ln_eps = 1e-5;
  double init_std = 0.02;

  void validate() const;
};

struct TextEncoderConfig {
  TransformerConfig transformer;
  std::size_t vocab_size = 0;
  std::size_t max_len = text::kDefaultMaxLen;

  void validate() const;
};

struct VisionEncoderConfig {
  TransformerConfig transformer;
  std::size_t height = 64;
  std::size_t width = 32;
  std::size_t channels = 3;
  std::size_t patch = 8;
  std::size_t stride = 4;

  std::size_t grid_h() const { return (height - patch) / stride + 1; }
  std::size_t grid_w() const { return (width - patch) / stride + 1; }
  std::size_t num_patches() const { return grid_h() * grid_w(); }
  void validate() const;
};

void to_json(nlohmann::json& j, const TransformerConfig& c);
void from_json(const nlohmann::json& j, TransformerConfig& c);
void to_json(nlohmann::json& j, const TextEncoderConfig& c);
void from_json(const nlohmann::json& j, TextEncoderConfig& c);
void to_json(nlohmann::json& j, const VisionEncoderConfig& c);
void from_json(const nlohmann::json& j, VisionEncoderConfig& c);

/// Real-valued image in H x W x C row-major layout.
struct ImageData {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> pixels;
};

/// Patches of size `patch` taken every `stride` pixels along each axis, in
/// row-major patch order; each row is one patch flattened as (dy, dx, c).
/// Yields ((H-P)/w + 1) * ((W-P)/w + 1) rows (integer division per axis).
Tensor slice_patches(const ImageData& image, std::size_t patch, std::size_t stride);

/// Weights of one pre-norm Transformer layer.
struct LayerParams {
  Tensor ln1_gamma, ln1_beta;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gamma, ln2_beta;
  Tensor w1, b1, w2, b2;

  static LayerParams init(const TransformerConfig& cfg, Rng& rng);
  /// Deep copy into fresh leaves.
  LayerParams clone() const;
  void append_named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// z' = z + MSA(LN(z)); out = z' + MLP(LN(z')). Keys with mask 0 receive no
/// attention. An empty mask means every position is attended.
Tensor transformer_layer(const Tensor& z, const LayerParams& layer, std::size_t heads,
                         std::span<const std::uint8_t> mask, double ln_eps);

/// Token states after each layer: states[0] is the input, states[l] the output
/// of layer l.
struct HiddenStates {
  std::vector<Tensor> states;
};

struct Encoding {
  Tensor embedding;  // 1 x D, unit norm
  HiddenStates hidden;
};

/// Runs layers [first_layer, layers.size()) on `z` and normalises row 0 of
/// the result. hidden.states[0] is `z`.
Encoding encode_from(const Tensor& z, std::span<const LayerParams> layers, std::size_t first_layer,
                     std::size_t heads, std::span<const std::uint8_t> mask, double ln_eps);

/// Bilinear resampling (corner-aligned) of a g_h x g_w grid of D-vectors,
/// stored row-major as (g_h * g_w) x D.
std::vector<double> interpolate_pos_embed(std::span<const double> grid, std::size_t g_h,
                                          std::size_t g_w, std::size_t dim, std::size_t new_g_h,
                                          std::size_t new_g_w);

class TextEncoder {
 public:
  TextEncoder() = default;
  static TextEncoder init(const TextEncoderConfig& cfg, Rng& rng);

  const TextEncoderConfig& config() const { return config_; }

  /// z_0 for an id sequence starting with [SEM]: row 0 is E_sem + E_pos^0,
  /// row k is E(id_k) + E_pos^k.
  Tensor embed(std::span<const std::size_t> ids) const;
  /// Encodes the first `length` positions (0 = the active prefix). Padding
  /// inside that window is masked out of attention.
  Encoding encode(const text::TokenizedText& t, std::size_t length = 0) const;
  Encoding encode_states(const Tensor& z, std::span<const std::uint8_t> mask,
                         std::size_t first_layer) const;

  void append_named(std::vector<NamedTensor>& out) const;
  void assign_from(std::span<const NamedTensor> params);

  Tensor token_embed, sem, pos;
  std::vector<LayerParams> layers;

 private:
  TextEncoderConfig config_;
};

class VisionEncoder {
 public:
  VisionEncoder() = default;
  static VisionEncoder init(const VisionEncoderConfig& cfg, Rng& rng);

  const VisionEncoderConfig& config() const { return config_; }

  /// z_0 = [E_sem + E_pos^0; proj(patch_1) + E_pos^1; ...].
  Tensor embed(const ImageData& image) const;
  Encoding encode(const ImageData& image) const;
  Encoding encode_states(const Tensor& z, std::size_t first_layer) const;

  /// Copy for another input resolution; patch position embeddings are
  /// bilinearly resampled, the [SEM] position passes through unchanged.
  VisionEncoder with_resolution(std::size_t height, std::size_t width) const;

  void append_named(std::vector<NamedTensor>& out) const;
  void assign_from(std::span<const NamedTensor> params);

  Tensor patch_w, patch_b, sem, pos;
  std::vector<LayerParams> layers;

 private:
  VisionEncoderConfig config_;
};

/// Textual and visual encoders sharing the embedding dimension.
class DualEncoder {
 public:
  DualEncoder() = default;
  static DualEncoder init(const TextEncoderConfig& text_cfg, const VisionEncoderConfig& vision_cfg,
                          std::uint64_t seed);

  TextEncoder text;
  VisionEncoder vision;

  /// Every learnable tensor, in declaration order (checkpoint order).
  std::vector<NamedTensor> parameters() const;
  void zero_grad() const;
  nlohmann::json config_json() const;
  /// Rebuilds from checkpoint meta/params (values copied into fresh leaves).
  static DualEncoder from_parameters(const nlohmann::json& config,
                                     std::span<const NamedTensor> params);
};

}  // namespace tbps::model
