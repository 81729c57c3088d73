#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tbps/corpus/attributes.hpp"
#include "tbps/corpus/image.hpp"

namespace tbps::corpus {

enum class Region : std::uint8_t { Background, Skin, Hair, Upper, Lower, Shoes, Accessory };

struct RenderConfig {
  std::size_t height = 64;
  std::size_t width = 32;
};

/// Per-pixel region labels in the same layout as the image (without channels).
struct RegionMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Region> labels;

  Region at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
  /// 1 where the label equals `region`.
  std::vector<std::uint8_t> mask(Region region) const;
  std::size_t area(Region region) const;
};

struct Rendering {
  RgbImage image;
  RegionMap regions;
};

/// Flat-fill rasterizer. Geometry depends only on the garment/accessory types
/// and `jitter_seed`; colours never move a boundary, so recolouring a garment
/// changes exactly the pixels under its mask.
Rendering render(const PersonAttributes& attrs, std::uint64_t jitter_seed,
                 const RenderConfig& config = {});

}  // namespace tbps::corpus
