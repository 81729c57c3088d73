#include "tbps/corpus/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tbps/core/errors.hpp"

namespace tbps::corpus {
namespace {

constexpr std::array<Rgb, 4> kBackgrounds = {
    Rgb{150, 150, 150}, Rgb{122, 136, 120}, Rgb{162, 152, 132}, Rgb{112, 122, 142}};

class Canvas {
 public:
  explicit Canvas(const RenderConfig& cfg) : image_(cfg.height, cfg.width) {
    regions_.height = cfg.height;
    regions_.width = cfg.width;
    regions_.labels.assign(cfg.height * cfg.width, Region::Background);
  }

  /// Fills the half-open box [y0, y1) x [x0, x1), given in pixel units and
  /// rounded to the nearest pixel edge, clipped to the canvas.
  void fill(double y0, double y1, double x0, double x1, Rgb color, Region region) {
    const auto clip = [](double v, std::size_t hi) {
      return static_cast<std::size_t>(std::clamp(std::lround(v), 0L, static_cast<long>(hi)));
    };
    const std::size_t ya = clip(y0, image_.height), yb = clip(y1, image_.height);
    const std::size_t xa = clip(x0, image_.width), xb = clip(x1, image_.width);
    for (std::size_t y = ya; y < yb; ++y)
      for (std::size_t x = xa; x < xb; ++x) {
        std::uint8_t* p = image_.at(y, x);
        p[0] = color.r;
        p[1] = color.g;
        p[2] = color.b;
        regions_.labels[y * image_.width + x] = region;
      }
  }

  Rendering finish() { return {std::move(image_), std::move(regions_)}; }

 private:
  RgbImage image_;
  RegionMap regions_;
};

}  // namespace

std::vector<std::uint8_t> RegionMap::mask(Region region) const {
  std::vector<std::uint8_t> m(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] == region;
  return m;
}

std::size_t RegionMap::area(Region region) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), region));
}

Rendering render(const PersonAttributes& attrs, std::uint64_t jitter_seed,
                 const RenderConfig& config) {
  if (config.height < 16 || config.width < 8)
    throw ParameterError("render: canvas must be at least 16 x 8 pixels");
  attrs.validate();

  // Every jitter value is drawn up front and unconditionally, so the geometry
  // of one part never depends on which other parts are present.
  Rng rng(jitter_seed);
  std::array<double, 14> j{};
  for (auto& v : j) v = rng.uniform(-0.1, 0.1);
  const std::size_t background = rng.below(kBackgrounds.size());

  const double H = static_cast<double>(config.height);
  const double W = static_cast<double>(config.width);
  const Rgb skin = skin_tones()[attrs.skin_tone].rgb;
  const Rgb hair = hair_tones()[attrs.hair_tone].rgb;
  const Rgb upper = *palette_rgb(attrs.upper.color);
  const Rgb lower = *palette_rgb(attrs.lower.color);
  const Rgb shoes = *palette_rgb(attrs.shoes_color);

  const double body_w = 0.46 * W * (1 + j[0]);
  const double cx = W / 2 + j[1] * body_w;
  const double head_top = 0.05 * H * (1 + j[2]);
  const double head_h = 0.15 * H * (1 + j[3]);
  const double head_w = 0.32 * W * (1 + j[4]);
  const double torso_top = head_top + head_h;
  const double torso_h = 0.30 * H * (1 + j[5]);
  const double waist = torso_top + torso_h;
  const double arm_w = 0.11 * W * (1 + j[6]);
  const double arm_len = 0.32 * H * (1 + j[7]);
  const double leg_len = 0.34 * H * (1 + j[8]);
  const double shoe_h = 0.06 * H * (1 + j[9]);
  const double leg_w = 0.42 * body_w;
  const double gap = body_w - 2 * leg_w;
  const double left = cx - body_w / 2;
  const double right = cx + body_w / 2;
  const double leg_bottom = waist + leg_len;

  Canvas canvas(config);
  canvas.fill(0, H, 0, W, kBackgrounds[background], Region::Background);

  // Legs and lower garment.
  for (const double x0 : {left, left + leg_w + gap}) {
    canvas.fill(waist, leg_bottom, x0, x0 + leg_w, skin, Region::Skin);
    if (attrs.lower.type == "pants")
      canvas.fill(waist, leg_bottom, x0, x0 + leg_w, lower, Region::Lower);
    else if (attrs.lower.type == "shorts")
      canvas.fill(waist, waist + 0.4 * leg_len, x0, x0 + leg_w, lower, Region::Lower);
  }
  if (attrs.lower.type == "skirt") {
    const double flare = 0.08 * body_w;
    canvas.fill(waist, waist + 0.5 * leg_len, left - flare, right + flare, lower, Region::Lower);
  }

  // Shoes.
  for (const double x0 : {left, left + leg_w + gap})
    canvas.fill(leg_bottom, leg_bottom + shoe_h, x0 - 0.1 * leg_w, x0 + 1.1 * leg_w, shoes,
                Region::Shoes);

  // Torso, arms and upper garment.
  const bool long_sleeves = attrs.upper.type != "t-shirt";
  double torso_w = body_w;
  double torso_len = torso_h;
  if (attrs.upper.type == "coat") torso_len = torso_h * 1.35;
  if (attrs.upper.type == "jacket") torso_w = body_w * 1.1;
  const double t_left = cx - torso_w / 2;
  const double t_right = cx + torso_w / 2;
  for (const double x0 : {t_left - arm_w, t_right}) {
    canvas.fill(torso_top, torso_top + arm_len, x0, x0 + arm_w, skin, Region::Skin);
    const double sleeve = long_sleeves ? 0.85 * arm_len : 0.35 * arm_len;
    canvas.fill(torso_top, torso_top + sleeve, x0, x0 + arm_w, upper, Region::Upper);
  }
  canvas.fill(torso_top, torso_top + torso_len, t_left, t_right, upper, Region::Upper);

  // Head and hair.
  canvas.fill(head_top, torso_top, cx - head_w / 2, cx + head_w / 2, skin, Region::Skin);
  canvas.fill(head_top, head_top + 0.35 * head_h, cx - head_w / 2, cx + head_w / 2, hair,
              Region::Hair);

  // Accessory.
  if (attrs.accessory) {
    const Rgb acc = *palette_rgb(attrs.accessory->color);
    if (attrs.accessory->type == "bag") {
      const double bag_w = 0.18 * W * (1 + j[10]);
      const double bag_h = 0.14 * H * (1 + j[11]);
      const double bag_top = waist - 0.05 * H;
      canvas.fill(bag_top, bag_top + bag_h, t_right, t_right + bag_w, acc, Region::Accessory);
    } else {
      const double strap_w = std::max(1.0, 0.07 * W * (1 + j[12]));
      const double strap_len = 0.65 * torso_h * (1 + j[13]);
      for (const double xs : {cx - torso_w / 4, cx + torso_w / 4})
        canvas.fill(torso_top, torso_top + strap_len, xs - strap_w / 2, xs + strap_w / 2, acc,
                    Region::Accessory);
    }
  }
  return canvas.finish();
}

}  // namespace tbps::corpus
