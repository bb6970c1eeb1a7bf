#pragma once

#include <algorithm>
#include <cmath>

#include "orientbot/errors.hpp"
#include "orientbot/tensor.hpp"

namespace orientbot::data {

/// Axis-aligned crop box in pixel units.
struct CropBox {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Crop a region of an HxWx3 image and resize it to 32x32x3 with bilinear
/// interpolation (half-pixel-center sampling; a full-image 32x32 box is the
/// identity).
inline nn::Tensor crop_and_resize(const nn::Tensor& image, const CropBox& box) {
  if (image.rank() != 3 || image.extent(2) != 3)
    throw ShapeError("crop_and_resize expects an HxWx3 image, got " +
                     image.shape_string());
  const double H = static_cast<double>(image.extent(0));
  const double W = static_cast<double>(image.extent(1));
  if (!(box.width > 0.0) || !(box.height > 0.0))
    throw ArgumentError("crop box must have positive area");
  if (box.x < 0.0 || box.y < 0.0 || box.x + box.width > W ||
      box.y + box.height > H)
    throw ArgumentError("crop box exceeds image bounds");

  const std::size_t outN = 32;
  nn::Tensor out({outN, outN, 3});
  const std::size_t inH = image.extent(0), inW = image.extent(1);

  for (std::size_t oy = 0; oy < outN; ++oy) {
    const double sy =
        box.y + (static_cast<double>(oy) + 0.5) * box.height / outN - 0.5;
    const double cy = std::clamp(sy, 0.0, H - 1.0);
    const std::size_t y0 = static_cast<std::size_t>(cy);
    const std::size_t y1 = std::min(y0 + 1, inH - 1);
    const double fy = cy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < outN; ++ox) {
      const double sx =
          box.x + (static_cast<double>(ox) + 0.5) * box.width / outN - 0.5;
      const double cx = std::clamp(sx, 0.0, W - 1.0);
      const std::size_t x0 = static_cast<std::size_t>(cx);
      const std::size_t x1 = std::min(x0 + 1, inW - 1);
      const double fx = cx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = (1.0 - fy) * ((1.0 - fx) * image.at(y0, x0, c) +
                                       fx * image.at(y0, x1, c)) +
                         fy * ((1.0 - fx) * image.at(y1, x0, c) +
                               fx * image.at(y1, x1, c));
        out.at(oy, ox, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace orientbot::data
