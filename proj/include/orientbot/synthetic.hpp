#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "orientbot/dataset.hpp"
#include "orientbot/labels.hpp"
#include "orientbot/rng.hpp"
#include "orientbot/tensor.hpp"

namespace orientbot::data {

/// Appearance randomization knobs for the synthetic figure renderer.
struct StyleParams {
  double illumLo = 0.5;      // illumination scale range
  double illumHi = 1.5;
  double jitterPx = 2.0;     // max framing jitter, pixels
  double colorJitter = 0.05; // per-channel multiplicative color noise
  double backgroundLo = 0.05;
  double backgroundHi = 0.95;
};

namespace detail {

struct Rgb {
  double r, g, b;
  Rgb scaled(double s) const { return {r * s, g * s, b * s}; }
};

// Stylized articulated figure, body frame: `f` is the facing direction,
// `l` the person's left, Z up. All lengths in meters, feet at z=0.
struct Figure {
  // color slots, jittered per sample
  Rgb shirt{0.25, 0.45, 0.85};
  Rgb sleeveRight{0.15, 0.27, 0.51};  // darker right sleeve disambiguates chirality
  Rgb pants{0.18, 0.16, 0.22};
  Rgb skin{0.85, 0.70, 0.55};
  Rgb face{0.30, 0.18, 0.12};
  Rgb chest{0.90, 0.15, 0.15};
};

struct Hit {
  double x = -1e300;  // camera looks along -X; larger x is nearer
  Rgb color{0, 0, 0};
};

// Orthographic camera on the +X axis, image right = +Y, image up = +Z.
// The scene is the figure rotated so its facing bearing equals `angleDeg`
// (0 = facing the camera). Each query casts a ray at world (y=u, z=v).
class FigureRaycaster {
 public:
  FigureRaycaster(double angleDeg, const Figure& fig) : fig_(fig) {
    const double t = angleDeg * 3.14159265358979323846 / 180.0;
    fx_ = std::cos(t);
    fy_ = std::sin(t);
    // left = z cross f
    lx_ = -fy_;
    ly_ = fx_;
  }

  bool cast(double u, double v, Hit& best) const {
    bool any = false;
    // legs
    any |= cylinder(0.0, -0.095, 0.055, 0.0, 0.90, fig_.pants, u, v, best);
    any |= cylinder(0.0, 0.095, 0.055, 0.0, 0.90, fig_.pants, u, v, best);
    // torso
    any |= prism(0.0, 0.0, 0.07, 0.18, 0.90, 1.35, fig_.shirt, u, v, best);
    // arms (right = -left)
    any |= cylinder(0.02, 0.245, 0.045, 0.86, 1.33, fig_.shirt, u, v, best);
    any |= cylinder(0.02, -0.245, 0.045, 0.86, 1.33, fig_.sleeveRight, u, v, best);
    // head
    any |= sphere(0.0, 0.0, 1.50, 0.11, fig_.skin, u, v, best);
    // front-only markers; occluded by head/torso when facing away
    any |= prism(0.085, 0.0, 0.035, 0.055, 1.44, 1.54, fig_.face, u, v, best);
    any |= prism(0.08, 0.0, 0.012, 0.10, 1.08, 1.28, fig_.chest, u, v, best);
    return any;
  }

 private:
  // body (cf, cl) offsets to world xy
  double wx(double cf, double cl) const { return cf * fx_ + cl * lx_; }
  double wy(double cf, double cl) const { return cf * fy_ + cl * ly_; }

  bool cylinder(double cf, double cl, double R, double z0, double z1,
                const Rgb& color, double u, double v, Hit& best) const {
    if (v < z0 || v > z1) return false;
    const double dy = u - wy(cf, cl);
    const double d2 = R * R - dy * dy;
    if (d2 < 0.0) return false;
    return consider(wx(cf, cl) + std::sqrt(d2), color, best);
  }

  bool sphere(double cf, double cl, double cz, double R, const Rgb& color,
              double u, double v, Hit& best) const {
    const double dy = u - wy(cf, cl);
    const double dz = v - cz;
    const double d2 = R * R - dy * dy - dz * dz;
    if (d2 < 0.0) return false;
    return consider(wx(cf, cl) + std::sqrt(d2), color, best);
  }

  // vertical prism with rectangular cross-section (half extents hf along f,
  // hl along l); solves the two linear slab constraints for the ray's x
  bool prism(double cf, double cl, double hf, double hl, double z0, double z1,
             const Rgb& color, double u, double v, Hit& best) const {
    if (v < z0 || v > z1) return false;
    const double cx = wx(cf, cl), cy = wy(cf, cl);
    double xlo = -1e300, xhi = 1e300;
    // a = fx*(x-cx) + fy*(u-cy) in [-hf, hf]; b likewise with l and hl
    if (!slab(fx_, fy_ * (u - cy), hf, cx, xlo, xhi)) return false;
    if (!slab(lx_, ly_ * (u - cy), hl, cx, xlo, xhi)) return false;
    if (xlo > xhi) return false;
    return consider(xhi, color, best);
  }

  static bool slab(double m, double q, double h, double cx, double& xlo,
                   double& xhi) {
    if (std::fabs(m) < 1e-12) return std::fabs(q) <= h;
    const double a = cx + (-h - q) / m;
    const double b = cx + (h - q) / m;
    xlo = std::max(xlo, std::min(a, b));
    xhi = std::min(xhi, std::max(a, b));
    return true;
  }

  static bool consider(double x, const Rgb& color, Hit& best) {
    if (x <= best.x) return false;
    best.x = x;
    best.color = color;
    return true;
  }

  Figure fig_;
  double fx_, fy_, lx_, ly_;
};

inline double quantize_f32(double v) {
  return static_cast<double>(static_cast<float>(v));
}

inline Rgb jitter_color(const Rgb& c, double amount, Rng& rng) {
  auto one = [&](double v) {
    return std::clamp(v * (1.0 + rng.uniform(-amount, amount)), 0.0, 1.0);
  };
  return {one(c.r), one(c.g), one(c.b)};
}

/// Renders the figure at the given orientation, consuming appearance noise
/// from `rng`. Output is 32x32x3, values quantized to f32 so datasets
/// round-trip bit-exactly through their f32 file payloads.
inline nn::Tensor render_figure(double angleDeg, Rng& rng,
                                const StyleParams& style) {
  Figure fig;
  fig.shirt = jitter_color(fig.shirt, style.colorJitter, rng);
  fig.sleeveRight = jitter_color(fig.sleeveRight, style.colorJitter, rng);
  fig.pants = jitter_color(fig.pants, style.colorJitter, rng);
  fig.skin = jitter_color(fig.skin, style.colorJitter, rng);
  fig.face = jitter_color(fig.face, style.colorJitter, rng);
  fig.chest = jitter_color(fig.chest, style.colorJitter, rng);
  const Rgb background{rng.uniform(style.backgroundLo, style.backgroundHi),
                       rng.uniform(style.backgroundLo, style.backgroundHi),
                       rng.uniform(style.backgroundLo, style.backgroundHi)};
  const double illum = rng.uniform(style.illumLo, style.illumHi);

  const double winW = 0.88, winH = 1.80;
  const double pxU = winW / kImageSize, pxV = winH / kImageSize;
  const double ju = rng.uniform(-style.jitterPx, style.jitterPx) * pxU;
  const double jv = rng.uniform(-style.jitterPx, style.jitterPx) * pxV;
  const double u0 = -winW / 2 + ju;
  const double v0 = -0.06 + jv;

  FigureRaycaster caster(angleDeg, fig);
  nn::Tensor img({kImageSize, kImageSize, kImageChannels});
  const int ss = 3;  // supersampling grid per pixel

  for (std::size_t py = 0; py < kImageSize; ++py) {
    // image row 0 is the top of the frame
    const double vTop = v0 + winH - static_cast<double>(py) * pxV;
    for (std::size_t px = 0; px < kImageSize; ++px) {
      const double uLeft = u0 + static_cast<double>(px) * pxU;
      double acc[3] = {0, 0, 0};
      for (int sy = 0; sy < ss; ++sy) {
        const double v = vTop - (sy + 0.5) * pxV / ss;
        for (int sx = 0; sx < ss; ++sx) {
          const double u = uLeft + (sx + 0.5) * pxU / ss;
          Hit hit;
          const Rgb c = caster.cast(u, v, hit) ? hit.color : background;
          acc[0] += c.r;
          acc[1] += c.g;
          acc[2] += c.b;
        }
      }
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double mean = acc[ch] / (ss * ss);
        img.at(py, px, ch) =
            quantize_f32(std::clamp(mean * illum, 0.0, 1.0));
      }
    }
  }
  return img;
}

}  // namespace detail

/// Joint triple consistent with a figure facing `angleDeg` in the canonical
/// camera frame (observer along +X, i.e. observer bearing 0).
inline labels::JointTriple canonical_joints(double angleDeg) {
  const double t = angleDeg * 3.14159265358979323846 / 180.0;
  const double rx = std::sin(t), ry = -std::cos(t);  // person's right
  labels::JointTriple j;
  j.neck = {0.0, 0.0, 1.4};
  j.rightUpperLeg = {0.15 * rx, 0.15 * ry, 0.9};
  j.leftUpperLeg = {-0.15 * rx, -0.15 * ry, 0.9};
  return j;
}

/// Render one figure image with a fresh noise stream.
inline nn::Tensor render_figure(double angleDeg, std::uint64_t seed,
                                const StyleParams& style = {}) {
  Rng rng(mix_seed(seed));
  return detail::render_figure(angleDeg, rng, style);
}

/// Synthetic labeled dataset: n figures at uniformly sampled orientations
/// with randomized background, illumination and framing jitter. Each sample
/// carries the continuous angle, the derived class label and a consistent
/// joint triple. Per-sample noise streams depend only on (seed, index), so
/// parallel and serial generation produce identical datasets.
inline Dataset generate_synthetic(std::size_t n, std::uint64_t seed,
                                  const StyleParams& style = {},
                                  std::size_t threads = 1) {
  if (n == 0) throw ArgumentError("generate_synthetic: n must be positive");
  Dataset ds;
  ds.provenance = Provenance::synthetic;
  ds.seed = seed;
  ds.samples.resize(n);
  // the outer mix keeps the derived seed sets of different dataset seeds
  // disjoint
  const std::uint64_t base = mix_seed(seed);
  auto renderRange = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng(mix_seed(base ^ static_cast<std::uint64_t>(i)));
      // quantize the angle to f32 first so the stored label/angle/joints all
      // describe the exact on-disk value
      const double angle =
          labels::wrap_degrees(detail::quantize_f32(rng.uniform(0.0, 360.0)));
      LabeledSample& s = ds.samples[i];
      s.image = detail::render_figure(angle, rng, style);
      s.trueAngle = angle;
      s.classLabel = labels::angle_to_class(angle);
      s.joints = canonical_joints(angle);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  if (workers == 1) {
    renderRange(0, n);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(renderRange, n * w / workers, n * (w + 1) / workers);
    for (auto& t : pool) t.join();
  }
  return ds;
}

}  // namespace orientbot::data
