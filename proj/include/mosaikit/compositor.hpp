#pragma once

#include <cstdint>
#include <vector>

#include "mosaikit/homography.hpp"
#include "mosaikit/image.hpp"
#include "mosaikit/sequential.hpp"

namespace mosaikit {

// Valid-pixel region of a source frame.
struct FovMask {
  enum class Kind { full, circular };

  Kind kind = Kind::full;
  Point2 center;
  double radius = 0.0;

  static FovMask full() { return {}; }
  static FovMask circular(Point2 c, double r) { return {Kind::circular, c, r}; }

  bool contains(double u, double v) const {
    if (kind == Kind::full) return true;
    const double du = u - center.u;
    const double dv = v - center.v;
    return du * du + dv * dv <= radius * radius;
  }
};

enum class BlendMode { overwrite_last, running_mean };

struct CanvasSpec {
  int width = 0;
  int height = 0;
  Homography offset;  // reference-frame coordinates -> canvas coordinates
};

constexpr double kDefaultCanvasCapPx = 1e8;

// Integer bounding box of all warped frame corners. Throws CanvasCapExceeded
// before any allocation when width*height would exceed area_cap_px.
CanvasSpec compute_canvas(int frame_width, int frame_height,
                          const std::vector<Homography>& absolute,
                          double area_cap_px = kDefaultCanvasCapPx);

struct Mosaic {
  GrayFrame canvas;
  Homography offset;
  std::vector<std::uint32_t> coverage;  // per-pixel contribution count
};

// Inverse-warps every frame into the canvas. overwrite_last paints frames in
// order; running_mean averages all contributions per pixel. Source pixels
// outside the mask contribute nothing.
Mosaic render(const std::vector<GrayFrame>& frames, const SequencePoses& poses,
              const FovMask& mask, BlendMode blend,
              double area_cap_px = kDefaultCanvasCapPx);

// Axis-aligned square inscribed in the circular mask (side = radius * sqrt 2,
// or crop_side when positive), resampled to out_size x out_size. A full mask
// crops the centered square of the full frame.
GrayFrame crop_square_from_circle(const GrayFrame& frame, const FovMask& mask, int out_size = 256,
                                  int crop_side = 0);

}  // namespace mosaikit
