#include "mosaikit/compositor.hpp"

#include <algorithm>
#include <cmath>

#include "mosaikit/error.hpp"
#include "mosaikit/parallel.hpp"

namespace mosaikit {

CanvasSpec compute_canvas(int frame_width, int frame_height,
                          const std::vector<Homography>& absolute, double area_cap_px) {
  if (absolute.empty()) {
    throw_error(ErrorCode::InvalidInput, "no poses");
  }
  const CornerQuad frame_quad =
      CornerQuad(Point2(0, 0), Point2(frame_width - 1, 0), Point2(frame_width - 1, frame_height - 1),
                 Point2(0, frame_height - 1));
  double min_u = 0.0, min_v = 0.0, max_u = 0.0, max_v = 0.0;
  bool first = true;
  for (const Homography& pose : absolute) {
    const CornerQuad mapped = warp_quad(pose, frame_quad);
    for (const Point2& p : mapped.corners) {
      if (!p.is_finite()) {
        throw_error(ErrorCode::InvalidInput, "pose maps a frame corner to a non-finite point");
      }
      if (first) {
        min_u = max_u = p.u;
        min_v = max_v = p.v;
        first = false;
      } else {
        min_u = std::min(min_u, p.u);
        max_u = std::max(max_u, p.u);
        min_v = std::min(min_v, p.v);
        max_v = std::max(max_v, p.v);
      }
    }
  }

  const double lo_u = std::floor(min_u);
  const double lo_v = std::floor(min_v);
  const double width = std::ceil(max_u) - lo_u + 1.0;
  const double height = std::ceil(max_v) - lo_v + 1.0;
  if (width * height > area_cap_px) {
    throw_error(ErrorCode::CanvasCapExceeded,
                "canvas " + std::to_string(width) + "x" + std::to_string(height) +
                    " exceeds the area cap of " + std::to_string(area_cap_px) + " px");
  }

  CanvasSpec spec;
  spec.width = static_cast<int>(width);
  spec.height = static_cast<int>(height);
  spec.offset = Homography::translation(-lo_u, -lo_v);
  return spec;
}

Mosaic render(const std::vector<GrayFrame>& frames, const SequencePoses& poses,
              const FovMask& mask, BlendMode blend, double area_cap_px) {
  if (frames.size() != poses.absolute.size()) {
    throw_error(ErrorCode::SizeMismatch,
                std::to_string(frames.size()) + " frames vs " +
                    std::to_string(poses.absolute.size()) + " poses");
  }
  if (frames.empty()) {
    throw_error(ErrorCode::InvalidInput, "nothing to render");
  }
  const int fw = frames[0].width;
  const int fh = frames[0].height;
  const CanvasSpec spec = compute_canvas(fw, fh, poses.absolute, area_cap_px);

  Mosaic mosaic;
  mosaic.offset = spec.offset;
  mosaic.canvas = GrayFrame(spec.width, spec.height, 0.0f);
  mosaic.coverage.assign(static_cast<std::size_t>(spec.width) * spec.height, 0);

  std::vector<double> sum;
  if (blend == BlendMode::running_mean) {
    sum.assign(mosaic.coverage.size(), 0.0);
  }

  const CornerQuad frame_quad =
      CornerQuad(Point2(0, 0), Point2(fw - 1, 0), Point2(fw - 1, fh - 1), Point2(0, fh - 1));
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const GrayFrame& frame = frames[k];
    const Homography to_canvas = compose(spec.offset, poses.absolute[k]);
    const Homography to_frame = invert(to_canvas);

    // Limit the scan to the projected footprint.
    const CornerQuad mapped = warp_quad(to_canvas, frame_quad);
    double min_u = mapped.corners[0].u, max_u = mapped.corners[0].u;
    double min_v = mapped.corners[0].v, max_v = mapped.corners[0].v;
    for (const Point2& p : mapped.corners) {
      min_u = std::min(min_u, p.u);
      max_u = std::max(max_u, p.u);
      min_v = std::min(min_v, p.v);
      max_v = std::max(max_v, p.v);
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(min_u)));
    const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(max_u)));
    const int y0 = std::max(0, static_cast<int>(std::floor(min_v)));
    const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(max_v)));
    if (x0 > x1 || y0 > y1) continue;

    parallel_for(y0, y1 + 1, [&](int y) {
      for (int x = x0; x <= x1; ++x) {
        const Point2 p = warp_point(to_frame, {static_cast<double>(x), static_cast<double>(y)});
        if (!in_sample_bounds(frame, p.u, p.v) || !mask.contains(p.u, p.v)) continue;
        const double value = bilinear_sample(frame, p.u, p.v);
        const std::size_t idx = static_cast<std::size_t>(y) * spec.width + x;
        if (blend == BlendMode::running_mean) {
          sum[idx] += value;
        } else {
          mosaic.canvas.pixels[idx] = value;
        }
        ++mosaic.coverage[idx];
      }
    });
  }

  if (blend == BlendMode::running_mean) {
    for (std::size_t i = 0; i < sum.size(); ++i) {
      if (mosaic.coverage[i] > 0) {
        mosaic.canvas.pixels[i] = sum[i] / mosaic.coverage[i];
      }
    }
  }
  return mosaic;
}

GrayFrame crop_square_from_circle(const GrayFrame& frame, const FovMask& mask, int out_size,
                                  int crop_side) {
  if (out_size < 2) {
    throw_error(ErrorCode::InvalidConfig, "output size must be >= 2");
  }
  Point2 center;
  double side = 0.0;
  if (mask.kind == FovMask::Kind::circular) {
    center = mask.center;
    if (mask.radius <= 0.0 || center.u - mask.radius < -0.5 || center.v - mask.radius < -0.5 ||
        center.u + mask.radius > frame.width - 0.5 || center.v + mask.radius > frame.height - 0.5) {
      throw_error(ErrorCode::MaskOutsideFrame, "circular mask does not fit inside the frame");
    }
    side = crop_side > 0 ? crop_side
                         : std::floor(2.0 * mask.radius / std::sqrt(2.0));
  } else {
    center = {(frame.width - 1) / 2.0, (frame.height - 1) / 2.0};
    side = crop_side > 0 ? crop_side : std::min(frame.width, frame.height);
  }
  if (side < 2.0) {
    throw_error(ErrorCode::InvalidConfig, "crop side too small");
  }

  const double u0 = center.u - (side - 1.0) / 2.0;
  const double v0 = center.v - (side - 1.0) / 2.0;
  const double scale = (side - 1.0) / (out_size - 1.0);
  GrayFrame out(out_size, out_size);
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) {
      const double su = u0 + x * scale;
      const double sv = v0 + y * scale;
      if (!in_sample_bounds(frame, su, sv)) {
        throw_error(ErrorCode::MaskOutsideFrame, "crop sample leaves the frame");
      }
      out.at(x, y) = bilinear_sample(frame, su, sv);
    }
  }
  return out;
}

}  // namespace mosaikit
