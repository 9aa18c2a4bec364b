#pragma once

#include <cstdint>
#include <vector>

#include "mosaikit/types.hpp"

namespace mosaikit {

// Single-channel image, row-major, intensities kept as reals in [0, 255].
struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayFrame() = default;
  GrayFrame(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool same_size(const GrayFrame& o) const { return width == o.width && height == o.height; }
  bool empty() const { return pixels.empty(); }
};

// True when (u, v) can be sampled bilinearly, i.e. lies in [0, w-1] x [0, h-1].
bool in_sample_bounds(const GrayFrame& frame, double u, double v);

// Bilinear interpolation; caller guarantees in_sample_bounds.
double bilinear_sample(const GrayFrame& frame, double u, double v);

// Exact integer-aligned crop. Throws OutOfBounds when the window leaves the frame.
GrayFrame crop(const GrayFrame& frame, int x0, int y0, int w, int h);

// Factor-2 box downsample (2x2 block means); odd trailing row/column dropped.
GrayFrame box_downsample(const GrayFrame& frame);

double intensity_mean(const GrayFrame& frame);
double intensity_variance(const GrayFrame& frame);

std::uint8_t quantize_intensity(double value);

}  // namespace mosaikit
