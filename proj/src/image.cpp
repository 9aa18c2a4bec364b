#include "mosaikit/image.hpp"

#include <algorithm>
#include <cmath>

#include "mosaikit/error.hpp"

namespace mosaikit {

bool in_sample_bounds(const GrayFrame& frame, double u, double v) {
  return u >= 0.0 && v >= 0.0 && u <= frame.width - 1.0 && v <= frame.height - 1.0;
}

double bilinear_sample(const GrayFrame& frame, double u, double v) {
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, frame.width - 1);
  const int y1 = std::min(y0 + 1, frame.height - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const double top = (1.0 - fx) * frame.at(x0, y0) + fx * frame.at(x1, y0);
  const double bot = (1.0 - fx) * frame.at(x0, y1) + fx * frame.at(x1, y1);
  return (1.0 - fy) * top + fy * bot;
}

GrayFrame crop(const GrayFrame& frame, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > frame.width || y0 + h > frame.height) {
    throw_error(ErrorCode::OutOfBounds, "crop window leaves the frame");
  }
  GrayFrame out(w, h);
  for (int y = 0; y < h; ++y) {
    const double* src = &frame.pixels[static_cast<std::size_t>(y0 + y) * frame.width + x0];
    std::copy(src, src + w, &out.pixels[static_cast<std::size_t>(y) * w]);
  }
  return out;
}

GrayFrame box_downsample(const GrayFrame& frame) {
  const int w = frame.width / 2;
  const int h = frame.height / 2;
  GrayFrame out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sum = static_cast<double>(frame.at(2 * x, 2 * y)) + frame.at(2 * x + 1, 2 * y) +
                         frame.at(2 * x, 2 * y + 1) + frame.at(2 * x + 1, 2 * y + 1);
      out.at(x, y) = 0.25 * sum;
    }
  }
  return out;
}

double intensity_mean(const GrayFrame& frame) {
  double sum = 0.0;
  for (double p : frame.pixels) sum += p;
  return frame.pixels.empty() ? 0.0 : sum / static_cast<double>(frame.pixels.size());
}

double intensity_variance(const GrayFrame& frame) {
  if (frame.pixels.empty()) return 0.0;
  const double mean = intensity_mean(frame);
  double sum = 0.0;
  for (double p : frame.pixels) {
    const double d = p - mean;
    sum += d * d;
  }
  return sum / static_cast<double>(frame.pixels.size());
}

std::uint8_t quantize_intensity(double value) {
  const double clamped = std::clamp(value, 0.0, 255.0);
  return static_cast<std::uint8_t>(std::lround(clamped));
}

}  // namespace mosaikit
