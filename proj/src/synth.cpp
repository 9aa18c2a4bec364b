#include "mosaikit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mosaikit/error.hpp"
#include "mosaikit/parallel.hpp"
#include "mosaikit/png_io.hpp"
#include "mosaikit/rng.hpp"
#include "mosaikit/text_io.hpp"

namespace mosaikit {

namespace {

double lattice_value(std::uint64_t seed, int octave, int gx, int gy) {
  Rng rng = Rng::derive(seed, {static_cast<std::uint64_t>(octave),
                               static_cast<std::uint64_t>(static_cast<std::int64_t>(gx)),
                               static_cast<std::uint64_t>(static_cast<std::int64_t>(gy))});
  return rng.uniform(-1.0, 1.0);
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, int octave, double x, double y, double spacing) {
  const double gx = x / spacing;
  const double gy = y / spacing;
  const int ix = static_cast<int>(std::floor(gx));
  const int iy = static_cast<int>(std::floor(gy));
  const double fx = smoothstep(gx - ix);
  const double fy = smoothstep(gy - iy);
  const double v00 = lattice_value(seed, octave, ix, iy);
  const double v10 = lattice_value(seed, octave, ix + 1, iy);
  const double v01 = lattice_value(seed, octave, ix, iy + 1);
  const double v11 = lattice_value(seed, octave, ix + 1, iy + 1);
  const double top = v00 + (v10 - v00) * fx;
  const double bot = v01 + (v11 - v01) * fx;
  return top + (bot - top) * fy;
}

// Camera pose: frame pixel -> texture pixel, rigid.
struct CameraPose {
  double angle_rad = 0.0;
  Point2 center;  // texture position of the frame center
};

Homography pose_matrix(const CameraPose& pose, int frame_size) {
  const double fc = (frame_size - 1) / 2.0;
  Homography h = Homography::rotation(pose.angle_rad);
  // translation = center - R * frame_center
  h.m(0, 2) = pose.center.u - (h.m(0, 0) * fc + h.m(0, 1) * fc);
  h.m(1, 2) = pose.center.v - (h.m(1, 0) * fc + h.m(1, 1) * fc);
  return h;
}

CameraPose trajectory_pose(const TrajectoryConfig& cfg, const Point2& texture_center, int k) {
  CameraPose pose;
  pose.angle_rad = k * cfg.rotation_per_frame_rad;
  switch (cfg.kind) {
    case TrajectoryKind::circular: {
      pose.center.u = texture_center.u + cfg.radius_px * std::cos(pose.angle_rad);
      pose.center.v = texture_center.v + cfg.radius_px * std::sin(pose.angle_rad);
      break;
    }
    case TrajectoryKind::spiral: {
      const double r = cfg.radius_px + k * cfg.radius_growth_px_per_frame;
      pose.center.u = texture_center.u + r * std::cos(pose.angle_rad);
      pose.center.v = texture_center.v + r * std::sin(pose.angle_rad);
      break;
    }
    case TrajectoryKind::linear: {
      const double offset = (k - (cfg.frames - 1) / 2.0) * cfg.radius_px;
      pose.center.u = texture_center.u + offset;
      pose.center.v = texture_center.v;
      break;
    }
  }
  return pose;
}

}  // namespace

GrayFrame make_texture(int size, std::uint64_t seed) {
  if (size < 64) {
    throw_error(ErrorCode::InvalidConfig, "texture size must be >= 64");
  }
  GrayFrame tex(size, size);

  const double spacings[4] = {size / 8.0, size / 16.0, size / 32.0, size / 64.0};
  const double amplitudes[4] = {52.0, 30.0, 16.0, 9.0};
  parallel_for(0, size, [&](int y) {
    for (int x = 0; x < size; ++x) {
      double v = 128.0;
      for (int o = 0; o < 4; ++o) {
        v += amplitudes[o] * value_noise(seed, o, x, y, spacings[o]);
      }
      tex.at(x, y) = std::clamp(v, 25.0, 230.0);
    }
  });

  // Dark curvilinear structures: random walks stamped into a depth mask.
  GrayFrame mask(size, size, 0.0);
  const int walks = std::max(6, size / 96);
  for (int j = 0; j < walks; ++j) {
    Rng rng = Rng::derive(seed, {0x76657373ULL, static_cast<std::uint64_t>(j)});
    double px = rng.uniform(0.1 * size, 0.9 * size);
    double py = rng.uniform(0.1 * size, 0.9 * size);
    double heading = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double sigma = rng.uniform(1.5, 4.0);
    const int steps = static_cast<int>(rng.uniform(1.0, 2.0) * size);
    const int reach = static_cast<int>(std::ceil(3.0 * sigma));
    for (int s = 0; s < steps; ++s) {
      heading += rng.uniform(-0.25, 0.25);
      px += std::cos(heading);
      py += std::sin(heading);
      if (px < reach || py < reach || px > size - 1.0 - reach || py > size - 1.0 - reach) break;
      const int cx = static_cast<int>(std::lround(px));
      const int cy = static_cast<int>(std::lround(py));
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
          const double uu = cx + dx - px;
          const double vv = cy + dy - py;
          const double w = std::exp(-(uu * uu + vv * vv) / (2.0 * sigma * sigma));
          double& cell = mask.at(cx + dx, cy + dy);
          cell = std::max(cell, w);
        }
      }
    }
  }
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      tex.at(x, y) = std::clamp(tex.at(x, y) * (1.0 - 0.55 * mask.at(x, y)), 20.0, 235.0);
    }
  }
  return tex;
}

SyntheticSequence generate(const GrayFrame& texture, const TrajectoryConfig& cfg) {
  if (cfg.frames < 2) {
    throw_error(ErrorCode::InvalidConfig, "frames >= 2 required");
  }
  if (cfg.frame_size < 64) {
    throw_error(ErrorCode::InvalidConfig, "frame_size must be >= 64");
  }
  const Point2 tex_center{(texture.width - 1) / 2.0, (texture.height - 1) / 2.0};

  std::vector<Homography> poses(cfg.frames);
  for (int k = 0; k < cfg.frames; ++k) {
    poses[k] = pose_matrix(trajectory_pose(cfg, tex_center, k), cfg.frame_size);
  }

  // Every frame corner must stay on the texture (1 px slack for bilinear).
  const CornerQuad frame_quad = CornerQuad::axis_aligned(0, 0, cfg.frame_size);
  for (int k = 0; k < cfg.frames; ++k) {
    const CornerQuad mapped = warp_quad(poses[k], frame_quad);
    for (const Point2& p : mapped.corners) {
      if (p.u < 1.0 || p.v < 1.0 || p.u > texture.width - 2.0 || p.v > texture.height - 2.0) {
        throw_error(ErrorCode::TextureTooSmall,
                    "frame " + std::to_string(k) + " leaves the texture");
      }
    }
  }

  SyntheticSequence seq;
  seq.frames.assign(cfg.frames, GrayFrame());
  parallel_for(0, cfg.frames, [&](int k) {
    GrayFrame frame(cfg.frame_size, cfg.frame_size);
    const Homography& pose = poses[k];
    for (int y = 0; y < cfg.frame_size; ++y) {
      for (int x = 0; x < cfg.frame_size; ++x) {
        const Point2 p = warp_point(pose, {static_cast<double>(x), static_cast<double>(y)});
        frame.at(x, y) = bilinear_sample(texture, p.u, p.v);
      }
    }
    seq.frames[k] = std::move(frame);
  });

  seq.gt_absolute.resize(cfg.frames);
  seq.gt_relative.resize(cfg.frames - 1);
  const Homography inv_first = invert(poses[0]);
  for (int k = 0; k < cfg.frames; ++k) {
    seq.gt_absolute[k] = compose(inv_first, poses[k]);
  }
  for (int k = 0; k + 1 < cfg.frames; ++k) {
    seq.gt_relative[k] = compose(invert(poses[k]), poses[k + 1]);
  }
  return seq;
}

SyntheticSequence add_degradations(const SyntheticSequence& seq, const DegradationSpec& spec) {
  SyntheticSequence out;
  out.gt_absolute = seq.gt_absolute;
  out.gt_relative = seq.gt_relative;
  out.frames = seq.frames;
  if (spec.empty()) return out;

  struct Blob {
    Point2 start;
    Point2 velocity;
  };
  std::vector<Blob> blobs(std::max(0, spec.specular_blob_count));
  for (std::size_t j = 0; j < blobs.size(); ++j) {
    Rng rng = Rng::derive(spec.seed, {0x626c6f62ULL, static_cast<std::uint64_t>(j)});
    const int size = seq.frames.empty() ? 0 : seq.frames[0].width;
    blobs[j].start = {rng.uniform(0.2 * size, 0.8 * size), rng.uniform(0.2 * size, 0.8 * size)};
    const double heading = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    blobs[j].velocity = {spec.blob_drift_px * std::cos(heading),
                         spec.blob_drift_px * std::sin(heading)};
  }

  // Triangle-wave reflection keeps drifting blobs inside [lo, hi].
  const auto reflect = [](double x, double lo, double hi) {
    const double span = hi - lo;
    double t = std::fmod(x - lo, 2.0 * span);
    if (t < 0.0) t += 2.0 * span;
    return lo + (t <= span ? t : 2.0 * span - t);
  };

  parallel_for(0, static_cast<int>(out.frames.size()), [&](int k) {
    GrayFrame& frame = out.frames[k];
    const int w = frame.width;
    const int h = frame.height;
    const double cu = (w - 1) / 2.0;
    const double cv = (h - 1) / 2.0;
    const double r_corner_sq = cu * cu + cv * cv;

    if (spec.vignette_strength > 0.0) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double du = x - cu;
          const double dv = y - cv;
          const double factor = 1.0 - spec.vignette_strength * (du * du + dv * dv) / r_corner_sq;
          frame.at(x, y) = frame.at(x, y) * factor;
        }
      }
    }

    if (!blobs.empty()) {
      const double radius = spec.blob_radius_px;
      const double sigma = radius / 2.0;
      const double edge = std::exp(-radius * radius / (2.0 * sigma * sigma));
      for (const Blob& blob : blobs) {
        const double bx = reflect(blob.start.u + k * blob.velocity.u, 0.1 * w, 0.9 * w);
        const double by = reflect(blob.start.v + k * blob.velocity.v, 0.1 * h, 0.9 * h);
        const int x0 = std::max(0, static_cast<int>(std::floor(bx - radius)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(bx + radius)));
        const int y0 = std::max(0, static_cast<int>(std::floor(by - radius)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(by + radius)));
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) {
            const double d_sq = (x - bx) * (x - bx) + (y - by) * (y - by);
            if (d_sq >= radius * radius) continue;
            // Gaussian falloff rescaled to vanish exactly at the disc edge.
            const double g = (std::exp(-d_sq / (2.0 * sigma * sigma)) - edge) / (1.0 - edge);
            const double wgt = spec.blob_strength * g;
            frame.at(x, y) = frame.at(x, y) + (255.0 - frame.at(x, y)) * wgt;
          }
        }
      }
    }

    if (spec.noise_sigma > 0.0) {
      Rng rng = Rng::derive(spec.seed, {0x6e6f697365ULL, static_cast<std::uint64_t>(k)});
      for (double& p : frame.pixels) {
        p = std::clamp(p + rng.normal(0.0, spec.noise_sigma), 0.0, 255.0);
      }
    }
  });
  return out;
}

void write_sequence(const SyntheticSequence& seq, const std::filesystem::path& dir,
                    const std::vector<std::pair<std::string, std::string>>& manifest_extra) {
  if (seq.frames.empty()) {
    throw_error(ErrorCode::InvalidInput, "empty sequence");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw_error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  }
  char name[64];
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    std::snprintf(name, sizeof(name), "frame_%06zu.png", k);
    write_png_gray8(dir / name, seq.frames[k]);
  }
  write_homography_file(dir / "gt_absolute.txt", seq.gt_absolute,
                        {"absolute: frame k -> frame 0, one per frame"});
  write_homography_file(dir / "gt_relative.txt", seq.gt_relative,
                        {"relative: frame k+1 -> frame k, one per adjacent pair"});

  std::string manifest;
  manifest += "frames: " + std::to_string(seq.frames.size()) + "\n";
  manifest += "frame_width: " + std::to_string(seq.frames[0].width) + "\n";
  manifest += "frame_height: " + std::to_string(seq.frames[0].height) + "\n";
  for (const auto& [key, value] : manifest_extra) {
    manifest += key + ": " + value + "\n";
  }
  write_text_atomic(dir / "manifest.txt", manifest);
}

SyntheticSequence read_sequence(const std::filesystem::path& dir) {
  SyntheticSequence seq;
  seq.gt_absolute = read_homography_file(dir / "gt_absolute.txt").homographies;
  seq.gt_relative = read_homography_file(dir / "gt_relative.txt").homographies;
  if (seq.gt_absolute.empty() ||
      seq.gt_relative.size() + 1 != seq.gt_absolute.size()) {
    throw_error(ErrorCode::MalformedFile,
                "gt_relative length must be one less than gt_absolute");
  }
  char name[64];
  for (std::size_t k = 0; k < seq.gt_absolute.size(); ++k) {
    std::snprintf(name, sizeof(name), "frame_%06zu.png", k);
    seq.frames.push_back(read_png_gray8(dir / name));
  }
  return seq;
}

}  // namespace mosaikit
