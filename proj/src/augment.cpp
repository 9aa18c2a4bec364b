#include "mosaikit/augment.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mosaikit/error.hpp"
#include "mosaikit/parallel.hpp"
#include "mosaikit/png_io.hpp"
#include "mosaikit/text_io.hpp"

namespace mosaikit {

namespace {

// Detects quads that are exactly an integer-aligned patch_size square, which
// sample_patch can serve with a pixel copy instead of the DLT path.
bool integer_axis_aligned(const CornerQuad& quad, int patch_size, int* x0, int* y0) {
  const double u0 = quad.corners[0].u;
  const double v0 = quad.corners[0].v;
  if (u0 != std::floor(u0) || v0 != std::floor(v0)) return false;
  const CornerQuad expected = CornerQuad::axis_aligned(u0, v0, patch_size);
  for (int i = 0; i < 4; ++i) {
    if (quad.corners[i].u != expected.corners[i].u) return false;
    if (quad.corners[i].v != expected.corners[i].v) return false;
  }
  *x0 = static_cast<int>(u0);
  *y0 = static_cast<int>(v0);
  return true;
}

PatchPair draw_pair(const GrayFrame& frame, const AugmentConfig& cfg, Rng& rng,
                    MotionParams* motion_out) {
  const int span_x = frame.width - cfg.patch_size - 2 * cfg.margin;
  const int span_y = frame.height - cfg.patch_size - 2 * cfg.margin;
  if (span_x < 0 || span_y < 0) {
    throw_error(ErrorCode::FrameTooSmall,
                "frame " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                    " cannot host patch " + std::to_string(cfg.patch_size) + " with margin " +
                    std::to_string(cfg.margin));
  }

  const int pos_u = rng.uniform_int(cfg.margin, cfg.margin + span_x);
  const int pos_v = rng.uniform_int(cfg.margin, cfg.margin + span_y);
  const double rot_max = deg_to_rad(cfg.max_rotation_deg);
  MotionParams m;
  m.angle_rad = rng.uniform(-rot_max, rot_max);
  m.shift_x = rng.uniform(-cfg.max_shift_px, cfg.max_shift_px);
  m.shift_y = rng.uniform(-cfg.max_shift_px, cfg.max_shift_px);
  if (motion_out) *motion_out = m;

  PatchPair pair;
  pair.anchor = CornerQuad::axis_aligned(pos_u, pos_v, cfg.patch_size);
  const CornerQuad displaced = apply_motion(pair.anchor, m);
  pair.patch_a = sample_patch(frame, pair.anchor, cfg.patch_size);
  pair.patch_b = sample_patch(frame, displaced, cfg.patch_size);

  FourPointHomography gt;
  for (int i = 0; i < 4; ++i) {
    gt.du[i] = displaced.corners[i].u - pair.anchor.corners[i].u;
    gt.dv[i] = displaced.corners[i].v - pair.anchor.corners[i].v;
  }
  pair.gt = gt;
  return pair;
}

}  // namespace

void validate_config(const AugmentConfig& cfg) {
  if (cfg.patch_size < 2) {
    throw_error(ErrorCode::InvalidConfig, "patch_size must be >= 2");
  }
  if (cfg.margin < 0 || cfg.max_shift_px < 0.0 || cfg.max_rotation_deg < 0.0) {
    throw_error(ErrorCode::InvalidConfig, "margin and motion ranges must be non-negative");
  }
  const double sweep =
      cfg.max_shift_px + cfg.patch_size * std::sin(deg_to_rad(cfg.max_rotation_deg));
  if (cfg.margin < std::ceil(sweep)) {
    throw_error(ErrorCode::InvalidConfig,
                "margin " + std::to_string(cfg.margin) + " below worst-case corner sweep " +
                    std::to_string(std::ceil(sweep)));
  }
}

CornerQuad apply_motion(const CornerQuad& anchor, const MotionParams& m) {
  const Point2 c = anchor.centroid();
  const double cos_a = std::cos(m.angle_rad);
  const double sin_a = std::sin(m.angle_rad);
  CornerQuad out;
  for (int i = 0; i < 4; ++i) {
    const double du = anchor.corners[i].u - c.u;
    const double dv = anchor.corners[i].v - c.v;
    out.corners[i].u = cos_a * du + sin_a * dv + c.u + m.shift_x;
    out.corners[i].v = -sin_a * du + cos_a * dv + c.v + m.shift_y;
  }
  return out;
}

GrayFrame sample_patch(const GrayFrame& frame, const CornerQuad& quad, int patch_size) {
  int x0 = 0;
  int y0 = 0;
  if (integer_axis_aligned(quad, patch_size, &x0, &y0)) {
    return crop(frame, x0, y0, patch_size, patch_size);
  }

  const CornerQuad canonical = CornerQuad::axis_aligned(0, 0, patch_size);
  FourPointHomography offsets;
  for (int i = 0; i < 4; ++i) {
    offsets.du[i] = quad.corners[i].u - canonical.corners[i].u;
    offsets.dv[i] = quad.corners[i].v - canonical.corners[i].v;
  }
  const Homography grid_to_frame = four_point_to_matrix(canonical, offsets);

  GrayFrame out(patch_size, patch_size);
  for (int y = 0; y < patch_size; ++y) {
    for (int x = 0; x < patch_size; ++x) {
      const Point2 p = warp_point(grid_to_frame, {static_cast<double>(x), static_cast<double>(y)});
      if (!in_sample_bounds(frame, p.u, p.v)) {
        throw_error(ErrorCode::OutOfBounds, "patch sample leaves the frame");
      }
      out.at(x, y) = bilinear_sample(frame, p.u, p.v);
    }
  }
  return out;
}

PatchPair generate_pair(const GrayFrame& frame, const AugmentConfig& cfg, Rng& rng) {
  validate_config(cfg);
  return draw_pair(frame, cfg, rng, nullptr);
}

DatasetManifest export_dataset(const std::vector<GrayFrame>& frames, const AugmentConfig& cfg,
                               int count, const std::filesystem::path& out_dir) {
  validate_config(cfg);
  if (count < 1) {
    throw_error(ErrorCode::InvalidConfig, "count must be >= 1");
  }
  if (frames.empty()) {
    throw_error(ErrorCode::InvalidConfig, "no source frames");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw_error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  }

  struct Row {
    PatchPair pair;
    MotionParams motion;
  };
  std::vector<Row> rows(count);
  parallel_for(0, count, [&](int idx) {
    Rng rng = Rng::derive(cfg.seed, {static_cast<std::uint64_t>(idx)});
    rows[idx].pair = draw_pair(frames[idx % frames.size()], cfg, rng, &rows[idx].motion);
  });

  DatasetManifest manifest;
  manifest.directory = out_dir;
  manifest.config = cfg;
  manifest.count = count;

  std::string labels =
      "idx,u1,v1,u2,v2,u3,v3,u4,v4,du1,dv1,du2,dv2,du3,dv3,du4,dv4,beta_deg,dx,dy\n";
  char name[64];
  for (int idx = 0; idx < count; ++idx) {
    const Row& row = rows[idx];
    std::snprintf(name, sizeof(name), "pair_%06d_a.png", idx);
    const std::string file_a = name;
    std::snprintf(name, sizeof(name), "pair_%06d_b.png", idx);
    const std::string file_b = name;
    write_png_gray8(out_dir / file_a, row.pair.patch_a);
    write_png_gray8(out_dir / file_b, row.pair.patch_b);
    manifest.pair_files.push_back(file_a);
    manifest.pair_files.push_back(file_b);

    std::string line = std::to_string(idx);
    for (int i = 0; i < 4; ++i) {
      line += "," + format_sig9(row.pair.anchor.corners[i].u);
      line += "," + format_sig9(row.pair.anchor.corners[i].v);
    }
    for (int i = 0; i < 4; ++i) {
      line += "," + format_sig9(row.pair.gt->du[i]);
      line += "," + format_sig9(row.pair.gt->dv[i]);
    }
    line += "," + format_sig9(rad_to_deg(row.motion.angle_rad));
    line += "," + format_sig9(row.motion.shift_x);
    line += "," + format_sig9(row.motion.shift_y);
    labels += line + "\n";
  }
  write_text_atomic(out_dir / "labels.csv", labels);
  manifest.labels_file = "labels.csv";

  std::string echo;
  echo += "count: " + std::to_string(count) + "\n";
  echo += "patch_size: " + std::to_string(cfg.patch_size) + "\n";
  echo += "max_rotation_deg: " + format_sig9(cfg.max_rotation_deg) + "\n";
  echo += "max_shift_px: " + format_sig9(cfg.max_shift_px) + "\n";
  echo += "margin: " + std::to_string(cfg.margin) + "\n";
  echo += "seed: " + std::to_string(cfg.seed) + "\n";
  echo += "labels: labels.csv\n";
  for (const std::string& f : manifest.pair_files) {
    echo += "file: " + f + "\n";
  }
  write_text_atomic(out_dir / "manifest.txt", echo);
  manifest.manifest_file = "manifest.txt";
  return manifest;
}

std::vector<LabeledPair> read_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path labels_path = dir / "labels.csv";
  if (!std::filesystem::exists(labels_path)) {
    throw_error(ErrorCode::MalformedFile, "missing " + labels_path.string());
  }
  std::istringstream in(read_text(labels_path));
  std::string line;
  if (!std::getline(in, line)) {
    throw_error(ErrorCode::MalformedFile, "empty labels.csv");
  }
  std::vector<LabeledPair> out;
  char name[64];
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 20) {
      throw_error(ErrorCode::MalformedFile, "labels.csv row needs 20 fields");
    }
    LabeledPair lp;
    lp.index = static_cast<int>(parse_long(f[0], "labels.csv"));
    for (int i = 0; i < 4; ++i) {
      lp.pair.anchor.corners[i].u = parse_double(f[1 + 2 * i], "labels.csv");
      lp.pair.anchor.corners[i].v = parse_double(f[2 + 2 * i], "labels.csv");
    }
    FourPointHomography gt;
    for (int i = 0; i < 4; ++i) {
      gt.du[i] = parse_double(f[9 + 2 * i], "labels.csv");
      gt.dv[i] = parse_double(f[10 + 2 * i], "labels.csv");
    }
    lp.pair.gt = gt;
    lp.beta_deg = parse_double(f[17], "labels.csv");
    lp.shift_x = parse_double(f[18], "labels.csv");
    lp.shift_y = parse_double(f[19], "labels.csv");
    std::snprintf(name, sizeof(name), "pair_%06d_a.png", lp.index);
    lp.pair.patch_a = read_png_gray8(dir / name);
    std::snprintf(name, sizeof(name), "pair_%06d_b.png", lp.index);
    lp.pair.patch_b = read_png_gray8(dir / name);
    out.push_back(std::move(lp));
  }
  return out;
}

}  // namespace mosaikit
