#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mosaikit/homography.hpp"
#include "mosaikit/image.hpp"
#include "mosaikit/rng.hpp"

namespace mosaikit {

// Rigid in-plane motion: rotation about the patch centroid plus a shift.
struct MotionParams {
  double angle_rad = 0.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;  // pixels
};

// Two co-located square patches plus the source-frame coordinates of the
// first patch's corners. gt, when present, is the exact corner displacement
// taking patch_a's corners onto patch_b's.
struct PatchPair {
  GrayFrame patch_a;
  GrayFrame patch_b;
  CornerQuad anchor;
  std::optional<FourPointHomography> gt;
};

struct AugmentConfig {
  int patch_size = 128;
  double max_rotation_deg = 5.0;
  double max_shift_px = 16.0;
  int margin = 32;
  std::uint64_t seed = 0;
};

// Throws InvalidConfig unless margin covers the worst-case corner sweep:
// margin >= ceil(max_shift_px + patch_size * sin(max_rotation)).
void validate_config(const AugmentConfig& cfg);

// Rotates each corner about the quad centroid by m.angle_rad using the
// R(a) = [cos a, sin a; -sin a, cos a] convention, then shifts by
// (m.shift_x, m.shift_y).
CornerQuad apply_motion(const CornerQuad& anchor, const MotionParams& m);

// Resamples the frame region under `quad` onto a patch_size x patch_size
// grid: output pixel (x, y) is the bilinear sample of the frame at H(x, y),
// where H maps the canonical patch grid onto quad. Integer axis-aligned quads
// reduce to an exact crop. Throws OutOfBounds when a sample leaves the frame.
GrayFrame sample_patch(const GrayFrame& frame, const CornerQuad& quad, int patch_size);

// Draws an anchor position and a rigid motion from rng, and builds the patch
// pair with its exact label. Deterministic given the rng state.
PatchPair generate_pair(const GrayFrame& frame, const AugmentConfig& cfg, Rng& rng);

struct DatasetManifest {
  std::filesystem::path directory;
  std::vector<std::string> pair_files;
  std::string labels_file;
  std::string manifest_file;
  AugmentConfig config;
  int count = 0;
};

// Writes `count` pairs as pair_<idx>_a.png / pair_<idx>_b.png plus labels.csv
// (header idx,u1,v1,...,v4,du1,dv1,...,dv4,beta_deg,dx,dy; 9 significant
// digits). Pair idx uses frames[idx % frames.size()] and an rng stream keyed
// by (seed, idx), so output is independent of generation order.
DatasetManifest export_dataset(const std::vector<GrayFrame>& frames, const AugmentConfig& cfg,
                               int count, const std::filesystem::path& out_dir);

struct LabeledPair {
  int index = 0;
  PatchPair pair;
  double beta_deg = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
};

std::vector<LabeledPair> read_dataset(const std::filesystem::path& dir);

}  // namespace mosaikit
