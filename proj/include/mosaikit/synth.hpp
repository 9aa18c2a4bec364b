#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mosaikit/homography.hpp"
#include "mosaikit/image.hpp"

namespace mosaikit {

enum class TrajectoryKind { circular, spiral, linear };

// Defaults reproduce the stock synthetic benchmark: 811 frames circling at
// one degree per frame (360 frames per loop), 256 px frames, radius 300.
struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::circular;
  int frames = 811;
  int frame_size = 256;
  // Circle/spiral radius; for linear trajectories the per-frame step instead.
  double radius_px = 300.0;
  double radius_growth_px_per_frame = 0.0;  // spiral only
  double rotation_per_frame_rad = deg_to_rad(1.0);
  std::uint64_t seed = 0;
};

struct SyntheticSequence {
  std::vector<GrayFrame> frames;
  std::vector<Homography> gt_absolute;  // frame k -> frame 0
  std::vector<Homography> gt_relative;  // frame k+1 -> frame k
};

// Procedural test texture: multi-octave value noise with dark curvilinear
// structures, intensities kept away from 0/255 so additive noise rarely clips.
GrayFrame make_texture(int size, std::uint64_t seed);

// Renders frames by sampling the texture under a rigid camera trajectory and
// records the exact relative/absolute homographies of that trajectory.
// Throws TextureTooSmall when any frame corner leaves the texture.
SyntheticSequence generate(const GrayFrame& texture, const TrajectoryConfig& cfg);

struct DegradationSpec {
  double vignette_strength = 0.0;  // 0 disables; fraction removed at corners
  double noise_sigma = 0.0;        // additive Gaussian, intensity levels
  int specular_blob_count = 0;
  double blob_radius_px = 18.0;
  double blob_strength = 0.9;     // blend weight toward white at blob center
  double blob_drift_px = 1.5;     // per-frame drift magnitude
  std::uint64_t seed = 0;

  bool empty() const {
    return vignette_strength == 0.0 && noise_sigma == 0.0 && specular_blob_count == 0;
  }
};

// Per-frame vignette, drifting specular blobs, then additive noise; ground
// truth is untouched. An empty spec returns bit-identical frames.
SyntheticSequence add_degradations(const SyntheticSequence& seq, const DegradationSpec& spec);

// Directory layout: frame_%06d.png, gt_absolute.txt, gt_relative.txt,
// manifest.txt with key: value lines.
void write_sequence(const SyntheticSequence& seq, const std::filesystem::path& dir,
                    const std::vector<std::pair<std::string, std::string>>& manifest_extra = {});

SyntheticSequence read_sequence(const std::filesystem::path& dir);

}  // namespace mosaikit
