#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mosaikit/compositor.hpp"
#include "mosaikit/error.hpp"
#include "mosaikit/synth.hpp"

using namespace mosaikit;

namespace {

SequencePoses poses_from(const std::vector<Homography>& absolute, int reference = 0) {
  SequencePoses poses;
  poses.absolute = absolute;
  poses.reference_index = reference;
  return poses;
}

}  // namespace

TEST_CASE("canvas of a single identity pose equals the frame box") {
  const CanvasSpec spec = compute_canvas(256, 256, {Homography::identity()});
  CHECK(spec.width == 256);
  CHECK(spec.height == 256);
  CHECK((spec.offset.m - Eigen::Matrix3d::Identity()).norm() == 0.0);
}

TEST_CASE("canvas grows with translated poses") {
  const CanvasSpec spec =
      compute_canvas(256, 256, {Homography::identity(), Homography::translation(100, 0)});
  CHECK(spec.width == 356);
  CHECK(spec.height == 256);
}

TEST_CASE("canvas of a circular loop matches brute-force corner projection") {
  const Homography step = compose(
      Homography::translation(300, 0),
      compose(Homography::rotation(deg_to_rad(1.0)), Homography::translation(-300, 0)));
  std::vector<Homography> absolute{Homography::identity()};
  for (int k = 0; k < 359; ++k) {
    absolute.push_back(compose(absolute.back(), step));
  }
  const CanvasSpec spec = compute_canvas(256, 256, absolute);

  double min_u = 1e18, max_u = -1e18, min_v = 1e18, max_v = -1e18;
  for (const Homography& pose : absolute) {
    for (const Point2 corner :
         {Point2(0, 0), Point2(255, 0), Point2(255, 255), Point2(0, 255)}) {
      const Point2 p = warp_point(pose, corner);
      min_u = std::min(min_u, p.u);
      max_u = std::max(max_u, p.u);
      min_v = std::min(min_v, p.v);
      max_v = std::max(max_v, p.v);
    }
  }
  CHECK(spec.width == static_cast<int>(std::ceil(max_u) - std::floor(min_u) + 1));
  CHECK(spec.height == static_cast<int>(std::ceil(max_v) - std::floor(min_v) + 1));
  CHECK(spec.offset.m(0, 2) == -std::floor(min_u));
  CHECK(spec.offset.m(1, 2) == -std::floor(min_v));
}

TEST_CASE("canvas area cap throws before allocation") {
  std::vector<Homography> absolute{Homography::identity()};
  Homography scale;
  scale.m(0, 0) = scale.m(1, 1) = 1.05;
  Homography pose = Homography::identity();
  for (int k = 0; k < 360; ++k) {
    pose = compose(pose, scale);
    absolute.push_back(pose);
  }
  bool threw = false;
  try {
    compute_canvas(256, 256, absolute, kDefaultCanvasCapPx);
  } catch (const Error& e) {
    threw = true;
    CHECK(e.code() == ErrorCode::CanvasCapExceeded);
  }
  CHECK(threw);
}

TEST_CASE("single frame renders bit-exactly under overwrite_last and full mask") {
  const GrayFrame frame = make_texture(128, 77);
  const Mosaic mosaic =
      render({frame}, poses_from({Homography::identity()}), FovMask::full(),
             BlendMode::overwrite_last);
  REQUIRE(mosaic.canvas.same_size(frame));
  CHECK(mosaic.canvas.pixels == frame.pixels);
  for (std::uint32_t c : mosaic.coverage) {
    CHECK(c == 1);
  }
}

TEST_CASE("running mean of two identical frames reproduces the frame") {
  const GrayFrame frame = make_texture(128, 78);
  const Mosaic mosaic =
      render({frame, frame}, poses_from({Homography::identity(), Homography::identity()}),
             FovMask::full(), BlendMode::running_mean);
  REQUIRE(mosaic.canvas.same_size(frame));
  double worst = 0.0;
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
    worst = std::max(worst, std::abs(mosaic.canvas.pixels[i] - frame.pixels[i]));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("blend order matters for overwrite_last but not running_mean") {
  GrayFrame a(64, 64, 10.0);
  GrayFrame b(64, 64, 200.0);
  const std::vector<Homography> same{Homography::identity(), Homography::identity()};

  const Mosaic ab = render({a, b}, poses_from(same), FovMask::full(), BlendMode::overwrite_last);
  const Mosaic ba = render({b, a}, poses_from(same), FovMask::full(), BlendMode::overwrite_last);
  CHECK(ab.canvas.at(0, 0) == 200.0);
  CHECK(ba.canvas.at(0, 0) == 10.0);

  const Mosaic mean_ab = render({a, b}, poses_from(same), FovMask::full(), BlendMode::running_mean);
  const Mosaic mean_ba = render({b, a}, poses_from(same), FovMask::full(), BlendMode::running_mean);
  CHECK(mean_ab.canvas.pixels == mean_ba.canvas.pixels);
  CHECK(mean_ab.canvas.at(5, 5) == doctest::Approx(105.0));
}

TEST_CASE("mosaic of a synthetic sequence under ground truth matches the texture") {
  const GrayFrame texture = make_texture(768, 79);
  TrajectoryConfig cfg;
  cfg.kind = TrajectoryKind::circular;
  cfg.frames = 24;
  cfg.frame_size = 128;
  cfg.radius_px = 60.0;
  cfg.rotation_per_frame_rad = deg_to_rad(15.0);
  const SyntheticSequence seq = generate(texture, cfg);

  const Mosaic mosaic = render(seq.frames, poses_from(seq.gt_absolute), FovMask::full(),
                               BlendMode::overwrite_last);

  // Reference coordinates are frame-0 coordinates (gt_absolute[0] is the
  // identity), and frame 0's camera sits at angle 0 on the circle, so a
  // canvas pixel maps onto the texture by undoing the offset and shifting by
  // the frame-0 camera translation.
  const double fc = (cfg.frame_size - 1) / 2.0;
  const double cam_u = (texture.width - 1) / 2.0 + cfg.radius_px;
  const double cam_v = (texture.height - 1) / 2.0;
  const Homography canvas_to_ref = invert(mosaic.offset);
  double err_sum = 0.0;
  long covered = 0;
  for (int y = 0; y < mosaic.canvas.height; ++y) {
    for (int x = 0; x < mosaic.canvas.width; ++x) {
      if (mosaic.coverage[static_cast<std::size_t>(y) * mosaic.canvas.width + x] == 0) continue;
      const Point2 ref = warp_point(canvas_to_ref, {static_cast<double>(x), static_cast<double>(y)});
      const Point2 tex_pos{ref.u - fc + cam_u, ref.v - fc + cam_v};
      if (tex_pos.u < 1 || tex_pos.v < 1 || tex_pos.u > texture.width - 2 ||
          tex_pos.v > texture.height - 2) {
        continue;
      }
      err_sum += std::abs(mosaic.canvas.at(x, y) - bilinear_sample(texture, tex_pos.u, tex_pos.v));
      ++covered;
    }
  }
  REQUIRE(covered > 10000);
  CHECK(err_sum / covered < 1.0);
}

TEST_CASE("coverage counts every masked in-footprint contribution") {
  const GrayFrame frame = make_texture(96, 80);
  const std::vector<Homography> absolute{Homography::identity(),
                                         Homography::translation(40, 0)};
  const FovMask mask = FovMask::circular({47.5, 47.5}, 40.0);
  const Mosaic mosaic = render({frame, frame}, poses_from(absolute), mask,
                               BlendMode::overwrite_last);

  // Independent count: for each frame, canvas pixels whose inverse-mapped
  // position lies in bounds and inside the mask.
  long expected = 0;
  for (const Homography& pose : absolute) {
    const Homography to_frame = invert(compose(mosaic.offset, pose));
    for (int y = 0; y < mosaic.canvas.height; ++y) {
      for (int x = 0; x < mosaic.canvas.width; ++x) {
        const Point2 p = warp_point(to_frame, {static_cast<double>(x), static_cast<double>(y)});
        if (in_sample_bounds(frame, p.u, p.v) && mask.contains(p.u, p.v)) ++expected;
      }
    }
  }
  long total = 0;
  for (std::uint32_t c : mosaic.coverage) total += c;
  CHECK(total == expected);
}

TEST_CASE("size mismatch between frames and poses is rejected") {
  const GrayFrame frame(64, 64, 0.0);
  CHECK_THROWS_AS(render({frame}, poses_from({Homography::identity(), Homography::identity()}),
                         FovMask::full(), BlendMode::overwrite_last),
                  Error);
}

TEST_CASE("inscribed square crop from a circular mask") {
  const GrayFrame frame = make_texture(256, 81);

  // Radius 128 centered at (127.5, 127.5) is tangent to the pixel area and
  // valid; its inscribed square has side floor(2 * 128 / sqrt(2)) = 181.
  const FovMask mask = FovMask::circular({127.5, 127.5}, 128.0);
  const GrayFrame out = crop_square_from_circle(frame, mask, 256);
  CHECK(out.width == 256);
  CHECK(out.height == 256);
  const double side = std::floor(2.0 * 128.0 / std::sqrt(2.0));
  CHECK(side == 181.0);
  // Corners of the resampled output are the corners of the 181-px window.
  CHECK(out.at(0, 0) == doctest::Approx(bilinear_sample(frame, 37.5, 37.5)).epsilon(1e-12));
  CHECK(out.at(255, 255) == doctest::Approx(bilinear_sample(frame, 217.5, 217.5)).epsilon(1e-12));

  // A larger radius genuinely leaves the frame.
  bool threw = false;
  try {
    crop_square_from_circle(frame, FovMask::circular({127.5, 127.5}, 140.0));
  } catch (const Error& e) {
    threw = true;
    CHECK(e.code() == ErrorCode::MaskOutsideFrame);
  }
  CHECK(threw);

  // A custom crop side overrides the inscribed default.
  const GrayFrame custom = crop_square_from_circle(frame, mask, 64, 100);
  CHECK(custom.width == 64);
}

TEST_CASE("full-mask crop at the native size copies the frame") {
  const GrayFrame frame = make_texture(128, 82);
  const GrayFrame out = crop_square_from_circle(frame, FovMask::full(), 128);
  CHECK(out.pixels == frame.pixels);
}
