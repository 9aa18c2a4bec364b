#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mosaikit/error.hpp"
#include "mosaikit/metrics.hpp"
#include "mosaikit/rng.hpp"
#include "mosaikit/synth.hpp"

using namespace mosaikit;
namespace fs = std::filesystem;

namespace {

std::vector<Homography> random_pose_chain(Rng& rng, int frames) {
  std::vector<Homography> absolute{Homography::identity()};
  for (int k = 1; k < frames; ++k) {
    SimilarityDecomposition d;
    d.theta = rng.uniform(-0.05, 0.05);
    d.scale_major = d.scale_minor = 1.0;
    d.translate_x = rng.uniform(-3, 3);
    d.translate_y = rng.uniform(-3, 3);
    absolute.push_back(compose(absolute.back(), recompose_similarity(d)));
  }
  return absolute;
}

FourPointHomography random_fp(Rng& rng, double scale) {
  FourPointHomography fp;
  for (int i = 0; i < 4; ++i) {
    fp.du[i] = rng.uniform(-scale, scale);
    fp.dv[i] = rng.uniform(-scale, scale);
  }
  return fp;
}

}  // namespace

TEST_CASE("residual is zero against itself and exactly five for a (3,4) shift") {
  Rng rng(1);
  const std::vector<Homography> gt = random_pose_chain(rng, 12);
  const ResidualReport zero = mean_residual_error(gt, gt, 256, 256);
  CHECK(zero.mean == 0.0);
  CHECK(zero.max == 0.0);

  std::vector<Homography> shifted;
  for (const Homography& h : gt) {
    shifted.push_back(compose(Homography::translation(3, 4), h));
  }
  const ResidualReport five = mean_residual_error(shifted, gt, 256, 256);
  for (double r : five.per_frame) {
    CHECK(r == doctest::Approx(5.0).epsilon(1e-12));
  }
  CHECK(five.mean == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(five.max == doctest::Approx(5.0).epsilon(1e-12));

  CHECK_THROWS_AS(mean_residual_error(shifted, std::vector<Homography>(3), 256, 256), Error);
}

TEST_CASE("residual equals an independent recomputation") {
  Rng rng(2);
  const std::vector<Homography> gt = random_pose_chain(rng, 20);
  std::vector<Homography> est;
  for (const Homography& h : gt) {
    Homography noisy = h;
    noisy.m(0, 2) += rng.uniform(-2, 2);
    noisy.m(1, 2) += rng.uniform(-2, 2);
    est.push_back(noisy);
  }
  const ResidualReport report = mean_residual_error(est, gt, 128, 128);

  for (std::size_t k = 0; k < gt.size(); ++k) {
    double acc = 0.0;
    for (const Point2 corner : {Point2(0, 0), Point2(127, 0), Point2(127, 127), Point2(0, 127)}) {
      const Point2 a = warp_point(gt[k], corner);
      const Point2 b = warp_point(est[k], corner);
      acc += std::hypot(a.u - b.u, a.v - b.v);
    }
    CHECK(report.per_frame[k] == doctest::Approx(acc / 4.0).epsilon(1e-12));
  }
}

TEST_CASE("residual is invariant under a common reference-side translation") {
  Rng rng(3);
  const std::vector<Homography> gt = random_pose_chain(rng, 10);
  std::vector<Homography> est;
  for (const Homography& h : gt) {
    Homography noisy = h;
    noisy.m(0, 2) += rng.uniform(-1, 1);
    est.push_back(noisy);
  }
  const ResidualReport base = mean_residual_error(est, gt, 256, 256);

  const Homography g = Homography::translation(-17, 23);
  std::vector<Homography> gt_moved, est_moved;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    gt_moved.push_back(compose(g, gt[k]));
    est_moved.push_back(compose(g, est[k]));
  }
  const ResidualReport moved = mean_residual_error(est_moved, gt_moved, 256, 256);
  for (std::size_t k = 0; k < gt.size(); ++k) {
    CHECK(moved.per_frame[k] == doctest::Approx(base.per_frame[k]).epsilon(1e-9));
  }
}

TEST_CASE("corner_rmse basics and hand-computed case") {
  FourPointHomography a, b;
  CHECK(corner_rmse(a, b) == 0.0);

  for (int i = 0; i < 4; ++i) {
    a.du[i] = b.du[i] + 1.0;
    a.dv[i] = b.dv[i] + 1.0;
  }
  CHECK(corner_rmse(a, b) == doctest::Approx(1.0).epsilon(1e-15));

  FourPointHomography c;
  c.du[0] = 2.0;  // single component off by 2: sqrt(4/8)
  CHECK(corner_rmse(c, FourPointHomography{}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
}

TEST_CASE("corner_rmse is a metric on random triples") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const FourPointHomography a = random_fp(rng, 10);
    const FourPointHomography b = random_fp(rng, 10);
    const FourPointHomography c = random_fp(rng, 10);
    const double ab = corner_rmse(a, b);
    const double ba = corner_rmse(b, a);
    const double ac = corner_rmse(a, c);
    const double cb = corner_rmse(c, b);
    CHECK(ab == ba);
    CHECK(corner_rmse(a, a) == 0.0);
    CHECK(ab <= ac + cb + 1e-12);
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("photometric error zero, constant offset, and empty overlap") {
  const GrayFrame frame = make_texture(128, 30);
  CHECK(photometric_error(frame, frame, Homography::identity(), FovMask::full()) == 0.0);

  GrayFrame brighter = frame;
  for (double& p : brighter.pixels) p = std::min(252.0, p + 3.0);
  // Texture tops out at 235 so the +3 never clips.
  CHECK(photometric_error(frame, brighter, Homography::identity(), FovMask::full()) ==
        doctest::Approx(3.0).epsilon(1e-12));

  CHECK_THROWS_AS(
      photometric_error(frame, frame, Homography::translation(4000, 0), FovMask::full()), Error);
}

TEST_CASE("photometric error under exact ground truth is resampling noise only") {
  const GrayFrame texture = make_texture(768, 31);
  TrajectoryConfig cfg;
  cfg.kind = TrajectoryKind::circular;
  cfg.frames = 2;
  cfg.frame_size = 256;
  cfg.radius_px = 100.0;
  cfg.rotation_per_frame_rad = deg_to_rad(1.5);
  const SyntheticSequence seq = generate(texture, cfg);

  const double err =
      photometric_error(seq.frames[0], seq.frames[1], seq.gt_relative[0], FovMask::full());
  CHECK(err < 1.0);

  // Dense-warp oracle: recompute the same mean absolute difference directly.
  double acc = 0.0;
  long count = 0;
  for (int y = 0; y < 256; ++y) {
    for (int x = 0; x < 256; ++x) {
      const Point2 p = warp_point(seq.gt_relative[0], {double(x), double(y)});
      if (!in_sample_bounds(seq.frames[0], p.u, p.v)) continue;
      acc += std::abs(seq.frames[1].at(x, y) - bilinear_sample(seq.frames[0], p.u, p.v));
      ++count;
    }
  }
  CHECK(err == doctest::Approx(acc / count).epsilon(1e-12));
}

TEST_CASE("evaluate_sequence produces the curve and csv round trips") {
  Rng rng(5);
  const std::vector<Homography> gt = random_pose_chain(rng, 8);
  SequencePoses poses;
  poses.absolute = gt;
  const SequenceEvaluation eval = evaluate_sequence(poses, &gt, nullptr, 256, 256);
  REQUIRE(eval.has_residual);
  CHECK(eval.residual.mean == 0.0);

  const fs::path dir = fs::temp_directory_path() / "mosaikit_test_metrics";
  fs::create_directories(dir);
  const fs::path csv = dir / "residuals.csv";
  write_residual_csv(csv, eval.residual);
  const ResidualReport back = read_residual_csv(csv);
  REQUIRE(back.per_frame.size() == eval.residual.per_frame.size());
  for (std::size_t k = 0; k < back.per_frame.size(); ++k) {
    CHECK(back.per_frame[k] == eval.residual.per_frame[k]);
  }

  const std::string line = summary_line(0.25, 1.5, &eval.residual);
  CHECK(line == "rmse=0.25 photometric=1.5 residual_mean=0 residual_max=0");
}

TEST_CASE("photometric over a sequence uses relatives derived from absolutes") {
  const GrayFrame texture = make_texture(640, 32);
  TrajectoryConfig cfg;
  cfg.kind = TrajectoryKind::linear;
  cfg.frames = 4;
  cfg.frame_size = 128;
  cfg.radius_px = 2.0;
  cfg.rotation_per_frame_rad = 0.0;
  const SyntheticSequence seq = generate(texture, cfg);
  SequencePoses poses;
  poses.absolute = seq.gt_absolute;
  const SequenceEvaluation eval =
      evaluate_sequence(poses, &seq.gt_absolute, &seq.frames, 128, 128);
  REQUIRE(eval.has_photometric);
  CHECK(eval.residual.mean == 0.0);
  CHECK(eval.photometric_mean < 1.0);
}

TEST_CASE("estimator corner RMSE over labeled pairs") {
  const GrayFrame frame = make_texture(384, 33);
  AugmentConfig cfg;
  cfg.seed = 101;
  std::vector<LabeledPair> pairs;
  for (int i = 0; i < 5; ++i) {
    Rng rng = Rng::derive(cfg.seed, {static_cast<std::uint64_t>(i)});
    LabeledPair lp;
    lp.index = i;
    lp.pair = generate_pair(frame, cfg, rng);
    pairs.push_back(std::move(lp));
  }
  const DirectEstimator est;
  const double rmse = mean_corner_rmse_over_pairs(pairs, est);
  CHECK(rmse >= 0.0);
  CHECK(rmse < 0.25);
}
