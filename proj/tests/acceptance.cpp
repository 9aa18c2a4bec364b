// Acceptance suite: end-to-end checks of the full pipeline, one printed
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mosaikit/augment.hpp"
#include "mosaikit/compositor.hpp"
#include "mosaikit/error.hpp"
#include "mosaikit/estimator.hpp"
#include "mosaikit/metrics.hpp"
#include "mosaikit/png_io.hpp"
#include "mosaikit/rng.hpp"
#include "mosaikit/sequential.hpp"
#include "mosaikit/synth.hpp"
#include "mosaikit/text_io.hpp"

using namespace mosaikit;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& message) {
    if (!condition && ok) {
      ok = false;
      detail = message;
    }
  }
};

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string cli_path() {
  const char* env = std::getenv("MOSAIKIT_CLI");
  return env == nullptr ? "" : env;
}

int run_cli(const std::string& args, const fs::path& log_dir, std::string* err_out = nullptr) {
  const fs::path err_file = log_dir / "cli_stderr.txt";
  const std::string cmd = cli_path() + " " + args + " > /dev/null 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  if (err_out != nullptr && fs::exists(err_file)) {
    *err_out = read_text(err_file);
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool same_bytes(const fs::path& a, const fs::path& b) { return read_text(a) == read_text(b); }

// ---------------------------------------------------------------------------
// 1. Homography algebra round trips at 1e-8, 10,000 randomized cases, < 5 s.
Check criterion_1() {
  Check c;
  Rng rng(20240801);
  const CornerQuad base =
      CornerQuad(Point2(64, 64), Point2(191, 64), Point2(191, 191), Point2(64, 191));
  for (int trial = 0; trial < 5000; ++trial) {
    CornerQuad quad = base;
    for (int i = 0; i < 4; ++i) {
      quad.corners[i].u += rng.uniform(-10, 10);
      quad.corners[i].v += rng.uniform(-10, 10);
    }
    FourPointHomography fp;
    for (int i = 0; i < 4; ++i) {
      fp.du[i] = rng.uniform(-16, 16);
      fp.dv[i] = rng.uniform(-16, 16);
    }
    if (std::abs(displace(quad, fp).signed_area()) < 2.0) continue;
    const Homography h = four_point_to_matrix(quad, fp);
    const FourPointHomography back = matrix_to_four_point(h, quad);
    for (int i = 0; i < 4; ++i) {
      c.require(std::abs(back.du[i] - fp.du[i]) < 1e-8 && std::abs(back.dv[i] - fp.dv[i]) < 1e-8,
                "four-point round trip exceeded 1e-8");
    }
  }
  for (int trial = 0; trial < 5000; ++trial) {
    SimilarityDecomposition in;
    in.theta = rng.uniform(-3.1, 3.1);
    in.gamma = rng.uniform(-0.75, 0.75);  // inside [-pi/4, pi/4)
    in.scale_major = rng.uniform(0.6, 2.0);
    in.scale_minor = std::max(0.05, in.scale_major - rng.uniform(1e-4, 0.5));
    in.translate_x = rng.uniform(-50, 50);
    in.translate_y = rng.uniform(-50, 50);
    const SimilarityDecomposition out = decompose_similarity(recompose_similarity(in));
    c.require(std::abs(out.theta - in.theta) < 1e-8 && std::abs(out.gamma - in.gamma) < 1e-8 &&
                  std::abs(out.scale_major - in.scale_major) < 1e-8 &&
                  std::abs(out.scale_minor - in.scale_minor) < 1e-8 &&
                  std::abs(out.translate_x - in.translate_x) < 1e-8 &&
                  std::abs(out.translate_y - in.translate_y) < 1e-8,
              "decompose/recompose round trip exceeded 1e-8");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 2. 1,000 generated pairs: label reprojection < 1e-9 px, decomposition
//    purity within 1e-9, < 30 s.
Check criterion_2() {
  Check c;
  const GrayFrame texture_a = make_texture(512, 11);
  const GrayFrame texture_b = make_texture(512, 12);
  AugmentConfig cfg;
  cfg.seed = 77;
  for (int idx = 0; idx < 1000; ++idx) {
    Rng rng = Rng::derive(cfg.seed, {static_cast<std::uint64_t>(idx)});
    const GrayFrame& tex = idx % 2 == 0 ? texture_a : texture_b;
    const PatchPair pair = generate_pair(tex, cfg, rng);
    const Homography h = four_point_to_matrix(pair.anchor, *pair.gt);
    const CornerQuad displaced = displace(pair.anchor, *pair.gt);
    for (int i = 0; i < 4; ++i) {
      const Point2 mapped = warp_point(h, pair.anchor.corners[i]);
      c.require((mapped - displaced.corners[i]).norm() < 1e-9,
                "label reprojection residual exceeded 1e-9 px");
    }
    const SimilarityDecomposition d = decompose_similarity(h);
    c.require(std::abs(d.scale_major - 1.0) < 1e-9 && std::abs(d.scale_minor - 1.0) < 1e-9 &&
                  std::abs(d.gamma) < 1e-9,
              "decomposition purity exceeded 1e-9");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 3. Direct estimator: 500 in-range pairs on each of 3 textures;
//    95th percentile corner RMSE < 0.5 px, median < 0.15 px, < 2 min.
Check criterion_3() {
  Check c;
  const DirectEstimator estimator;
  std::vector<double> errors;
  errors.reserve(1500);
  for (std::uint64_t tex_seed : {501ULL, 502ULL, 503ULL}) {
    const GrayFrame texture = make_texture(448, tex_seed);
    AugmentConfig cfg;
    cfg.seed = tex_seed;
    for (int idx = 0; idx < 500; ++idx) {
      Rng rng = Rng::derive(cfg.seed, {static_cast<std::uint64_t>(idx)});
      const PatchPair pair = generate_pair(texture, cfg, rng);
      const EstimatorResult res =
          estimator.estimate({pair.patch_a, pair.patch_b, pair.anchor, idx, 0});
      errors.push_back(res.converged ? corner_rmse(res.fp, *pair.gt) : 1e9);
    }
  }
  std::sort(errors.begin(), errors.end());
  const double median = errors[errors.size() / 2];
  const double p95 = errors[errors.size() * 95 / 100];
  std::ostringstream detail;
  detail << "median=" << median << " p95=" << p95;
  c.require(median < 0.15, "median corner RMSE " + std::to_string(median) + " >= 0.15 px");
  c.require(p95 < 0.5, "95th percentile corner RMSE " + std::to_string(p95) + " >= 0.5 px");
  if (c.ok) c.detail = detail.str();
  return c;
}

// ---------------------------------------------------------------------------
// 4. Outlier rejection: up to 49 of 99 corrupted rotations, 1,000 trials,
//    selected value inside the honest cluster and exact agreement with an
//    independently coded median-index oracle.
Check criterion_4() {
  Check c;
  Rng rng(424242);
  for (int trial = 0; trial < 1000; ++trial) {
    const int corrupted = rng.uniform_int(0, 49);
    const double center = rng.uniform(-0.08, 0.08);
    const double spread = 2e-3;

    std::vector<int> order(99);
    for (int i = 0; i < 99; ++i) order[i] = i;
    for (int i = 98; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);

    std::vector<PairwiseEstimate> estimates(99);
    for (int n = 0; n < 99; ++n) {
      const bool corrupt =
          std::find(order.begin(), order.begin() + corrupted, n) != order.begin() + corrupted;
      SimilarityDecomposition d;
      d.theta = corrupt ? rng.uniform(-0.6, 0.6) : center + rng.uniform(-spread, spread);
      estimates[n].decomposition = d;
      estimates[n].homography = recompose_similarity(d);
      estimates[n].iteration = n;
      estimates[n].valid = true;
    }
    // A few invalid entries must be ignored entirely.
    estimates[rng.uniform_int(0, 98)].valid = false;

    const int selected = select_median_index(estimates);

    // Independent oracle: insertion-sorted copy, lower median by counting.
    std::vector<std::pair<double, int>> sorted;
    for (const PairwiseEstimate& e : estimates) {
      if (e.valid) sorted.emplace_back(e.decomposition.theta, e.iteration);
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const int oracle = sorted[(sorted.size() - 1) / 2].second;

    c.require(selected == oracle, "selection disagrees with the brute-force median oracle");
    const double majority =
        static_cast<double>(std::count_if(estimates.begin(), estimates.end(), [&](const auto& e) {
          return e.valid && std::abs(e.decomposition.theta - center) <= spread;
        }));
    const double valid_count =
        static_cast<double>(std::count_if(estimates.begin(), estimates.end(),
                                          [](const auto& e) { return e.valid; }));
    if (majority > valid_count / 2.0) {
      c.require(std::abs(estimates[selected].decomposition.theta - center) <= spread,
                "selected rotation left the honest cluster despite a majority");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// 5. Drift on the clean 360-frame circular loop: DSM mean residual < 3 px,
//    final residual < 10 px; feature baseline on the degraded sequence shows
//    >= 3x the final residual. < 15 min.
Check criterion_5(const SyntheticSequence& loop) {
  Check c;
  SequentialConfig cfg;
  cfg.seed = 9001;

  const DirectEstimator direct;
  const SequenceResult dsm = run_sequence(loop.frames, direct, cfg);
  const ResidualReport dsm_residual =
      mean_residual_error(dsm.poses.absolute, loop.gt_absolute, 256, 256);
  const double dsm_final = dsm_residual.per_frame.back();

  c.require(dsm_residual.mean < 3.0,
            "DSM mean residual " + std::to_string(dsm_residual.mean) + " >= 3 px");
  c.require(dsm_final < 10.0, "DSM final residual " + std::to_string(dsm_final) + " >= 10 px");

  DegradationSpec degrade;
  degrade.noise_sigma = 8.0;
  degrade.specular_blob_count = 3;
  degrade.blob_radius_px = 18.0;
  degrade.blob_drift_px = 1.5;
  degrade.seed = 555;
  const SyntheticSequence degraded = add_degradations(loop, degrade);

  FeatureEstimator::Options feat_opt;
  feat_opt.seed = cfg.seed;
  const FeatureEstimator feature(feat_opt);
  // On degraded texture-poor stretches the baseline keeps fewer than half of
  // its 99 estimates; relaxing min_valid lets it finish and report a real
  // drift number instead of aborting mid-sequence.
  SequentialConfig feat_cfg = cfg;
  feat_cfg.min_valid = 10;
  double feat_final = 0.0;
  std::string feat_note;
  try {
    const SequenceResult feat = run_sequence(degraded.frames, feature, feat_cfg);
    const ResidualReport feat_residual =
        mean_residual_error(feat.poses.absolute, degraded.gt_absolute, 256, 256);
    feat_final = feat_residual.per_frame.back();
  } catch (const Error& e) {
    // A baseline that cannot even finish the degraded sequence counts as
    // unbounded drift for the comparison.
    feat_final = std::numeric_limits<double>::infinity();
    feat_note = std::string(" (baseline aborted: ") + e.what() + ")";
  }
  c.require(feat_final >= 3.0 * dsm_final,
            "feature baseline final residual " + std::to_string(feat_final) +
                " is not >= 3x DSM final " + std::to_string(dsm_final));
  if (c.ok) {
    std::ostringstream detail;
    detail << "dsm_mean=" << dsm_residual.mean << " dsm_final=" << dsm_final
           << " feat_final=" << feat_final << feat_note;
    c.detail = detail.str();
  }
  return c;
}

// ---------------------------------------------------------------------------
// 6. Loop closure oracle: chaining the 360 exact relatives of the loop
//    composes to the identity within 1e-6.
Check criterion_6() {
  Check c;
  const GrayFrame texture = make_texture(1024, 61);
  TrajectoryConfig cfg;
  cfg.kind = TrajectoryKind::circular;
  cfg.frames = 361;  // 360 one-degree steps close the loop
  cfg.frame_size = 64;
  cfg.radius_px = 300.0;
  cfg.rotation_per_frame_rad = deg_to_rad(1.0);
  const SyntheticSequence seq = generate(texture, cfg);
  const SequencePoses poses = chain(seq.gt_relative, 0);
  const double worst =
      (poses.absolute.back().m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  c.require(worst < 1e-6, "loop closure error " + std::to_string(worst) + " >= 1e-6");
  if (c.ok) c.detail = "closure=" + format_sig9(worst);
  return c;
}

// ---------------------------------------------------------------------------
// 7. Metrics agree with brute-force recomputation at 1e-9; the (3,4) shift
//    residual is exactly 5.
Check criterion_7() {
  Check c;
  Rng rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    FourPointHomography a, b;
    for (int i = 0; i < 4; ++i) {
      a.du[i] = rng.uniform(-20, 20);
      a.dv[i] = rng.uniform(-20, 20);
      b.du[i] = rng.uniform(-20, 20);
      b.dv[i] = rng.uniform(-20, 20);
    }
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
      acc += (a.du[i] - b.du[i]) * (a.du[i] - b.du[i]);
      acc += (a.dv[i] - b.dv[i]) * (a.dv[i] - b.dv[i]);
    }
    c.require(std::abs(corner_rmse(a, b) - std::sqrt(acc / 8.0)) < 1e-9,
              "corner_rmse disagrees with brute force");
  }

  const GrayFrame tex = make_texture(512, 72);
  for (int trial = 0; trial < 100; ++trial) {
    const GrayFrame f0 = crop(tex, rng.uniform_int(0, 64), rng.uniform_int(0, 64), 128, 128);
    const GrayFrame f1 = crop(tex, rng.uniform_int(0, 64), rng.uniform_int(0, 64), 128, 128);
    SimilarityDecomposition d;
    d.theta = rng.uniform(-0.05, 0.05);
    d.scale_major = d.scale_minor = 1.0;
    d.translate_x = rng.uniform(-4, 4);
    d.translate_y = rng.uniform(-4, 4);
    const Homography rel = recompose_similarity(d);
    const double got = photometric_error(f0, f1, rel, FovMask::full());
    double acc = 0.0;
    long count = 0;
    for (int y = 0; y < 128; ++y) {
      for (int x = 0; x < 128; ++x) {
        const Point2 p = warp_point(rel, {static_cast<double>(x), static_cast<double>(y)});
        if (!in_sample_bounds(f0, p.u, p.v)) continue;
        acc += std::abs(f1.at(x, y) - bilinear_sample(f0, p.u, p.v));
        ++count;
      }
    }
    c.require(count > 0 && std::abs(got - acc / count) < 1e-9,
              "photometric_error disagrees with brute force");
  }

  std::vector<Homography> gt{Homography::identity(), Homography::translation(40, -25)};
  std::vector<Homography> est;
  for (const Homography& h : gt) est.push_back(compose(Homography::translation(3, 4), h));
  const ResidualReport report = mean_residual_error(est, gt, 256, 256);
  for (double r : report.per_frame) {
    c.require(r == 5.0, "translation residual is not exactly 5.0");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 8. CLI determinism: every command run twice with one seed produces
//    byte-identical outputs.
Check criterion_8() {
  Check c;
  if (cli_path().empty()) {
    c.require(false, "MOSAIKIT_CLI is not set");
    return c;
  }
  const fs::path work = fresh_dir("mosaikit_acceptance_cli");

  const std::string synth_args =
      "gen-synth --kind circular --frames 6 --size 256 --radius 40 --rot-per-frame 2 --seed 17 "
      "--texture-size 768 --noise-sigma 2 --blobs 1 --out ";
  c.require(run_cli(synth_args + (work / "s1").string(), work) == 0, "gen-synth run 1 failed");
  c.require(run_cli(synth_args + (work / "s2").string(), work) == 0, "gen-synth run 2 failed");
  for (const std::string name :
       {"frame_000000.png", "frame_000005.png", "gt_absolute.txt", "gt_relative.txt",
        "manifest.txt"}) {
    c.require(same_bytes(work / "s1" / name, work / "s2" / name),
              "gen-synth outputs differ: " + name);
  }

  const std::string cda_args = "gen-cda --images " + (work / "s1").string() +
                               " --count 6 --seed 21 --out ";
  c.require(run_cli(cda_args + (work / "c1").string(), work) == 0, "gen-cda run 1 failed");
  c.require(run_cli(cda_args + (work / "c2").string(), work) == 0, "gen-cda run 2 failed");
  for (const std::string name : {"labels.csv", "pair_000000_a.png", "pair_000005_b.png"}) {
    c.require(same_bytes(work / "c1" / name, work / "c2" / name),
              "gen-cda outputs differ: " + name);
  }

  const std::string mosaic_args = "mosaic --frames " + (work / "s1").string() +
                                  " --n 15 --min-valid 8 --seed 29 --diagnostics-out ";
  c.require(run_cli(mosaic_args + (work / "m1" / "diag.csv").string() + " --out " +
                        (work / "m1").string(),
                    work) == 0,
            "mosaic run 1 failed");
  c.require(run_cli(mosaic_args + (work / "m2" / "diag.csv").string() + " --out " +
                        (work / "m2").string(),
                    work) == 0,
            "mosaic run 2 failed");
  for (const std::string name : {"mosaic.png", "poses.txt", "mosaic_offset.txt", "diag.csv"}) {
    c.require(same_bytes(work / "m1" / name, work / "m2" / name),
              "mosaic outputs differ: " + name);
  }

  const std::string eval_args = "evaluate --poses " + (work / "m1" / "poses.txt").string() +
                                " --gt " + (work / "s1" / "gt_absolute.txt").string() +
                                " --frames " + (work / "s1").string() + " --out-csv ";
  c.require(run_cli(eval_args + (work / "e1.csv").string(), work) == 0, "evaluate run 1 failed");
  c.require(run_cli(eval_args + (work / "e2.csv").string(), work) == 0, "evaluate run 2 failed");
  c.require(same_bytes(work / "e1.csv", work / "e2.csv"), "evaluate outputs differ");
  return c;
}

// ---------------------------------------------------------------------------
// 9. Divergence guard: an injected 1.05-scale-per-frame pose chain aborts
//    with exit code 4 before the canvas is allocated.
Check criterion_9() {
  Check c;
  if (cli_path().empty()) {
    c.require(false, "MOSAIKIT_CLI is not set");
    return c;
  }
  const fs::path work = fresh_dir("mosaikit_acceptance_guard");
  c.require(run_cli("gen-synth --kind linear --frames 120 --size 64 --radius 0 "
                    "--rot-per-frame 0 --seed 2 --texture-size 512 --out " +
                        (work / "frames").string(),
                    work) == 0,
            "sequence generation failed");

  std::vector<Homography> absolute{Homography::identity()};
  Homography scale;
  scale.m(0, 0) = scale.m(1, 1) = 1.05;
  for (int k = 1; k < 120; ++k) {
    absolute.push_back(compose(absolute.back(), scale));
  }
  write_pose_file(work / "exploding.txt", absolute, 0);

  std::string err;
  const int code = run_cli("mosaic --frames " + (work / "frames").string() + " --poses " +
                               (work / "exploding.txt").string() + " --out " +
                               (work / "m").string(),
                           work, &err);
  c.require(code == 4, "expected exit 4, got " + std::to_string(code));
  c.require(!fs::exists(work / "m" / "mosaic.png"), "mosaic was written despite the guard");
  c.require(err.find("CanvasCapExceeded") != std::string::npos,
            "stderr does not name the canvas guard");
  return c;
}

struct Criterion {
  int number;
  std::string name;
  std::function<Check()> run;
};

}  // namespace

int main() {
  // The 360-frame loop is shared by criteria 5 (drift) and, conceptually, 6;
  // generating it once keeps the suite within its time budget.
  std::cout << "generating the 360-frame synthetic loop..." << std::endl;
  TrajectoryConfig loop_cfg;
  loop_cfg.kind = TrajectoryKind::circular;
  loop_cfg.frames = 360;
  loop_cfg.frame_size = 256;
  loop_cfg.radius_px = 300.0;
  loop_cfg.rotation_per_frame_rad = deg_to_rad(1.0);
  loop_cfg.seed = 4096;
  const GrayFrame loop_texture = make_texture(2048, loop_cfg.seed);
  const SyntheticSequence loop = generate(loop_texture, loop_cfg);

  const std::vector<Criterion> criteria = {
      {1, "homography algebra round trips (10,000 cases, 1e-8)", criterion_1},
      {2, "patch-pair label exactness and purity (1,000 pairs, 1e-9)", criterion_2},
      {3, "direct estimator recovery (3 textures x 500 pairs)", criterion_3},
      {4, "median outlier rejection vs brute-force oracle (1,000 trials)", criterion_4},
      {5, "drift on the synthetic loop: robust direct vs degraded feature baseline",
       [&loop] { return criterion_5(loop); }},
      {6, "ground-truth loop closure through chain (360 steps, 1e-6)", criterion_6},
      {7, "metric formulas vs brute force (100 cases, 1e-9; exact 5.0)", criterion_7},
      {8, "CLI determinism: byte-identical reruns of every command", criterion_8},
      {9, "divergence guard aborts with exit code 4", criterion_9},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check result;
    try {
      result = criterion.run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = seconds_since(start);
    std::cout << (result.ok ? "[PASS] " : "[FAIL] ") << criterion.number << ". " << criterion.name
              << (result.detail.empty() ? "" : " -- " + result.detail) << " (" << std::fixed
              << std::setprecision(1) << elapsed << "s)" << std::defaultfloat << std::endl;
    if (!result.ok) ++failures;
  }

  if (failures > 0) {
    std::cout << failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
