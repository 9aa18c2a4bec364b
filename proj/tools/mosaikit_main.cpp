#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mosaikit/augment.hpp"
#include "mosaikit/compositor.hpp"
#include "mosaikit/error.hpp"
#include "mosaikit/estimator.hpp"
#include "mosaikit/metrics.hpp"
#include "mosaikit/png_io.hpp"
#include "mosaikit/sequential.hpp"
#include "mosaikit/synth.hpp"
#include "mosaikit/text_io.hpp"

namespace fs = std::filesystem;
using namespace mosaikit;

namespace {

// 0 success, 1 I/O, 2 arguments/validation, 3 estimation failure,
// 4 divergence guard.
int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::MalformedFile:
      return 1;
    case ErrorCode::TooFewValid:
    case ErrorCode::MissingPrediction:
    case ErrorCode::InsufficientFeatures:
    case ErrorCode::DegenerateInput:
    case ErrorCode::EmptyOverlap:
      return 3;
    case ErrorCode::CanvasCapExceeded:
      return 4;
    default:
      return 2;
  }
}

std::vector<GrayFrame> load_frame_dir(const fs::path& dir, std::vector<std::string>* names) {
  if (!fs::is_directory(dir)) {
    throw_error(ErrorCode::IoError, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw_error(ErrorCode::IoError, "no .png files in " + dir.string());
  }
  std::vector<GrayFrame> frames;
  frames.reserve(files.size());
  for (const fs::path& f : files) {
    frames.push_back(read_png_gray8(f));
    if (names) names->push_back(f.filename().string());
  }
  return frames;
}

struct GenSynthOpts {
  std::string kind = "circular";
  int frames = 811;
  int size = 256;
  double radius = 300.0;
  double radius_growth = 0.0;
  double rot_per_frame_deg = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string texture_path;
  int texture_size = 2048;
  double noise_sigma = 0.0;
  int blobs = 0;
  double blob_radius = 18.0;
  double vignette = 0.0;
};

int run_gen_synth(const GenSynthOpts& o) {
  TrajectoryConfig cfg;
  if (o.kind == "circular") {
    cfg.kind = TrajectoryKind::circular;
  } else if (o.kind == "spiral") {
    cfg.kind = TrajectoryKind::spiral;
  } else if (o.kind == "linear") {
    cfg.kind = TrajectoryKind::linear;
  } else {
    throw_error(ErrorCode::InvalidConfig, "unknown trajectory kind '" + o.kind + "'");
  }
  cfg.frames = o.frames;
  cfg.frame_size = o.size;
  cfg.radius_px = o.radius;
  cfg.radius_growth_px_per_frame = o.radius_growth;
  cfg.rotation_per_frame_rad = deg_to_rad(o.rot_per_frame_deg);
  cfg.seed = o.seed;

  const GrayFrame texture = o.texture_path.empty() ? make_texture(o.texture_size, o.seed)
                                                   : read_png_gray8(o.texture_path);
  SyntheticSequence seq = generate(texture, cfg);

  DegradationSpec degrade;
  degrade.noise_sigma = o.noise_sigma;
  degrade.specular_blob_count = o.blobs;
  degrade.blob_radius_px = o.blob_radius;
  degrade.vignette_strength = o.vignette;
  degrade.seed = o.seed;
  if (!degrade.empty()) {
    seq = add_degradations(seq, degrade);
  }

  write_sequence(seq, o.out,
                 {{"kind", o.kind},
                  {"radius_px", format_sig9(o.radius)},
                  {"radius_growth_px_per_frame", format_sig9(o.radius_growth)},
                  {"rotation_per_frame_deg", format_sig9(o.rot_per_frame_deg)},
                  {"seed", std::to_string(o.seed)},
                  {"noise_sigma", format_sig9(o.noise_sigma)},
                  {"specular_blobs", std::to_string(o.blobs)},
                  {"vignette", format_sig9(o.vignette)}});
  std::cout << "frames: " << seq.frames.size() << "\n";
  std::cout << "gt_absolute: " << (fs::path(o.out) / "gt_absolute.txt").string() << "\n";
  std::cout << "gt_relative: " << (fs::path(o.out) / "gt_relative.txt").string() << "\n";
  return 0;
}

struct GenCdaOpts {
  std::string images;
  int count = 100;
  int patch = 128;
  double beta_max = 5.0;
  double shift_max = 16.0;
  int margin = 32;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen_cda(const GenCdaOpts& o) {
  const std::vector<GrayFrame> frames = load_frame_dir(o.images, nullptr);
  AugmentConfig cfg;
  cfg.patch_size = o.patch;
  cfg.max_rotation_deg = o.beta_max;
  cfg.max_shift_px = o.shift_max;
  cfg.margin = o.margin;
  cfg.seed = o.seed;

  const DatasetManifest manifest = export_dataset(frames, cfg, o.count, o.out);

  // Self check: the stored labels must re-derive to pure rotation+translation
  // homographies whose total rotation matches the recorded beta. The 9-digit
  // CSV rounding leaves the theta/gamma split ill conditioned, so compare the
  // invariant theta+gamma.
  const std::vector<LabeledPair> pairs = read_dataset(o.out);
  for (const LabeledPair& lp : pairs) {
    const Homography h = four_point_to_matrix(lp.pair.anchor, *lp.pair.gt);
    const SimilarityDecomposition d = decompose_similarity(h);
    const bool pure =
        std::abs(d.scale_major - 1.0) < 1e-6 && std::abs(d.scale_minor - 1.0) < 1e-6;
    if (!pure || std::abs(rad_to_deg(d.theta + d.gamma) - lp.beta_deg) > 1e-5) {
      std::cerr << "label self-check failed for pair " << lp.index << "\n";
      return 1;
    }
  }
  std::cout << "manifest: " << (manifest.directory / manifest.manifest_file).string() << "\n";
  std::cout << "pairs: " << manifest.count << "\n";
  return 0;
}

struct MosaicOpts {
  std::string frames_dir;
  std::string estimator = "direct";
  int n_iterations = 99;
  int patch = 128;
  int margin = 32;
  std::uint64_t seed = 0;
  int reference = 0;
  int min_valid = 50;
  std::string blend = "overwrite_last";
  std::string mask = "full";
  double mask_radius = 0.0;
  std::string out = ".";
  std::string poses_out;
  std::string diagnostics_out;
  std::string coverage_out;
  std::string poses_in;
  std::string emit_requests;
  double canvas_cap = kDefaultCanvasCapPx;
};

std::unique_ptr<Estimator> make_estimator(const std::string& spec, std::uint64_t seed) {
  if (spec == "direct") {
    return std::make_unique<DirectEstimator>();
  }
  if (spec == "feature") {
    FeatureEstimator::Options opt;
    opt.seed = seed;
    return std::make_unique<FeatureEstimator>(opt);
  }
  if (spec.rfind("file:", 0) == 0) {
    return std::make_unique<PredictionTableEstimator>(
        PredictionTable::load_csv(spec.substr(5)));
  }
  throw_error(ErrorCode::InvalidConfig,
              "estimator must be direct, feature, or file:<path>, got '" + spec + "'");
}

FovMask make_mask(const std::string& kind, double radius, int frame_w, int frame_h) {
  if (kind == "full") return FovMask::full();
  if (kind == "circular") {
    const Point2 center{(frame_w - 1) / 2.0, (frame_h - 1) / 2.0};
    const double r = radius > 0.0 ? radius : std::min(frame_w, frame_h) / 2.0;
    return FovMask::circular(center, r);
  }
  throw_error(ErrorCode::InvalidConfig, "mask must be full or circular, got '" + kind + "'");
}

int run_mosaic(const MosaicOpts& o) {
  const std::vector<GrayFrame> frames = load_frame_dir(o.frames_dir, nullptr);
  const int fw = frames[0].width;
  const int fh = frames[0].height;

  SequentialConfig cfg;
  cfg.n_iterations = o.n_iterations;
  cfg.patch_size = o.patch;
  cfg.margin = o.margin;
  cfg.seed = o.seed;
  cfg.reference_index = o.reference;
  cfg.min_valid = o.min_valid;

  fs::create_directories(o.out);

  if (!o.emit_requests.empty()) {
    // First pass of the external-model protocol: write the patch requests and
    // the extracted patches; a later run consumes file:<predictions>.
    std::vector<PredictionRow> rows;
    const fs::path patch_dir = fs::path(o.out) / "patches";
    fs::create_directories(patch_dir);
    char name[96];
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
      for (int n = 0; n < cfg.n_iterations; ++n) {
        const CornerQuad anchor = draw_patch_anchor(fw, fh, cfg, static_cast<int>(k), n);
        PredictionRow row;
        row.frame_index = static_cast<int>(k);
        row.iteration_index = n;
        row.anchor = anchor;
        rows.push_back(row);
        const int x0 = static_cast<int>(anchor.corners[0].u);
        const int y0 = static_cast<int>(anchor.corners[0].v);
        std::snprintf(name, sizeof(name), "patch_%05zu_%03d_a.png", k, n);
        write_png_gray8(patch_dir / name, crop(frames[k], x0, y0, o.patch, o.patch));
        std::snprintf(name, sizeof(name), "patch_%05zu_%03d_b.png", k, n);
        write_png_gray8(patch_dir / name, crop(frames[k + 1], x0, y0, o.patch, o.patch));
      }
    }
    write_request_file(o.emit_requests, rows);
    std::cout << "requests: " << rows.size() << " -> " << o.emit_requests << "\n";
    std::cout << "patches: " << patch_dir.string() << "\n";
    return 0;
  }

  SequencePoses poses;
  std::vector<PairDiagnostics> diagnostics;
  if (!o.poses_in.empty()) {
    const PoseFileContents contents = read_pose_file(o.poses_in);
    poses.absolute = contents.absolute;
    poses.reference_index = contents.reference_index;
    if (poses.absolute.size() != frames.size()) {
      throw_error(ErrorCode::LengthMismatch, "pose file length does not match frame count");
    }
  } else {
    const std::unique_ptr<Estimator> estimator = make_estimator(o.estimator, o.seed);
    SequenceResult result = run_sequence(frames, *estimator, cfg);
    poses = std::move(result.poses);
    diagnostics = std::move(result.diagnostics);
  }

  const fs::path poses_path =
      o.poses_out.empty() ? fs::path(o.out) / "poses.txt" : fs::path(o.poses_out);
  write_pose_file(poses_path, poses.absolute, poses.reference_index,
                  {"estimator=" + o.estimator, "n=" + std::to_string(cfg.n_iterations),
                   "patch=" + std::to_string(cfg.patch_size),
                   "margin=" + std::to_string(cfg.margin), "seed=" + std::to_string(cfg.seed)});
  if (!o.diagnostics_out.empty() && !diagnostics.empty()) {
    write_diagnostics_csv(o.diagnostics_out, diagnostics);
  }

  const FovMask mask = make_mask(o.mask, o.mask_radius, fw, fh);
  BlendMode blend;
  if (o.blend == "overwrite_last") {
    blend = BlendMode::overwrite_last;
  } else if (o.blend == "running_mean") {
    blend = BlendMode::running_mean;
  } else {
    throw_error(ErrorCode::InvalidConfig, "blend must be overwrite_last or running_mean");
  }

  const Mosaic mosaic = render(frames, poses, mask, blend, o.canvas_cap);
  write_png_gray8(fs::path(o.out) / "mosaic.png", mosaic.canvas);
  write_text_atomic(fs::path(o.out) / "mosaic_offset.txt",
                    "# translation: reference frame coordinates -> canvas pixels\n" +
                        format_full(mosaic.offset.m(0, 2)) + " " +
                        format_full(mosaic.offset.m(1, 2)) + "\n");
  if (!o.coverage_out.empty()) {
    GrayFrame cov(mosaic.canvas.width, mosaic.canvas.height);
    for (std::size_t i = 0; i < mosaic.coverage.size(); ++i) {
      cov.pixels[i] = static_cast<double>(std::min<std::uint32_t>(mosaic.coverage[i], 255));
    }
    write_png_gray8(o.coverage_out, cov);
  }

  long valid = 0;
  long total = 0;
  for (const PairDiagnostics& diag : diagnostics) {
    valid += diag.valid_count;
    total += static_cast<long>(diag.estimates.size());
  }
  std::cout << "frames: " << frames.size() << "\n";
  if (total > 0) {
    std::cout << "valid_estimates: " << valid << "/" << total << "\n";
  }
  std::cout << "canvas: " << mosaic.canvas.width << "x" << mosaic.canvas.height << "\n";
  std::cout << "mosaic: " << (fs::path(o.out) / "mosaic.png").string() << "\n";
  std::cout << "poses: " << poses_path.string() << "\n";
  return 0;
}

struct EvaluateOpts {
  std::string poses;
  std::string gt;
  std::string frames_dir;
  std::string pairs_dir;
  std::string estimator = "direct";
  int frame_size = 256;
  std::uint64_t seed = 0;
  std::string out_csv = "residuals.csv";
  std::string mask = "full";
  double mask_radius = 0.0;
};

int run_evaluate(const EvaluateOpts& o) {
  const PoseFileContents estimated = read_pose_file(o.poses);
  const PoseFileContents gt = read_pose_file(o.gt);
  if (estimated.reference_index != gt.reference_index) {
    throw_error(ErrorCode::InvalidConfig,
                "pose files use different reference frames (" +
                    std::to_string(estimated.reference_index) + " vs " +
                    std::to_string(gt.reference_index) + ")");
  }

  std::vector<GrayFrame> frames;
  int fw = o.frame_size;
  int fh = o.frame_size;
  if (!o.frames_dir.empty()) {
    frames = load_frame_dir(o.frames_dir, nullptr);
    fw = frames[0].width;
    fh = frames[0].height;
  }

  SequencePoses poses;
  poses.absolute = estimated.absolute;
  poses.reference_index = estimated.reference_index;
  const FovMask mask = make_mask(o.mask, o.mask_radius, fw, fh);
  const SequenceEvaluation eval = evaluate_sequence(
      poses, &gt.absolute, frames.empty() ? nullptr : &frames, fw, fh, mask);

  double rmse = std::numeric_limits<double>::quiet_NaN();
  if (!o.pairs_dir.empty()) {
    const std::vector<LabeledPair> pairs = read_dataset(o.pairs_dir);
    const std::unique_ptr<Estimator> estimator = make_estimator(o.estimator, o.seed);
    rmse = mean_corner_rmse_over_pairs(pairs, *estimator);
  }

  write_residual_csv(o.out_csv, eval.residual);
  const double photometric =
      eval.has_photometric ? eval.photometric_mean : std::numeric_limits<double>::quiet_NaN();
  std::cout << summary_line(rmse, photometric, &eval.residual) << "\n";
  std::cout << "residual_csv: " << o.out_csv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mosaikit: sequential mosaicking of monocular video with robust "
               "patch-based homography estimation"};
  app.require_subcommand(1);

  GenSynthOpts synth_opts;
  CLI::App* gen_synth = app.add_subcommand(
      "gen-synth", "Generate a synthetic sequence with exact ground-truth homographies");
  gen_synth->add_option("--kind", synth_opts.kind, "Trajectory: circular, spiral, linear")
      ->capture_default_str();
  gen_synth->add_option("--frames", synth_opts.frames, "Number of frames")->capture_default_str();
  gen_synth->add_option("--size", synth_opts.size, "Frame side in pixels")->capture_default_str();
  gen_synth
      ->add_option("--radius", synth_opts.radius,
                   "Trajectory radius in px (per-frame step for linear)")
      ->capture_default_str();
  gen_synth->add_option("--radius-growth", synth_opts.radius_growth, "Spiral growth px/frame")
      ->capture_default_str();
  gen_synth
      ->add_option("--rot-per-frame", synth_opts.rot_per_frame_deg,
                   "In-plane rotation per frame, degrees")
      ->capture_default_str();
  gen_synth->add_option("--seed", synth_opts.seed, "Random seed")->capture_default_str();
  gen_synth->add_option("--out", synth_opts.out, "Output directory")->required();
  gen_synth->add_option("--texture", synth_opts.texture_path, "Texture PNG (default: procedural)");
  gen_synth->add_option("--texture-size", synth_opts.texture_size, "Procedural texture side")
      ->capture_default_str();
  gen_synth->add_option("--noise-sigma", synth_opts.noise_sigma, "Additive Gaussian noise sigma")
      ->capture_default_str();
  gen_synth->add_option("--blobs", synth_opts.blobs, "Number of drifting specular blobs")
      ->capture_default_str();
  gen_synth->add_option("--blob-radius", synth_opts.blob_radius, "Specular blob radius px")
      ->capture_default_str();
  gen_synth->add_option("--vignette", synth_opts.vignette, "Vignette strength in [0,1)")
      ->capture_default_str();

  GenCdaOpts cda_opts;
  CLI::App* gen_cda = app.add_subcommand(
      "gen-cda", "Export a rotation+translation patch-pair training dataset with exact labels");
  gen_cda->add_option("--images", cda_opts.images, "Directory of source PNG images")->required();
  gen_cda->add_option("--count", cda_opts.count, "Number of pairs")->capture_default_str();
  gen_cda->add_option("--patch", cda_opts.patch, "Patch side in pixels")->capture_default_str();
  gen_cda->add_option("--beta-max", cda_opts.beta_max, "Max |rotation| in degrees")
      ->capture_default_str();
  gen_cda->add_option("--shift-max", cda_opts.shift_max, "Max |shift| in pixels")
      ->capture_default_str();
  gen_cda->add_option("--margin", cda_opts.margin, "Border margin in pixels")
      ->capture_default_str();
  gen_cda->add_option("--seed", cda_opts.seed, "Random seed")->capture_default_str();
  gen_cda->add_option("--out", cda_opts.out, "Output directory")->required();

  MosaicOpts mosaic_opts;
  CLI::App* mosaic = app.add_subcommand(
      "mosaic", "Estimate pairwise homographies, chain them, and render the mosaic");
  mosaic->add_option("--frames", mosaic_opts.frames_dir, "Directory of frame PNGs")->required();
  mosaic
      ->add_option("--estimator", mosaic_opts.estimator,
                   "Estimator: direct, feature, or file:<predictions.csv>")
      ->capture_default_str();
  mosaic->add_option("--n", mosaic_opts.n_iterations, "Random patch pairs per adjacent frame pair")
      ->capture_default_str();
  mosaic->add_option("--patch", mosaic_opts.patch, "Patch side in pixels")->capture_default_str();
  mosaic->add_option("--margin", mosaic_opts.margin, "Patch margin from the borders")
      ->capture_default_str();
  mosaic->add_option("--seed", mosaic_opts.seed, "Random seed")->capture_default_str();
  mosaic->add_option("--reference", mosaic_opts.reference, "Reference frame index")
      ->capture_default_str();
  mosaic->add_option("--min-valid", mosaic_opts.min_valid, "Minimum valid estimates per pair")
      ->capture_default_str();
  mosaic->add_option("--blend", mosaic_opts.blend, "Blend: overwrite_last or running_mean")
      ->capture_default_str();
  mosaic->add_option("--mask", mosaic_opts.mask, "Field-of-view mask: full or circular")
      ->capture_default_str();
  mosaic->add_option("--mask-radius", mosaic_opts.mask_radius,
                     "Circular mask radius (default: half frame side)");
  mosaic->add_option("--out", mosaic_opts.out, "Output directory")->capture_default_str();
  mosaic->add_option("--poses-out", mosaic_opts.poses_out, "Pose file path (default <out>/poses.txt)");
  mosaic->add_option("--diagnostics-out", mosaic_opts.diagnostics_out,
                     "Per-iteration decomposition CSV");
  mosaic->add_option("--coverage-out", mosaic_opts.coverage_out, "Coverage map PNG");
  mosaic->add_option("--poses", mosaic_opts.poses_in,
                     "Skip estimation and render from this pose file");
  mosaic->add_option("--emit-requests", mosaic_opts.emit_requests,
                     "Write the patch-request CSV (plus patches) for an external model and stop");
  mosaic->add_option("--canvas-cap", mosaic_opts.canvas_cap, "Canvas area cap in pixels")
      ->capture_default_str();

  EvaluateOpts eval_opts;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Compare estimated poses against ground truth");
  evaluate->add_option("--poses", eval_opts.poses, "Estimated pose file")->required();
  evaluate->add_option("--gt", eval_opts.gt, "Ground-truth pose file")->required();
  evaluate->add_option("--frames", eval_opts.frames_dir,
                       "Frame directory (enables photometric error)");
  evaluate->add_option("--pairs", eval_opts.pairs_dir,
                       "Labeled patch-pair dataset (enables corner RMSE)");
  evaluate->add_option("--estimator", eval_opts.estimator, "Estimator for --pairs")
      ->capture_default_str();
  evaluate->add_option("--frame-size", eval_opts.frame_size, "Frame side when --frames is absent")
      ->capture_default_str();
  evaluate->add_option("--seed", eval_opts.seed, "Random seed")->capture_default_str();
  evaluate->add_option("--out-csv", eval_opts.out_csv, "Residual curve CSV path")
      ->capture_default_str();
  evaluate->add_option("--mask", eval_opts.mask, "Mask: full or circular")->capture_default_str();
  evaluate->add_option("--mask-radius", eval_opts.mask_radius, "Circular mask radius");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_synth->parsed()) return run_gen_synth(synth_opts);
    if (gen_cda->parsed()) return run_gen_cda(cda_opts);
    if (mosaic->parsed()) return run_mosaic(mosaic_opts);
    if (evaluate->parsed()) return run_evaluate(eval_opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
