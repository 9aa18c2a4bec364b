#include "mosaikit/sequential.hpp"

#include <algorithm>
#include <cmath>

#include "mosaikit/error.hpp"
#include "mosaikit/parallel.hpp"
#include "mosaikit/rng.hpp"
#include "mosaikit/text_io.hpp"

namespace mosaikit {

namespace {

void validate_sequential_config(const SequentialConfig& cfg) {
  if (cfg.n_iterations < 1) {
    throw_error(ErrorCode::InvalidConfig, "n_iterations must be >= 1");
  }
  if (cfg.min_valid < 1 || cfg.min_valid > cfg.n_iterations) {
    throw_error(ErrorCode::InvalidConfig, "min_valid must be in [1, n_iterations]");
  }
  if (cfg.margin < 0 || cfg.patch_size < 2) {
    throw_error(ErrorCode::InvalidConfig, "bad patch_size or margin");
  }
}

}  // namespace

CornerQuad draw_patch_anchor(int frame_width, int frame_height, const SequentialConfig& cfg,
                             int pair_index, int iteration) {
  const int span_x = frame_width - cfg.patch_size - 2 * cfg.margin;
  const int span_y = frame_height - cfg.patch_size - 2 * cfg.margin;
  if (span_x < 0 || span_y < 0) {
    throw_error(ErrorCode::FrameTooSmall,
                "frame " + std::to_string(frame_width) + "x" + std::to_string(frame_height) +
                    " cannot host patch " + std::to_string(cfg.patch_size) + " with margin " +
                    std::to_string(cfg.margin));
  }
  Rng rng = Rng::derive(cfg.seed, {static_cast<std::uint64_t>(pair_index),
                                   static_cast<std::uint64_t>(iteration)});
  const int pos_u = rng.uniform_int(cfg.margin, cfg.margin + span_x);
  const int pos_v = rng.uniform_int(cfg.margin, cfg.margin + span_y);
  return CornerQuad::axis_aligned(pos_u, pos_v, cfg.patch_size);
}

int select_median_index(const std::vector<PairwiseEstimate>& estimates) {
  // Lower median of theta; ties resolve to the earliest iteration.
  std::vector<std::pair<double, int>> theta_by_iteration;
  for (const PairwiseEstimate& est : estimates) {
    if (est.valid) theta_by_iteration.emplace_back(est.decomposition.theta, est.iteration);
  }
  if (theta_by_iteration.empty()) return -1;
  std::sort(theta_by_iteration.begin(), theta_by_iteration.end());
  return theta_by_iteration[(theta_by_iteration.size() - 1) / 2].second;
}

std::pair<Homography, PairDiagnostics> estimate_pair_robust(const GrayFrame& frame_k,
                                                            const GrayFrame& frame_k1,
                                                            const Estimator& estimator,
                                                            const SequentialConfig& cfg,
                                                            int pair_index) {
  validate_sequential_config(cfg);
  if (!frame_k.same_size(frame_k1)) {
    throw_error(ErrorCode::SizeMismatch, "adjacent frames differ in size");
  }

  PairDiagnostics diag;
  diag.pair_index = pair_index;
  diag.estimates.resize(cfg.n_iterations);

  parallel_for(0, cfg.n_iterations, [&](int n) {
    PairwiseEstimate& est = diag.estimates[n];
    est.iteration = n;
    est.valid = false;
    const CornerQuad anchor =
        draw_patch_anchor(frame_k.width, frame_k.height, cfg, pair_index, n);
    const int x0 = static_cast<int>(anchor.corners[0].u);
    const int y0 = static_cast<int>(anchor.corners[0].v);
    const GrayFrame patch_a = crop(frame_k, x0, y0, cfg.patch_size, cfg.patch_size);
    const GrayFrame patch_b = crop(frame_k1, x0, y0, cfg.patch_size, cfg.patch_size);
    try {
      const EstimatorRequest req{patch_a, patch_b, anchor, pair_index, n};
      const EstimatorResult res = estimator.estimate(req);
      if (!res.converged || !res.fp.is_finite()) return;
      const Homography h = four_point_to_matrix(anchor, res.fp);
      if (!h.is_finite()) return;
      const SimilarityDecomposition d = decompose_similarity(h);
      if (!d.is_finite()) return;
      est.homography = h;
      est.decomposition = d;
      est.valid = true;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MissingPrediction) throw;
      // Degenerate patches, reflections and near-singular decompositions are
      // excluded from the median rather than aborting the pair.
    }
  });

  diag.valid_count = 0;
  for (const PairwiseEstimate& est : diag.estimates) {
    if (est.valid) ++diag.valid_count;
  }
  if (diag.valid_count < cfg.min_valid) {
    throw_error(ErrorCode::TooFewValid,
                "pair " + std::to_string(pair_index) + " kept " +
                    std::to_string(diag.valid_count) + " of " + std::to_string(cfg.n_iterations) +
                    " estimates, need " + std::to_string(cfg.min_valid));
  }
  diag.selected_iteration = select_median_index(diag.estimates);

  const Homography consistent =
      recompose_similarity(diag.estimates[diag.selected_iteration].decomposition);
  return {consistent, std::move(diag)};
}

SequencePoses chain(const std::vector<Homography>& relatives, int reference_index) {
  const int frames = static_cast<int>(relatives.size()) + 1;
  if (reference_index < 0 || reference_index >= frames) {
    throw_error(ErrorCode::InvalidConfig, "reference index outside the sequence");
  }
  SequencePoses poses;
  poses.relative = relatives;
  poses.reference_index = reference_index;
  poses.absolute.resize(frames);
  poses.absolute[reference_index] = Homography::identity();
  for (int k = reference_index; k + 1 < frames; ++k) {
    poses.absolute[k + 1] = compose(poses.absolute[k], relatives[k]);
  }
  for (int k = reference_index - 1; k >= 0; --k) {
    poses.absolute[k] = compose(poses.absolute[k + 1], invert(relatives[k]));
  }
  return poses;
}

SequenceResult run_sequence(const std::vector<GrayFrame>& frames, const Estimator& estimator,
                            const SequentialConfig& cfg) {
  validate_sequential_config(cfg);
  if (frames.size() < 2) {
    throw_error(ErrorCode::InvalidConfig, "need at least 2 frames");
  }
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (!frames[k].same_size(frames[0])) {
      throw_error(ErrorCode::SizeMismatch, "frames differ in size");
    }
  }

  SequenceResult result;
  std::vector<Homography> relatives;
  relatives.reserve(frames.size() - 1);
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    auto [h, diag] =
        estimate_pair_robust(frames[k], frames[k + 1], estimator, cfg, static_cast<int>(k));
    relatives.push_back(h);
    result.diagnostics.push_back(std::move(diag));
  }
  result.poses = chain(relatives, cfg.reference_index);
  return result;
}

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<PairDiagnostics>& diagnostics) {
  std::string content = "k,n,valid,theta,gamma,s_g,s_h,t_x,t_y,selected\n";
  for (const PairDiagnostics& diag : diagnostics) {
    for (const PairwiseEstimate& est : diag.estimates) {
      const SimilarityDecomposition& d = est.decomposition;
      content += std::to_string(diag.pair_index) + "," + std::to_string(est.iteration) + "," +
                 (est.valid ? "1" : "0") + "," + format_full(d.theta) + "," +
                 format_full(d.gamma) + "," + format_full(d.scale_major) + "," +
                 format_full(d.scale_minor) + "," + format_full(d.translate_x) + "," +
                 format_full(d.translate_y) + "," +
                 (est.iteration == diag.selected_iteration ? "1" : "0") + "\n";
    }
  }
  write_text_atomic(path, content);
}

}  // namespace mosaikit
