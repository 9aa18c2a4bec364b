#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "mosaikit/estimator.hpp"
#include "mosaikit/homography.hpp"
#include "mosaikit/image.hpp"

namespace mosaikit {

struct SequentialConfig {
  int n_iterations = 99;
  int patch_size = 128;
  int margin = 32;
  std::uint64_t seed = 0;
  int reference_index = 0;
  int min_valid = 50;
};

struct PairwiseEstimate {
  SimilarityDecomposition decomposition;
  Homography homography;
  int iteration = 0;
  bool valid = false;
};

struct PairDiagnostics {
  int pair_index = 0;  // adjacent pair (k, k+1)
  std::vector<PairwiseEstimate> estimates;
  int selected_iteration = -1;
  int valid_count = 0;
};

// relative[k] maps frame k+1 coordinates into frame k coordinates;
// absolute[k] maps frame k into the reference frame.
struct SequencePoses {
  std::vector<Homography> relative;
  std::vector<Homography> absolute;
  int reference_index = 0;
};

// The anchor drawn for iteration n of pair k, keyed by (seed, k, n); shared
// by the estimation loop and the external-prediction request writer.
CornerQuad draw_patch_anchor(int frame_width, int frame_height, const SequentialConfig& cfg,
                             int pair_index, int iteration);

// Iteration index of the valid estimate whose theta is the lower median of
// the valid set (earliest iteration on ties); -1 when nothing is valid.
int select_median_index(const std::vector<PairwiseEstimate>& estimates);

// Runs n_iterations random co-located patch estimates between the two frames,
// decomposes each DLT-anchored homography, drops invalid ones (non-converged,
// reflections, non-finite), selects the estimate whose theta is the lower
// median of the valid set, and returns it recomposed from that single
// estimate's parameters. Throws TooFewValid when fewer than cfg.min_valid
// estimates survive.
std::pair<Homography, PairDiagnostics> estimate_pair_robust(const GrayFrame& frame_k,
                                                            const GrayFrame& frame_k1,
                                                            const Estimator& estimator,
                                                            const SequentialConfig& cfg,
                                                            int pair_index = 0);

// Chains relative homographies into absolute poses about the reference frame.
SequencePoses chain(const std::vector<Homography>& relatives, int reference_index);

struct SequenceResult {
  SequencePoses poses;
  std::vector<PairDiagnostics> diagnostics;
};

SequenceResult run_sequence(const std::vector<GrayFrame>& frames, const Estimator& estimator,
                            const SequentialConfig& cfg);

// CSV: k,n,valid,theta,gamma,s_g,s_h,t_x,t_y,selected
void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<PairDiagnostics>& diagnostics);

}  // namespace mosaikit
