#pragma once

#include <filesystem>
#include <vector>

#include "mosaikit/augment.hpp"
#include "mosaikit/compositor.hpp"
#include "mosaikit/estimator.hpp"
#include "mosaikit/homography.hpp"
#include "mosaikit/image.hpp"
#include "mosaikit/sequential.hpp"

namespace mosaikit {

struct ResidualReport {
  std::vector<double> per_frame;  // pixels
  double mean = 0.0;
  double max = 0.0;
};

// Per frame: mean over the four frame corners of the distance between the
// ground-truth and estimated absolute mappings of that corner.
ResidualReport mean_residual_error(const std::vector<Homography>& estimated_absolute,
                                   const std::vector<Homography>& gt_absolute, int frame_width,
                                   int frame_height);

// Root mean square over the 8 corner-displacement components.
double corner_rmse(const FourPointHomography& predicted, const FourPointHomography& gt);

// Mean |F_{k+1}(x) - F_k(h_rel(x))| over pixels where x passes the mask and
// h_rel(x) lands inside frame_k (and its mask), bilinear sampling, 0-255
// units. Throws EmptyOverlap when no pixel qualifies.
double photometric_error(const GrayFrame& frame_k, const GrayFrame& frame_k1,
                         const Homography& h_rel, const FovMask& mask);

// Mean estimator corner RMSE against the stored labels of a dataset.
double mean_corner_rmse_over_pairs(const std::vector<LabeledPair>& pairs,
                                   const Estimator& estimator);

struct SequenceEvaluation {
  ResidualReport residual;
  bool has_residual = false;
  double photometric_mean = 0.0;
  bool has_photometric = false;
};

// Residual curve against gt (when given) plus mean photometric error over
// adjacent frames (when frames are given); relative maps are derived from the
// absolute poses.
SequenceEvaluation evaluate_sequence(const SequencePoses& poses,
                                     const std::vector<Homography>* gt_absolute,
                                     const std::vector<GrayFrame>* frames, int frame_width,
                                     int frame_height, const FovMask& mask = FovMask::full());

// CSV with header frame,residual_px.
void write_residual_csv(const std::filesystem::path& path, const ResidualReport& report);

ResidualReport read_residual_csv(const std::filesystem::path& path);

// "rmse=<v> photometric=<v> residual_mean=<v> residual_max=<v>"; components
// that were not computed print as nan.
std::string summary_line(double rmse, double photometric, const ResidualReport* residual);

}  // namespace mosaikit
