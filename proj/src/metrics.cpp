#include "mosaikit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mosaikit/error.hpp"
#include "mosaikit/text_io.hpp"

namespace mosaikit {

ResidualReport mean_residual_error(const std::vector<Homography>& estimated_absolute,
                                   const std::vector<Homography>& gt_absolute, int frame_width,
                                   int frame_height) {
  if (estimated_absolute.size() != gt_absolute.size()) {
    throw_error(ErrorCode::LengthMismatch,
                std::to_string(estimated_absolute.size()) + " estimated poses vs " +
                    std::to_string(gt_absolute.size()) + " ground-truth poses");
  }
  if (estimated_absolute.empty()) {
    throw_error(ErrorCode::LengthMismatch, "no poses to compare");
  }
  const CornerQuad corners = CornerQuad(Point2(0, 0), Point2(frame_width - 1, 0),
                                        Point2(frame_width - 1, frame_height - 1),
                                        Point2(0, frame_height - 1));
  ResidualReport report;
  report.per_frame.reserve(estimated_absolute.size());
  double total = 0.0;
  for (std::size_t k = 0; k < estimated_absolute.size(); ++k) {
    double acc = 0.0;
    for (const Point2& c : corners.corners) {
      const Point2 a = warp_point(gt_absolute[k], c);
      const Point2 b = warp_point(estimated_absolute[k], c);
      acc += (a - b).norm();
    }
    const double residual = acc / 4.0;
    report.per_frame.push_back(residual);
    total += residual;
    report.max = std::max(report.max, residual);
  }
  report.mean = total / static_cast<double>(report.per_frame.size());
  return report;
}

double corner_rmse(const FourPointHomography& predicted, const FourPointHomography& gt) {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double du = predicted.du[i] - gt.du[i];
    const double dv = predicted.dv[i] - gt.dv[i];
    acc += du * du + dv * dv;
  }
  return std::sqrt(acc / 8.0);
}

double photometric_error(const GrayFrame& frame_k, const GrayFrame& frame_k1,
                         const Homography& h_rel, const FovMask& mask) {
  if (!frame_k.same_size(frame_k1)) {
    throw_error(ErrorCode::SizeMismatch, "frames differ in size");
  }
  double acc = 0.0;
  long count = 0;
  for (int y = 0; y < frame_k1.height; ++y) {
    for (int x = 0; x < frame_k1.width; ++x) {
      if (!mask.contains(x, y)) continue;
      const Point2 p = warp_point(h_rel, {static_cast<double>(x), static_cast<double>(y)});
      if (!in_sample_bounds(frame_k, p.u, p.v) || !mask.contains(p.u, p.v)) continue;
      acc += std::abs(frame_k1.at(x, y) - bilinear_sample(frame_k, p.u, p.v));
      ++count;
    }
  }
  if (count == 0) {
    throw_error(ErrorCode::EmptyOverlap, "no valid pixels under mask and footprint");
  }
  return acc / static_cast<double>(count);
}

double mean_corner_rmse_over_pairs(const std::vector<LabeledPair>& pairs,
                                   const Estimator& estimator) {
  if (pairs.empty()) {
    throw_error(ErrorCode::InvalidInput, "no labeled pairs");
  }
  double acc = 0.0;
  for (const LabeledPair& lp : pairs) {
    const EstimatorRequest req{lp.pair.patch_a, lp.pair.patch_b, lp.pair.anchor, lp.index, 0};
    const EstimatorResult res = estimator.estimate(req);
    acc += corner_rmse(res.fp, *lp.pair.gt);
  }
  return acc / static_cast<double>(pairs.size());
}

SequenceEvaluation evaluate_sequence(const SequencePoses& poses,
                                     const std::vector<Homography>* gt_absolute,
                                     const std::vector<GrayFrame>* frames, int frame_width,
                                     int frame_height, const FovMask& mask) {
  if (gt_absolute == nullptr && frames == nullptr) {
    throw_error(ErrorCode::InvalidInput, "need ground truth poses or frames");
  }
  SequenceEvaluation eval;
  if (gt_absolute != nullptr) {
    eval.residual = mean_residual_error(poses.absolute, *gt_absolute, frame_width, frame_height);
    eval.has_residual = true;
  }
  if (frames != nullptr) {
    if (frames->size() != poses.absolute.size()) {
      throw_error(ErrorCode::LengthMismatch, "frame count does not match pose count");
    }
    double acc = 0.0;
    long pairs = 0;
    for (std::size_t k = 0; k + 1 < frames->size(); ++k) {
      const Homography rel = compose(invert(poses.absolute[k]), poses.absolute[k + 1]);
      acc += photometric_error((*frames)[k], (*frames)[k + 1], rel, mask);
      ++pairs;
    }
    if (pairs > 0) {
      eval.photometric_mean = acc / static_cast<double>(pairs);
      eval.has_photometric = true;
    }
  }
  return eval;
}

void write_residual_csv(const std::filesystem::path& path, const ResidualReport& report) {
  std::string content = "frame,residual_px\n";
  for (std::size_t k = 0; k < report.per_frame.size(); ++k) {
    content += std::to_string(k) + "," + format_full(report.per_frame[k]) + "\n";
  }
  write_text_atomic(path, content);
}

ResidualReport read_residual_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) {
    throw_error(ErrorCode::MalformedFile, "empty residual csv");
  }
  ResidualReport report;
  double total = 0.0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 2) {
      throw_error(ErrorCode::MalformedFile, "residual csv row needs 2 fields");
    }
    const double r = parse_double(f[1], path.string());
    report.per_frame.push_back(r);
    total += r;
    report.max = std::max(report.max, r);
  }
  if (!report.per_frame.empty()) {
    report.mean = total / static_cast<double>(report.per_frame.size());
  }
  return report;
}

std::string summary_line(double rmse, double photometric, const ResidualReport* residual) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double rm = residual != nullptr ? residual->mean : nan;
  const double rx = residual != nullptr ? residual->max : nan;
  return "rmse=" + format_sig9(rmse) + " photometric=" + format_sig9(photometric) +
         " residual_mean=" + format_sig9(rm) + " residual_max=" + format_sig9(rx);
}

}  // namespace mosaikit
