#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mosaikit/homography.hpp"
#include "mosaikit/image.hpp"

namespace mosaikit {

struct EstimatorRequest {
  const GrayFrame& patch_a;
  const GrayFrame& patch_b;
  CornerQuad anchor;  // patch_a's corner pixels in source-frame coordinates
  int frame_index = 0;
  int iteration_index = 0;
};

struct EstimatorResult {
  FourPointHomography fp;
  bool converged = false;
  double residual = 0.0;  // mean abs intensity error at the solution
};

// Pairwise patch homography estimator. Implementations are stateless with
// respect to requests and safe to call concurrently.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual EstimatorResult estimate(const EstimatorRequest& req) const = 0;
  virtual std::string name() const = 0;
};

// Coarse-to-fine Gauss-Newton alignment over a rotation+translation motion
// model: minimizes the mean squared intensity difference between patch_b and
// patch_a resampled through the candidate motion, with bilinear sampling and
// central-difference gradients.
class DirectEstimator : public Estimator {
 public:
  struct Options {
    int pyramid_levels = 3;
    int max_iterations_per_level = 50;
    double update_tolerance = 1e-5;
  };

  DirectEstimator() = default;
  explicit DirectEstimator(const Options& options) : options_(options) {}

  EstimatorResult estimate(const EstimatorRequest& req) const override;
  std::string name() const override { return "direct"; }

 private:
  Options options_;
};

// Harris corners + 11x11 NCC descriptor matching with a 0.8 ratio test, and
// a 2-point similarity model inside RANSAC (500 iterations, 2 px inliers)
// refit by least squares on the best inlier set.
class FeatureEstimator : public Estimator {
 public:
  struct Options {
    int max_corners = 250;
    int min_corners = 8;
    int descriptor_radius = 5;  // 11x11 window
    double ratio_test = 0.8;
    double min_ncc = 0.25;  // reject matches with no real correlation
    int ransac_iterations = 500;
    double inlier_threshold_px = 2.0;
    int min_inliers = 4;
    double harris_k = 0.04;
    std::uint64_t seed = 0;
  };

  FeatureEstimator() = default;
  explicit FeatureEstimator(const Options& options) : options_(options) {}

  EstimatorResult estimate(const EstimatorRequest& req) const override;
  std::string name() const override { return "feature"; }

 private:
  Options options_;
};

struct PredictionRow {
  int frame_index = 0;
  int iteration_index = 0;
  CornerQuad anchor;
  FourPointHomography fp;
};

// Lookup table of externally computed 4-point estimates keyed by
// (frame_index, iteration_index). Read-only after load.
class PredictionTable {
 public:
  void insert(const PredictionRow& row);
  const FourPointHomography* find(int frame_index, int iteration_index) const;
  std::size_t size() const { return rows_.size(); }

  static PredictionTable load_csv(const std::filesystem::path& path);

 private:
  std::map<std::pair<int, int>, FourPointHomography> rows_;
};

// CSV with header frame_index,iteration_index,u1,v1,...,v4,du1,dv1,...,dv4.
void write_prediction_file(const std::filesystem::path& path,
                           const std::vector<PredictionRow>& rows);

// Same columns without the displacement block: what an external model consumes.
void write_request_file(const std::filesystem::path& path,
                        const std::vector<PredictionRow>& rows);

// Replays table rows; throws MissingPrediction when a request has no row.
class PredictionTableEstimator : public Estimator {
 public:
  explicit PredictionTableEstimator(PredictionTable table) : table_(std::move(table)) {}

  EstimatorResult estimate(const EstimatorRequest& req) const override;
  std::string name() const override { return "file"; }

 private:
  PredictionTable table_;
};

}  // namespace mosaikit
