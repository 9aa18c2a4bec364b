#include "mosaikit/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "mosaikit/augment.hpp"
#include "mosaikit/error.hpp"
#include "mosaikit/rng.hpp"
#include "mosaikit/text_io.hpp"

namespace mosaikit {

namespace {

struct RigidParams {
  double angle = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
};

// Central differences; replicated borders.
void gradients(const GrayFrame& img, GrayFrame* gx, GrayFrame* gy) {
  const int w = img.width;
  const int h = img.height;
  *gx = GrayFrame(w, h);
  *gy = GrayFrame(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(0, x - 1);
      const int xp = std::min(w - 1, x + 1);
      const int ym = std::max(0, y - 1);
      const int yp = std::min(h - 1, y + 1);
      gx->at(x, y) = 0.5 * (img.at(xp, y) - img.at(xm, y));
      gy->at(x, y) = 0.5 * (img.at(x, yp) - img.at(x, ym));
    }
  }
}

// One Gauss-Newton pass at a single pyramid level. Returns true when the
// update norm dropped below tol before the iteration cap.
bool align_level(const GrayFrame& a, const GrayFrame& b, int max_iters, double tol,
                 RigidParams* params, double* mean_abs_residual) {
  GrayFrame gx, gy;
  gradients(a, &gx, &gy);
  const int size = b.width;
  const double c = (size - 1) / 2.0;  // rotate about the patch centroid

  const auto evaluate = [&](const RigidParams& p, Eigen::Matrix3d* jtj, Eigen::Vector3d* jtr,
                            double* abs_sum, long* count) {
    const double cos_a = std::cos(p.angle);
    const double sin_a = std::sin(p.angle);
    if (jtj) jtj->setZero();
    if (jtr) jtr->setZero();
    *abs_sum = 0.0;
    *count = 0;
    for (int y = 0; y < size; ++y) {
      const double ov = y - c;
      for (int x = 0; x < size; ++x) {
        const double ou = x - c;
        const double wu = cos_a * ou + sin_a * ov + c + p.shift_x;
        const double wv = -sin_a * ou + cos_a * ov + c + p.shift_y;
        // Stay one pixel inside so the sampled gradients are central.
        if (wu < 1.0 || wv < 1.0 || wu > size - 2.0 || wv > size - 2.0) continue;
        const double r = bilinear_sample(a, wu, wv) - b.at(x, y);
        *abs_sum += std::abs(r);
        ++(*count);
        if (!jtj) continue;
        const double gu = bilinear_sample(gx, wu, wv);
        const double gv = bilinear_sample(gy, wu, wv);
        // d(warp)/d(angle) = [-sin, cos; -cos, -sin] * offset
        const double ja = gu * (-sin_a * ou + cos_a * ov) + gv * (-cos_a * ou - sin_a * ov);
        const Eigen::Vector3d j(ja, gu, gv);
        *jtj += j * j.transpose();
        *jtr += j * r;
      }
    }
  };

  const long min_count = static_cast<long>(size) * size / 4;
  bool converged = false;
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::Matrix3d jtj;
    Eigen::Vector3d jtr;
    double abs_sum = 0.0;
    long count = 0;
    evaluate(*params, &jtj, &jtr, &abs_sum, &count);
    if (count < std::max<long>(min_count, 16)) {
      converged = false;
      break;
    }
    const Eigen::LDLT<Eigen::Matrix3d> solver(jtj);
    if (solver.info() != Eigen::Success) break;
    const Eigen::Vector3d step = solver.solve(jtr);
    if (!step.allFinite()) break;
    params->angle -= step(0);
    params->shift_x -= step(1);
    params->shift_y -= step(2);
    if (step.norm() < tol) {
      converged = true;
      break;
    }
  }

  double abs_sum = 0.0;
  long count = 0;
  evaluate(*params, nullptr, nullptr, &abs_sum, &count);
  *mean_abs_residual = count > 0 ? abs_sum / count : 255.0;
  if (count < std::max<long>(min_count, 16)) converged = false;
  return converged;
}

FourPointHomography rigid_to_four_point(const CornerQuad& anchor, const RigidParams& p) {
  MotionParams m;
  m.angle_rad = p.angle;
  m.shift_x = p.shift_x;
  m.shift_y = p.shift_y;
  const CornerQuad moved = apply_motion(anchor, m);
  FourPointHomography fp;
  for (int i = 0; i < 4; ++i) {
    fp.du[i] = moved.corners[i].u - anchor.corners[i].u;
    fp.dv[i] = moved.corners[i].v - anchor.corners[i].v;
  }
  return fp;
}

void check_request(const EstimatorRequest& req) {
  if (!req.patch_a.same_size(req.patch_b) || req.patch_a.width != req.patch_a.height) {
    throw_error(ErrorCode::SizeMismatch, "patches must be square and equally sized");
  }
}

}  // namespace

EstimatorResult DirectEstimator::estimate(const EstimatorRequest& req) const {
  check_request(req);
  if (intensity_variance(req.patch_a) <= 0.0 || intensity_variance(req.patch_b) <= 0.0) {
    throw_error(ErrorCode::DegenerateInput, "constant patch has no alignment signal");
  }

  // Don't let the coarsest level shrink below a usable size.
  int levels = options_.pyramid_levels;
  while (levels > 1 && (req.patch_a.width >> (levels - 1)) < 16) --levels;

  std::vector<GrayFrame> pyr_a{req.patch_a};
  std::vector<GrayFrame> pyr_b{req.patch_b};
  for (int l = 1; l < levels; ++l) {
    pyr_a.push_back(box_downsample(pyr_a.back()));
    pyr_b.push_back(box_downsample(pyr_b.back()));
  }

  RigidParams params;
  bool converged = false;
  double residual = 255.0;
  for (int l = levels - 1; l >= 0; --l) {
    converged = align_level(pyr_a[l], pyr_b[l], options_.max_iterations_per_level,
                            options_.update_tolerance, &params, &residual);
    if (l > 0) {
      params.shift_x *= 2.0;
      params.shift_y *= 2.0;
    }
  }

  const bool finite = std::isfinite(params.angle) && std::isfinite(params.shift_x) &&
                      std::isfinite(params.shift_y);
  EstimatorResult result;
  result.converged = converged && finite;
  result.residual = residual;
  result.fp = finite ? rigid_to_four_point(req.anchor, params) : FourPointHomography{};
  return result;
}

namespace {

struct Corner {
  int x = 0;
  int y = 0;
  double response = 0.0;
};

// 5-tap binomial smoothing, separable.
GrayFrame smooth5(const GrayFrame& img) {
  static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const int w = img.width;
  const int h = img.height;
  GrayFrame tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) {
        acc += k[i + 2] * img.at(std::clamp(x + i, 0, w - 1), y);
      }
      tmp.at(x, y) = acc;
    }
  }
  GrayFrame out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) {
        acc += k[i + 2] * tmp.at(x, std::clamp(y + i, 0, h - 1));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

std::vector<Corner> harris_corners(const GrayFrame& img, const FeatureEstimator::Options& opt) {
  GrayFrame gx, gy;
  gradients(img, &gx, &gy);
  const int w = img.width;
  const int h = img.height;
  GrayFrame xx(w, h), yy(w, h), xy(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double ix = gx.at(x, y);
      const double iy = gy.at(x, y);
      xx.at(x, y) = ix * ix;
      yy.at(x, y) = iy * iy;
      xy.at(x, y) = ix * iy;
    }
  }
  xx = smooth5(xx);
  yy = smooth5(yy);
  xy = smooth5(xy);

  GrayFrame response(w, h);
  double max_response = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = xx.at(x, y);
      const double b = xy.at(x, y);
      const double c = yy.at(x, y);
      const double det = a * c - b * b;
      const double tr = a + c;
      const double r = det - opt.harris_k * tr * tr;
      response.at(x, y) = r;
      max_response = std::max(max_response, r);
    }
  }
  if (max_response <= 1e-3) return {};

  // Keep the descriptor window plus one gradient pixel inside the patch.
  const int border = opt.descriptor_radius + 1;
  const double threshold = 0.01 * max_response;
  std::vector<Corner> corners;
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      const double r = response.at(x, y);
      if (r <= threshold) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (response.at(x + dx, y + dy) >= r && (dy < 0 || (dy == 0 && dx < 0))) {
            // Ties break toward the earlier pixel in scan order.
            is_max = false;
            break;
          }
          if (response.at(x + dx, y + dy) > r) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) corners.push_back({x, y, r});
    }
  }
  std::sort(corners.begin(), corners.end(), [](const Corner& a, const Corner& b) {
    if (a.response != b.response) return a.response > b.response;
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  if (static_cast<int>(corners.size()) > opt.max_corners) {
    corners.resize(opt.max_corners);
  }
  return corners;
}

// Normalized descriptor: zero-mean window scaled to unit energy.
std::vector<double> descriptor(const GrayFrame& img, const Corner& c, int radius) {
  const int side = 2 * radius + 1;
  std::vector<double> d(static_cast<std::size_t>(side) * side);
  double mean = 0.0;
  int i = 0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      d[i++] = img.at(c.x + dx, c.y + dy);
      mean += d[i - 1];
    }
  }
  mean /= d.size();
  double energy = 0.0;
  for (double& v : d) {
    v -= mean;
    energy += v * v;
  }
  const double norm = std::sqrt(energy);
  if (norm > 1e-9) {
    for (double& v : d) v /= norm;
  }
  return d;
}

struct Match {
  Point2 from;  // patch_b coordinates
  Point2 to;    // patch_a coordinates
};

struct Similarity {
  // Maps x to [a, b; -b, a] * x + t.
  double a = 1.0, b = 0.0, tx = 0.0, ty = 0.0;

  Point2 apply(const Point2& p) const {
    return {a * p.u + b * p.v + tx, -b * p.u + a * p.v + ty};
  }
};

bool similarity_from_two(const Match& m0, const Match& m1, Similarity* s) {
  const double du = m1.from.u - m0.from.u;
  const double dv = m1.from.v - m0.from.v;
  const double eu = m1.to.u - m0.to.u;
  const double ev = m1.to.v - m0.to.v;
  const double det = du * du + dv * dv;
  if (det < 1e-9) return false;
  s->a = (eu * du + ev * dv) / det;
  s->b = (eu * dv - ev * du) / det;
  s->tx = m0.to.u - (s->a * m0.from.u + s->b * m0.from.v);
  s->ty = m0.to.v - (-s->b * m0.from.u + s->a * m0.from.v);
  return true;
}

bool similarity_least_squares(const std::vector<Match>& matches, const std::vector<int>& subset,
                              Similarity* s) {
  Point2 mean_from, mean_to;
  for (int i : subset) {
    mean_from = mean_from + matches[i].from;
    mean_to = mean_to + matches[i].to;
  }
  const double n = static_cast<double>(subset.size());
  mean_from = mean_from * (1.0 / n);
  mean_to = mean_to * (1.0 / n);

  double sxx = 0.0, num_a = 0.0, num_b = 0.0;
  for (int i : subset) {
    const Point2 f = matches[i].from - mean_from;
    const Point2 t = matches[i].to - mean_to;
    sxx += f.u * f.u + f.v * f.v;
    num_a += t.u * f.u + t.v * f.v;
    num_b += t.u * f.v - t.v * f.u;
  }
  if (sxx < 1e-9) return false;
  s->a = num_a / sxx;
  s->b = num_b / sxx;
  s->tx = mean_to.u - (s->a * mean_from.u + s->b * mean_from.v);
  s->ty = mean_to.v - (-s->b * mean_from.u + s->a * mean_from.v);
  return true;
}

}  // namespace

EstimatorResult FeatureEstimator::estimate(const EstimatorRequest& req) const {
  check_request(req);
  // Detection and description run on smoothed copies so sensor noise does not
  // drown the correlation scores; the residual uses the raw patches.
  const GrayFrame smooth_a = smooth5(req.patch_a);
  const GrayFrame smooth_b = smooth5(req.patch_b);
  const std::vector<Corner> corners_a = harris_corners(smooth_a, options_);
  const std::vector<Corner> corners_b = harris_corners(smooth_b, options_);
  if (static_cast<int>(corners_a.size()) < options_.min_corners ||
      static_cast<int>(corners_b.size()) < options_.min_corners) {
    throw_error(ErrorCode::InsufficientFeatures,
                "corners: " + std::to_string(corners_a.size()) + " / " +
                    std::to_string(corners_b.size()) + ", need " +
                    std::to_string(options_.min_corners));
  }

  std::vector<std::vector<double>> desc_a(corners_a.size());
  std::vector<std::vector<double>> desc_b(corners_b.size());
  for (std::size_t i = 0; i < corners_a.size(); ++i) {
    desc_a[i] = descriptor(smooth_a, corners_a[i], options_.descriptor_radius);
  }
  for (std::size_t i = 0; i < corners_b.size(); ++i) {
    desc_b[i] = descriptor(smooth_b, corners_b[i], options_.descriptor_radius);
  }

  // Match patch_b corners into patch_a: the fitted model maps patch_b
  // coordinates onto patch_a sampling coordinates.
  std::vector<Match> matches;
  for (std::size_t ib = 0; ib < corners_b.size(); ++ib) {
    double best = -2.0;
    double second = -2.0;
    std::size_t best_ia = 0;
    for (std::size_t ia = 0; ia < corners_a.size(); ++ia) {
      double ncc = 0.0;
      const std::vector<double>& da = desc_a[ia];
      const std::vector<double>& db = desc_b[ib];
      for (std::size_t k = 0; k < da.size(); ++k) {
        ncc += da[k] * db[k];
      }
      if (ncc > best) {
        second = best;
        best = ncc;
        best_ia = ia;
      } else if (ncc > second) {
        second = ncc;
      }
    }
    if (best < options_.min_ncc) continue;
    // Lowe-style ratio on NCC distances.
    const double d1 = 1.0 - best;
    const double d2 = 1.0 - second;
    if (second > -1.5 && d1 >= options_.ratio_test * d2) continue;
    matches.push_back({{static_cast<double>(corners_b[ib].x), static_cast<double>(corners_b[ib].y)},
                       {static_cast<double>(corners_a[best_ia].x),
                        static_cast<double>(corners_a[best_ia].y)}});
  }
  if (static_cast<int>(matches.size()) < options_.min_inliers) {
    throw_error(ErrorCode::InsufficientFeatures,
                "only " + std::to_string(matches.size()) + " tentative matches");
  }

  Rng rng = Rng::derive(options_.seed, {static_cast<std::uint64_t>(req.frame_index),
                                        static_cast<std::uint64_t>(req.iteration_index)});
  const int n = static_cast<int>(matches.size());
  Similarity best_model;
  int best_count = -1;
  std::vector<int> best_inliers;
  const double thresh_sq = options_.inlier_threshold_px * options_.inlier_threshold_px;
  for (int it = 0; it < options_.ransac_iterations; ++it) {
    const int i0 = rng.uniform_int(0, n - 1);
    int i1 = rng.uniform_int(0, n - 2);
    if (i1 >= i0) ++i1;
    Similarity model;
    if (!similarity_from_two(matches[i0], matches[i1], &model)) continue;
    std::vector<int> inliers;
    for (int i = 0; i < n; ++i) {
      const Point2 p = model.apply(matches[i].from);
      const Point2 d = p - matches[i].to;
      if (d.u * d.u + d.v * d.v < thresh_sq) inliers.push_back(i);
    }
    if (static_cast<int>(inliers.size()) > best_count) {
      best_count = static_cast<int>(inliers.size());
      best_model = model;
      best_inliers = std::move(inliers);
    }
  }
  if (best_count < options_.min_inliers) {
    throw_error(ErrorCode::InsufficientFeatures,
                "best model has " + std::to_string(std::max(best_count, 0)) + " inliers");
  }

  Similarity refined = best_model;
  if (!similarity_least_squares(matches, best_inliers, &refined)) {
    refined = best_model;
  }

  const int size = req.patch_a.width;
  const CornerQuad local = CornerQuad::axis_aligned(0, 0, size);
  FourPointHomography fp;
  for (int i = 0; i < 4; ++i) {
    const Point2 mapped = refined.apply(local.corners[i]);
    fp.du[i] = mapped.u - local.corners[i].u;
    fp.dv[i] = mapped.v - local.corners[i].v;
  }

  // Photometric residual of the refit model over the overlap.
  double abs_sum = 0.0;
  long count = 0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const Point2 p = refined.apply({static_cast<double>(x), static_cast<double>(y)});
      if (!in_sample_bounds(req.patch_a, p.u, p.v)) continue;
      abs_sum += std::abs(bilinear_sample(req.patch_a, p.u, p.v) - req.patch_b.at(x, y));
      ++count;
    }
  }

  EstimatorResult result;
  result.fp = fp;
  result.converged = true;
  result.residual = count > 0 ? abs_sum / count : 255.0;
  return result;
}

void PredictionTable::insert(const PredictionRow& row) {
  rows_[{row.frame_index, row.iteration_index}] = row.fp;
}

const FourPointHomography* PredictionTable::find(int frame_index, int iteration_index) const {
  const auto it = rows_.find({frame_index, iteration_index});
  return it == rows_.end() ? nullptr : &it->second;
}

PredictionTable PredictionTable::load_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw_error(ErrorCode::IoError, "missing prediction file " + path.string());
  }
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) {
    throw_error(ErrorCode::MalformedFile, "empty prediction file " + path.string());
  }
  PredictionTable table;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 18) {
      throw_error(ErrorCode::MalformedFile, "prediction row needs 18 fields");
    }
    PredictionRow row;
    row.frame_index = static_cast<int>(parse_long(f[0], path.string()));
    row.iteration_index = static_cast<int>(parse_long(f[1], path.string()));
    for (int i = 0; i < 4; ++i) {
      row.anchor.corners[i].u = parse_double(f[2 + 2 * i], path.string());
      row.anchor.corners[i].v = parse_double(f[3 + 2 * i], path.string());
    }
    for (int i = 0; i < 4; ++i) {
      row.fp.du[i] = parse_double(f[10 + 2 * i], path.string());
      row.fp.dv[i] = parse_double(f[11 + 2 * i], path.string());
    }
    table.insert(row);
  }
  return table;
}

void write_prediction_file(const std::filesystem::path& path,
                           const std::vector<PredictionRow>& rows) {
  std::string content =
      "frame_index,iteration_index,u1,v1,u2,v2,u3,v3,u4,v4,du1,dv1,du2,dv2,du3,dv3,du4,dv4\n";
  for (const PredictionRow& row : rows) {
    content += std::to_string(row.frame_index) + "," + std::to_string(row.iteration_index);
    for (int i = 0; i < 4; ++i) {
      content += "," + format_full(row.anchor.corners[i].u);
      content += "," + format_full(row.anchor.corners[i].v);
    }
    for (int i = 0; i < 4; ++i) {
      content += "," + format_full(row.fp.du[i]);
      content += "," + format_full(row.fp.dv[i]);
    }
    content += "\n";
  }
  write_text_atomic(path, content);
}

void write_request_file(const std::filesystem::path& path,
                        const std::vector<PredictionRow>& rows) {
  std::string content = "frame_index,iteration_index,u1,v1,u2,v2,u3,v3,u4,v4\n";
  for (const PredictionRow& row : rows) {
    content += std::to_string(row.frame_index) + "," + std::to_string(row.iteration_index);
    for (int i = 0; i < 4; ++i) {
      content += "," + format_full(row.anchor.corners[i].u);
      content += "," + format_full(row.anchor.corners[i].v);
    }
    content += "\n";
  }
  write_text_atomic(path, content);
}

EstimatorResult PredictionTableEstimator::estimate(const EstimatorRequest& req) const {
  const FourPointHomography* fp = table_.find(req.frame_index, req.iteration_index);
  if (fp == nullptr) {
    throw_error(ErrorCode::MissingPrediction,
                "no prediction for frame " + std::to_string(req.frame_index) + ", iteration " +
                    std::to_string(req.iteration_index));
  }
  EstimatorResult result;
  result.fp = *fp;
  result.converged = true;
  result.residual = 0.0;
  return result;
}

}  // namespace mosaikit
