#include "mosaikit/homography.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mosaikit/error.hpp"

namespace mosaikit {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_quad(const CornerQuad& quad, const char* what) {
  if (!quad.is_finite()) {
    throw_error(ErrorCode::InvalidInput, std::string(what) + " quad has non-finite corners");
  }
  if (std::abs(quad.signed_area()) < kMinQuadArea) {
    throw_error(ErrorCode::DegenerateQuad,
                std::string(what) + " quad area below " + std::to_string(kMinQuadArea) + " px^2");
  }
}

}  // namespace

Homography four_point_to_matrix(const CornerQuad& anchor, const FourPointHomography& fp) {
  if (!fp.is_finite()) {
    throw_error(ErrorCode::InvalidInput, "non-finite corner displacements");
  }
  check_quad(anchor, "anchor");
  const CornerQuad target = displace(anchor, fp);
  check_quad(target, "displaced");

  // Unknowns: (m00, m01, m02, m10, m11, m12, m20, m21), m22 = 1.
  Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const Point2& s = anchor.corners[i];
    const Point2& t = target.corners[i];
    a(2 * i, 0) = s.u;
    a(2 * i, 1) = s.v;
    a(2 * i, 2) = 1.0;
    a(2 * i, 6) = -s.u * t.u;
    a(2 * i, 7) = -s.v * t.u;
    b(2 * i) = t.u;
    a(2 * i + 1, 3) = s.u;
    a(2 * i + 1, 4) = s.v;
    a(2 * i + 1, 5) = 1.0;
    a(2 * i + 1, 6) = -s.u * t.v;
    a(2 * i + 1, 7) = -s.v * t.v;
    b(2 * i + 1) = t.v;
  }

  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!lu.isInvertible()) {
    throw_error(ErrorCode::SingularSystem, "rank-deficient DLT system");
  }
  const Eigen::Matrix<double, 8, 1> x = lu.solve(b);

  Homography h;
  h.m << x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7), 1.0;
  return h;
}

FourPointHomography matrix_to_four_point(const Homography& h, const CornerQuad& anchor) {
  if (!h.is_finite() || !anchor.is_finite()) {
    throw_error(ErrorCode::InvalidInput, "non-finite homography or anchor");
  }
  FourPointHomography fp;
  for (int i = 0; i < 4; ++i) {
    const Point2 mapped = warp_point(h, anchor.corners[i]);
    fp.du[i] = mapped.u - anchor.corners[i].u;
    fp.dv[i] = mapped.v - anchor.corners[i].v;
  }
  return fp;
}

Homography compose(const Homography& a, const Homography& b) {
  Eigen::Matrix3d prod = a.m * b.m;
  double w = prod(2, 2);
  if (std::abs(w) < 1e-12) {
    const double norm = prod.norm();
    if (norm < 1e-12) {
      throw_error(ErrorCode::SingularResult, "composition collapsed to zero");
    }
    prod /= norm;
    w = prod(2, 2);
    if (std::abs(w) < 1e-12) {
      throw_error(ErrorCode::SingularResult, "composition not normalizable to m(2,2) == 1");
    }
  }
  Homography out;
  out.m = prod / w;
  out.m(2, 2) = 1.0;
  return out;
}

Homography invert(const Homography& h) {
  const double det = h.m.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-15) {
    throw_error(ErrorCode::SingularMatrix, "homography is not invertible");
  }
  Eigen::Matrix3d inv = h.m.inverse();
  const double w = inv(2, 2);
  if (std::abs(w) < 1e-12) {
    throw_error(ErrorCode::SingularResult, "inverse not normalizable to m(2,2) == 1");
  }
  Homography out;
  out.m = inv / w;
  out.m(2, 2) = 1.0;
  return out;
}

Point2 warp_point(const Homography& h, const Point2& p) {
  const double x = h.m(0, 0) * p.u + h.m(0, 1) * p.v + h.m(0, 2);
  const double y = h.m(1, 0) * p.u + h.m(1, 1) * p.v + h.m(1, 2);
  const double w = h.m(2, 0) * p.u + h.m(2, 1) * p.v + h.m(2, 2);
  if (std::abs(w) < 1e-12) {
    throw_error(ErrorCode::PointAtInfinity, "homogeneous coordinate vanished");
  }
  return {x / w, y / w};
}

CornerQuad warp_quad(const Homography& h, const CornerQuad& quad) {
  CornerQuad out;
  for (int i = 0; i < 4; ++i) {
    out.corners[i] = warp_point(h, quad.corners[i]);
  }
  return out;
}

SimilarityDecomposition decompose_similarity(const Homography& h) {
  if (!h.is_finite()) {
    throw_error(ErrorCode::InvalidInput, "non-finite homography");
  }
  const Eigen::Matrix2d block = h.m.topLeftCorner<2, 2>();
  if (block.determinant() <= 0.0) {
    throw_error(ErrorCode::ReflectionDetected, "2x2 block determinant <= 0");
  }

  Eigen::JacobiSVD<Eigen::Matrix2d> svd(block, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d u = svd.matrixU();
  Eigen::Matrix2d v = svd.matrixV();
  const double s_major = svd.singularValues()(0);
  const double s_minor = svd.singularValues()(1);
  if (s_minor < 1e-9) {
    throw_error(ErrorCode::NearSingular, "smaller singular value below 1e-9");
  }

  // det(block) > 0 means det(U) and det(V) share a sign; negating the second
  // column of both leaves the product unchanged and makes both +1.
  if (u.determinant() < 0.0) {
    u.col(1) *= -1.0;
    v.col(1) *= -1.0;
  }

  SimilarityDecomposition d;
  d.scale_major = s_major;
  d.scale_minor = s_minor;
  d.translate_x = h.m(0, 2);
  d.translate_y = h.m(1, 2);

  if (s_major - s_minor < 1e-9 * s_major) {
    // Equal singular values: the split is undefined, so put the whole
    // rotation on the left via the polar factor of the block.
    d.gamma = 0.0;
    d.theta = std::atan2(block(0, 1) - block(1, 0), block(0, 0) + block(1, 1));
    return d;
  }

  // block = U * S * V^T; with R(a) = [cos a, sin a; -sin a, cos a] this reads
  // R(theta) = U and R(gamma) = V^T.
  double theta = -std::atan2(u(1, 0), u(0, 0));
  double gamma = std::atan2(v(1, 0), v(0, 0));

  // The factor pair is unique up to jointly adding pi to both angles; pick
  // the representative with gamma in [-pi/2, pi/2).
  if (gamma < -kPi / 2.0) {
    gamma += kPi;
    theta += kPi;
  } else if (gamma >= kPi / 2.0) {
    gamma -= kPi;
    theta -= kPi;
  }
  if (theta <= -kPi) theta += 2.0 * kPi;
  if (theta > kPi) theta -= 2.0 * kPi;

  d.theta = theta;
  d.gamma = gamma;
  return d;
}

Homography recompose_similarity(const SimilarityDecomposition& d) {
  if (!d.is_finite()) {
    throw_error(ErrorCode::InvalidInput, "non-finite decomposition");
  }
  const Eigen::Matrix2d left = Homography::rotation(d.theta).m.topLeftCorner<2, 2>();
  const Eigen::Matrix2d right = Homography::rotation(d.gamma).m.topLeftCorner<2, 2>();
  const Eigen::Vector2d scales(d.scale_major, d.scale_minor);

  Homography h;
  h.m.setIdentity();
  h.m.topLeftCorner<2, 2>() = left * scales.asDiagonal() * right;
  h.m(0, 2) = d.translate_x;
  h.m(1, 2) = d.translate_y;
  return h;
}

}  // namespace mosaikit
