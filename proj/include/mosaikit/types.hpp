#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>

namespace mosaikit {

struct Point2 {
  double u = 0.0;  // horizontal, pixels
  double v = 0.0;  // vertical, pixels

  Point2() = default;
  Point2(double u_, double v_) : u(u_), v(v_) {}

  Point2 operator+(const Point2& o) const { return {u + o.u, v + o.v}; }
  Point2 operator-(const Point2& o) const { return {u - o.u, v - o.v}; }
  Point2 operator*(double s) const { return {u * s, v * s}; }

  double norm() const { return std::hypot(u, v); }
  bool is_finite() const { return std::isfinite(u) && std::isfinite(v); }
};

// Four corners ordered top-left, top-right, bottom-right, bottom-left.
// With v pointing down this order is counter-clockwise in image coordinates
// and has positive shoelace signed area.
struct CornerQuad {
  std::array<Point2, 4> corners;

  CornerQuad() = default;
  CornerQuad(Point2 tl, Point2 tr, Point2 br, Point2 bl) : corners{tl, tr, br, bl} {}

  // Axis-aligned quad over the corner pixels of a size x size patch whose
  // top-left pixel sits at (u0, v0).
  static CornerQuad axis_aligned(double u0, double v0, int size) {
    const double s = static_cast<double>(size - 1);
    return CornerQuad({u0, v0}, {u0 + s, v0}, {u0 + s, v0 + s}, {u0, v0 + s});
  }

  double signed_area() const {
    double a = 0.0;
    for (int i = 0; i < 4; ++i) {
      const Point2& p = corners[i];
      const Point2& q = corners[(i + 1) % 4];
      a += p.u * q.v - q.u * p.v;
    }
    return 0.5 * a;
  }

  Point2 centroid() const {
    Point2 c;
    for (const Point2& p : corners) {
      c.u += p.u;
      c.v += p.v;
    }
    return {c.u / 4.0, c.v / 4.0};
  }

  bool is_finite() const {
    for (const Point2& p : corners) {
      if (!p.is_finite()) return false;
    }
    return true;
  }
};

// Corner-displacement parameterization of a homography: the offsets that the
// four corners of an anchoring quad move by.
struct FourPointHomography {
  std::array<double, 4> du{0, 0, 0, 0};
  std::array<double, 4> dv{0, 0, 0, 0};

  bool is_finite() const {
    for (int i = 0; i < 4; ++i) {
      if (!std::isfinite(du[i]) || !std::isfinite(dv[i])) return false;
    }
    return true;
  }

  bool is_zero() const {
    for (int i = 0; i < 4; ++i) {
      if (du[i] != 0.0 || dv[i] != 0.0) return false;
    }
    return true;
  }
};

inline CornerQuad displace(const CornerQuad& quad, const FourPointHomography& fp) {
  CornerQuad out = quad;
  for (int i = 0; i < 4; ++i) {
    out.corners[i].u += fp.du[i];
    out.corners[i].v += fp.dv[i];
  }
  return out;
}

// 3x3 projective map, stored normalized with m(2,2) == 1.
struct Homography {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

  static Homography identity() { return Homography{}; }

  static Homography translation(double tx, double ty) {
    Homography h;
    h.m(0, 2) = tx;
    h.m(1, 2) = ty;
    return h;
  }

  // Rotation convention used throughout: R(a) = [cos a, sin a; -sin a, cos a].
  static Homography rotation(double angle_rad) {
    Homography h;
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    h.m(0, 0) = c;
    h.m(0, 1) = s;
    h.m(1, 0) = -s;
    h.m(1, 1) = c;
    return h;
  }

  bool is_finite() const { return m.allFinite(); }
};

// Rotation-scale-rotation factorization of the affine part of a homography:
// 2x2 block = R(theta) * diag(scale_major, scale_minor) * R(gamma), with the
// rotation convention above, plus the translation column.
struct SimilarityDecomposition {
  double theta = 0.0;        // left rotation, radians
  double gamma = 0.0;        // right rotation, radians
  double scale_major = 1.0;  // larger singular value
  double scale_minor = 1.0;  // smaller singular value
  double translate_x = 0.0;  // pixels
  double translate_y = 0.0;  // pixels

  bool is_finite() const {
    return std::isfinite(theta) && std::isfinite(gamma) && std::isfinite(scale_major) &&
           std::isfinite(scale_minor) && std::isfinite(translate_x) && std::isfinite(translate_y);
  }
};

constexpr double deg_to_rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / 3.14159265358979323846; }

}  // namespace mosaikit
