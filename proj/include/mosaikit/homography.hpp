#pragma once

#include "mosaikit/types.hpp"

namespace mosaikit {

// Minimum |signed area| for a usable quad, in px^2.
constexpr double kMinQuadArea = 1.0;

// Solves the 8x8 inhomogeneous DLT system (m(2,2) fixed to 1) for the
// homography mapping each anchor corner onto anchor + fp.
// Throws DegenerateQuad if either quad has |signed area| < 1 px^2,
// SingularSystem if the linear system is rank deficient.
Homography four_point_to_matrix(const CornerQuad& anchor, const FourPointHomography& fp);

// Corner displacements of `anchor` under `h`; exact inverse of
// four_point_to_matrix for the same anchor.
FourPointHomography matrix_to_four_point(const Homography& h, const CornerQuad& anchor);

// Projective composition a(b(x)), renormalized to m(2,2) == 1.
Homography compose(const Homography& a, const Homography& b);

Homography invert(const Homography& h);

Point2 warp_point(const Homography& h, const Point2& p);

CornerQuad warp_quad(const Homography& h, const CornerQuad& quad);

// Rotation-scale-rotation factorization of the upper-left 2x2 block via SVD,
// made unique by: scale_major >= scale_minor >= 0, both rotation factors with
// determinant +1, gamma reduced modulo pi into [-pi/2, pi/2). When the two
// scales agree to within 1e-9 relative the split is undefined; gamma is set
// to 0 and theta to the rotation angle of the block's polar factor.
// Perspective entries are ignored. Throws ReflectionDetected if the block
// determinant is <= 0, NearSingular if the smaller singular value is < 1e-9.
SimilarityDecomposition decompose_similarity(const Homography& h);

// Affine homography R(theta) * diag(scale_major, scale_minor) * R(gamma) with
// the given translation and zero perspective row.
Homography recompose_similarity(const SimilarityDecomposition& d);

}  // namespace mosaikit
