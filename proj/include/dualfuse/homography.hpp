#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "dualfuse/camgeom.hpp"
#include "dualfuse/errors.hpp"

namespace dualfuse {

/// Planar projective map between two undistorted pixel frames.
///
/// Stored normalized: h(2,2) == 1 whenever |h(2,2)| > 1e-9, otherwise scaled
/// to unit Frobenius norm. Construction rejects singular matrices.
template <typename Scalar>
class HomographyT {
 public:
  HomographyT() : h_(Matrix3<Scalar>::Identity()) {}

  explicit HomographyT(const Matrix3<Scalar>& h) : h_(normalized(h)) {
    if (!(std::abs(h_.determinant()) > Scalar(1e-12)))
      throw Singular("homography is singular (|det| <= 1e-12 after normalization)");
  }

  static HomographyT identity() { return HomographyT(); }

  const Matrix3<Scalar>& matrix() const { return h_; }
  Scalar operator()(int r, int c) const { return h_(r, c); }

  HomographyT inverse() const { return HomographyT(h_.inverse()); }

  /// this ∘ other: apply `other` first.
  HomographyT operator*(const HomographyT& other) const { return HomographyT(h_ * other.h_); }

  static Matrix3<Scalar> normalized(const Matrix3<Scalar>& h) {
    if (!h.allFinite()) throw Singular("homography has non-finite entries");
    if (std::abs(h(2, 2)) > Scalar(1e-9)) return h / h(2, 2);
    const Scalar n = h.norm();
    if (!(n > 0)) throw Singular("homography is the zero matrix");
    return h / n;
  }

 private:
  Matrix3<Scalar> h_;
};

/// Narrow-to-wide rigid motion: X_wide = R X_narrow - t, so t = R c where c
/// is the wide camera centre in narrow coordinates.
template <typename Scalar>
struct RelativePoseT {
  Matrix3<Scalar> rotation{Matrix3<Scalar>::Identity()};
  Vector3<Scalar> translation{Vector3<Scalar>::Zero()};

  /// Narrow-camera coordinates to wide-camera coordinates.
  Vector3<Scalar> apply(const Vector3<Scalar>& x_narrow) const { return rotation * x_narrow - translation; }

  bool is_valid(Scalar tol = Scalar(1e-9)) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Scalar ortho = (rotation.transpose() * rotation - Matrix3<Scalar>::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(rotation.determinant() - 1) <= tol;
  }

  void validate() const {
    if (!is_valid()) throw InvariantViolation("pose rotation is not a proper rotation (R^T R = I, det R = 1)");
  }
};

template <typename Scalar>
struct PlaneSpecT {
  Vector3<Scalar> normal{Vector3<Scalar>::UnitZ()};
  Scalar distance{1};

  bool is_valid(Scalar tol = Scalar(1e-9)) const {
    return normal.allFinite() && std::abs(normal.norm() - 1) <= tol && std::isfinite(distance) &&
           distance > 0;
  }

  void validate() const {
    if (!is_valid()) throw InvariantViolation("plane must have a unit normal and positive distance");
  }
};

template <typename Scalar>
PixelPointT<Scalar> apply_homography(const HomographyT<Scalar>& h, const PixelPointT<Scalar>& p) {
  const Vector3<Scalar> x = h.matrix() * p.homogeneous();
  if (!(std::abs(x.z()) >= Scalar(1e-12))) throw AtInfinity("point maps to the line at infinity");
  return PixelPointT<Scalar>(x.hnormalized());
}

/// Plane-induced homography between two calibrated views:
/// K_wide (R - t n^T / d) K_narrow^-1, with the plane n^T X = d expressed in
/// narrow-camera coordinates and (R, t) as in RelativePoseT.
template <typename Scalar>
HomographyT<Scalar> homography_from_extrinsics(const CameraIntrinsicsT<Scalar>& k_wide,
                                               const CameraIntrinsicsT<Scalar>& k_narrow,
                                               const RelativePoseT<Scalar>& pose,
                                               const PlaneSpecT<Scalar>& plane) {
  k_wide.validate();
  k_narrow.validate();
  pose.validate();
  plane.validate();
  const Matrix3<Scalar> euclidean =
      pose.rotation - pose.translation * plane.normal.transpose() / plane.distance;
  return HomographyT<Scalar>(k_wide.matrix() * euclidean * k_narrow.inverse_matrix());
}

using Homography = HomographyT<double>;
using RelativePose = RelativePoseT<double>;
using PlaneSpec = PlaneSpecT<double>;

struct Correspondence {
  PixelPoint src;  ///< undistorted narrow frame
  PixelPoint dst;  ///< undistorted wide frame
};

struct HomographyEstimate {
  Homography homography;
  double residual{0};  ///< RMS symmetric transfer error, pixels
};

/// Normalized DLT least-squares fit over at least four correspondences.
/// Throws TooFewPoints or DegenerateConfiguration (rank-deficient design
/// matrix: collinear or repeated points).
HomographyEstimate estimate_homography(std::span<const Correspondence> pairs);

/// sqrt(sum(|dst - H src|^2 + |src - H^-1 dst|^2) / 2N).
double symmetric_transfer_rms(const Homography& h, std::span<const Correspondence> pairs);

}  // namespace dualfuse
