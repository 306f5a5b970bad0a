#pragma once

// Pinhole camera with Brown-Conrady (radial-tangential) lens distortion.
//
// Everything here is header-only and templated on the scalar type; the
// double-precision aliases at the bottom are what the rest of the library uses.

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Core>
#include <Eigen/LU>

#include "dualfuse/errors.hpp"

namespace dualfuse {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

struct PixelTag {};
struct NormalizedTag {};

/// A 2-vector tagged with the coordinate frame it lives in. Conversions
/// between tags are explicit so pixel and normalized coordinates never mix
/// silently; within one tag it behaves like any Eigen 2-vector.
template <typename Scalar, typename Tag>
class Point2 : public Vector2<Scalar> {
  using Base = Vector2<Scalar>;

 public:
  Point2() : Base(Base::Zero()) {}
  Point2(Scalar x, Scalar y) : Base(x, y) {}

  template <typename Derived>
  explicit Point2(const Eigen::MatrixBase<Derived>& other) : Base(other) {}

  template <typename Derived>
  Point2& operator=(const Eigen::MatrixBase<Derived>& other) {
    Base::operator=(other);
    return *this;
  }

  bool is_finite() const { return std::isfinite(this->x()) && std::isfinite(this->y()); }
};

template <typename Scalar>
using PixelPointT = Point2<Scalar, PixelTag>;
template <typename Scalar>
using NormalizedPointT = Point2<Scalar, NormalizedTag>;

template <typename Scalar>
struct CameraIntrinsicsT {
  Scalar fx{1};
  Scalar fy{1};
  Scalar cx{0};
  Scalar cy{0};
  int width{1};
  int height{1};

  /// Square pixels, principal point at the frame center, focal length chosen
  /// so that the frame spans `hfov_deg` horizontally.
  static CameraIntrinsicsT from_hfov(Scalar hfov_deg, int width, int height) {
    const Scalar half = hfov_deg * std::numbers::pi_v<Scalar> / Scalar(360);
    const Scalar f = (Scalar(width) / 2) / std::tan(half);
    CameraIntrinsicsT k{f, f, Scalar(width) / 2, Scalar(height) / 2, width, height};
    k.validate();
    return k;
  }

  Matrix3<Scalar> matrix() const {
    Matrix3<Scalar> k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }

  Matrix3<Scalar> inverse_matrix() const {
    Matrix3<Scalar> k;
    k << 1 / fx, 0, -cx / fx, 0, 1 / fy, -cy / fy, 0, 0, 1;
    return k;
  }

  bool is_valid() const {
    return std::isfinite(fx) && std::isfinite(fy) && fx > 0 && fy > 0 && width > 0 && height > 0 &&
           cx > 0 && cx < Scalar(width) && cy > 0 && cy < Scalar(height);
  }

  void validate() const {
    if (is_valid()) return;
    std::ostringstream os;
    os << "invalid intrinsics (fx=" << fx << ", fy=" << fy << ", cx=" << cx << ", cy=" << cy
       << ", size=" << width << "x" << height << ")";
    throw InvariantViolation(os.str());
  }

  bool operator==(const CameraIntrinsicsT&) const = default;
};

template <typename Scalar>
struct DistortionCoeffsT {
  Scalar k1{0};
  Scalar k2{0};
  Scalar k3{0};
  Scalar p1{0};
  Scalar p2{0};

  bool is_zero() const { return k1 == 0 && k2 == 0 && k3 == 0 && p1 == 0 && p2 == 0; }

  bool is_valid() const {
    return std::isfinite(k1) && std::isfinite(k2) && std::isfinite(k3) && std::isfinite(p1) &&
           std::isfinite(p2);
  }

  void validate() const {
    if (!is_valid()) throw InvariantViolation("distortion coefficients must be finite");
  }

  bool operator==(const DistortionCoeffsT&) const = default;
};

template <typename Scalar>
NormalizedPointT<Scalar> pixel_to_normalized(const PixelPointT<Scalar>& p,
                                             const CameraIntrinsicsT<Scalar>& k) {
  return {(p.x() - k.cx) / k.fx, (p.y() - k.cy) / k.fy};
}

template <typename Scalar>
PixelPointT<Scalar> normalized_to_pixel(const NormalizedPointT<Scalar>& q,
                                        const CameraIntrinsicsT<Scalar>& k) {
  return {k.fx * q.x() + k.cx, k.fy * q.y() + k.cy};
}

template <typename Scalar>
NormalizedPointT<Scalar> distort_point(const NormalizedPointT<Scalar>& q,
                                       const DistortionCoeffsT<Scalar>& d) {
  const Scalar x = q.x();
  const Scalar y = q.y();
  const Scalar r2 = x * x + y * y;
  const Scalar radial = 1 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
  return {x * radial + 2 * d.p1 * x * y + d.p2 * (r2 + 2 * x * x),
          y * radial + d.p1 * (r2 + 2 * y * y) + 2 * d.p2 * x * y};
}

/// Jacobian of distort_point with respect to the undistorted coordinates.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> distortion_jacobian(const NormalizedPointT<Scalar>& q,
                                                const DistortionCoeffsT<Scalar>& d) {
  const Scalar x = q.x();
  const Scalar y = q.y();
  const Scalar r2 = x * x + y * y;
  const Scalar radial = 1 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
  const Scalar dradial = d.k1 + r2 * (2 * d.k2 + 3 * d.k3 * r2);  // d(radial)/d(r2)
  Eigen::Matrix<Scalar, 2, 2> j;
  j(0, 0) = radial + 2 * x * x * dradial + 2 * d.p1 * y + 6 * d.p2 * x;
  j(0, 1) = 2 * x * y * dradial + 2 * d.p1 * x + 2 * d.p2 * y;
  j(1, 0) = 2 * x * y * dradial + 2 * d.p1 * x + 2 * d.p2 * y;
  j(1, 1) = radial + 2 * y * y * dradial + 6 * d.p1 * y + 2 * d.p2 * x;
  return j;
}

template <typename Scalar>
struct UndistortOptions {
  Scalar tol{Scalar(1e-12)};
  int max_iter{50};
};

/// Inverts distort_point by Newton iteration with step halving, starting from
/// the distorted point itself. Converges when the update step drops below
/// `opts.tol` with a vanishing residual; throws NonConvergent otherwise (point outside the region where
/// the lens model is invertible, or pathological coefficients).
template <typename Scalar>
NormalizedPointT<Scalar> undistort_point(const NormalizedPointT<Scalar>& q_d,
                                         const DistortionCoeffsT<Scalar>& d,
                                         const UndistortOptions<Scalar>& opts = {}) {
  if (!q_d.is_finite()) throw NonConvergent("undistort_point: non-finite input");
  NormalizedPointT<Scalar> q = q_d;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Vector2<Scalar> residual = distort_point(q, d) - q_d;
    const auto jac = distortion_jacobian(q, d);
    const Scalar det = jac.determinant();
    if (!(std::abs(det) > Scalar(1e-14))) break;
    const Vector2<Scalar> step = -jac.inverse() * residual;

    const Scalar r0 = residual.norm();
    Scalar t = 1;
    NormalizedPointT<Scalar> next(q + step);
    while (t > Scalar(1.0 / 1024) && (distort_point(next, d) - q_d).norm() > r0) {
      t /= 2;
      next = q + t * step;
    }
    q = next;
    if (t * step.norm() < opts.tol) {
      // A vanishing step at a nonzero residual is a stationary point, not a
      // preimage; a preimage past a fold (radial factor or Jacobian not
      // positive) is mirrored through the axis and not physical either.
      const Scalar accept = std::max(std::sqrt(opts.tol), 100 * std::numeric_limits<Scalar>::epsilon());
      const Scalar r2 = q.squaredNorm();
      const Scalar radial = 1 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
      if ((distort_point(q, d) - q_d).norm() <= accept * (1 + q_d.norm()) && radial > 0 &&
          distortion_jacobian(q, d).determinant() > 0)
        return q;
      break;
    }
  }
  std::ostringstream os;
  os << "undistort_point did not converge for (" << q_d.x() << ", " << q_d.y() << ") after "
     << opts.max_iter << " iterations";
  throw NonConvergent(os.str());
}

/// True when the distortion Jacobian keeps a positive determinant over the
/// rectangle |x| <= half_x, |y| <= half_y. This is the
/// precondition under which undistort_point has a unique answer there.
template <typename Scalar>
bool distortion_invertible_on(const DistortionCoeffsT<Scalar>& d, Scalar half_x, Scalar half_y,
                              int samples = 41) {
  for (int i = 0; i < samples; ++i) {
    for (int j = 0; j < samples; ++j) {
      const Scalar x = -half_x + 2 * half_x * Scalar(i) / Scalar(samples - 1);
      const Scalar y = -half_y + 2 * half_y * Scalar(j) / Scalar(samples - 1);
      if (!(distortion_jacobian(NormalizedPointT<Scalar>(x, y), d).determinant() > 0)) return false;
    }
  }
  return true;
}

/// Projects a point given in camera coordinates (z forward) to distorted pixels.
template <typename Scalar>
PixelPointT<Scalar> project_point(const Vector3<Scalar>& p_cam, const CameraIntrinsicsT<Scalar>& k,
                                  const DistortionCoeffsT<Scalar>& d) {
  if (!(p_cam.z() > Scalar(1e-9))) throw AtInfinity("project_point: point is behind the camera");
  const NormalizedPointT<Scalar> q(p_cam.x() / p_cam.z(), p_cam.y() / p_cam.z());
  return normalized_to_pixel(distort_point(q, d), k);
}

using PixelPoint = PixelPointT<double>;
using NormalizedPoint = NormalizedPointT<double>;
using CameraIntrinsics = CameraIntrinsicsT<double>;
using DistortionCoeffs = DistortionCoeffsT<double>;

}  // namespace dualfuse
