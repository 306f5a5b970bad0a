#include "dualfuse/homography.hpp"

#include <string>

#include <Eigen/SVD>

namespace dualfuse {

namespace {

// Similarity taking the points' centroid to the origin and their mean
// distance from it to sqrt(2).
Eigen::Matrix3d conditioning_transform(std::span<const Correspondence> pairs, bool source) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& c : pairs) centroid += source ? c.src : c.dst;
  centroid /= double(pairs.size());

  double mean_dist = 0;
  for (const auto& c : pairs) mean_dist += ((source ? c.src : c.dst) - centroid).norm();
  mean_dist /= double(pairs.size());
  if (!(mean_dist > 1e-12))
    throw DegenerateConfiguration("all " + std::string(source ? "source" : "destination") +
                                  " points coincide");

  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

}  // namespace

HomographyEstimate estimate_homography(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4)
    throw TooFewPoints("homography estimation needs at least 4 correspondences, got " +
                       std::to_string(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i].src.is_finite() || !pairs[i].dst.is_finite())
      throw DegenerateConfiguration("correspondence " + std::to_string(i) + " is not finite");
  }

  const Eigen::Matrix3d t_src = conditioning_transform(pairs, true);
  const Eigen::Matrix3d t_dst = conditioning_transform(pairs, false);

  Eigen::MatrixXd a(2 * pairs.size(), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d s = t_src * pairs[i].src.homogeneous();
    const Eigen::Vector3d d = t_dst * pairs[i].dst.homogeneous();
    const auto r = Eigen::Index(2 * i);
    a.row(r) << 0, 0, 0, -d.z() * s.transpose(), d.y() * s.transpose();
    a.row(r + 1) << d.z() * s.transpose(), 0, 0, 0, -d.x() * s.transpose();
  }

  // A 4-point system is 8x9; pad with a zero row so V is always 9x9.
  if (a.rows() < 9) {
    a.conservativeResize(9, Eigen::NoChange);
    a.row(8).setZero();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  if (!(sigma(7) > 1e-10 * sigma(0)))
    throw DegenerateConfiguration("design matrix is rank deficient (collinear or repeated points)");

  const Eigen::VectorXd v = svd.matrixV().col(8);
  Eigen::Matrix3d h_conditioned;
  h_conditioned << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);

  HomographyEstimate out;
  try {
    out.homography = Homography(t_dst.inverse() * h_conditioned * t_src);
  } catch (const Singular& e) {
    throw DegenerateConfiguration(std::string("estimated homography is singular: ") + e.what());
  }
  out.residual = symmetric_transfer_rms(out.homography, pairs);
  return out;
}

double symmetric_transfer_rms(const Homography& h, std::span<const Correspondence> pairs) {
  if (pairs.empty()) return 0;
  const Homography inv = h.inverse();
  double sum = 0;
  for (const auto& c : pairs) {
    sum += (apply_homography(h, c.src) - c.dst).squaredNorm();
    sum += (apply_homography(inv, c.dst) - c.src).squaredNorm();
  }
  return std::sqrt(sum / double(2 * pairs.size()));
}

}  // namespace dualfuse
