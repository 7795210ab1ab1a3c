#include "mvped/geometry.hpp"

#include <cmath>
#include <string>

namespace mvped {

namespace {
constexpr double kRotationTol = 1e-6;
constexpr double kDepthEps = 1e-12;
}  // namespace

CameraModel::CameraModel(int view_id, int width, int height, const Eigen::Matrix3d& K,
                         const Eigen::Matrix3d& R, const Eigen::Vector3d& t)
    : view_id_(view_id), width_(width), height_(height), K_(K), R_(R), t_(t) {
  if (width <= 0 || height <= 0)
    throw validation_error("camera " + std::to_string(view_id) + ": non-positive image size");
  if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0)
    throw validation_error("camera " + std::to_string(view_id) + ": K is not upper-triangular");
  if (K(2, 2) != 1.0)
    throw validation_error("camera " + std::to_string(view_id) + ": K(2,2) must be 1");
  if (K(0, 0) <= 0.0 || K(1, 1) <= 0.0)
    throw validation_error("camera " + std::to_string(view_id) + ": non-positive focal length");
  if (orthonormality_residual(R) >= kRotationTol)
    throw validation_error("camera " + std::to_string(view_id) + ": R is not orthonormal");
  if (std::abs(R.determinant() - 1.0) > kRotationTol)
    throw validation_error("camera " + std::to_string(view_id) + ": det(R) != 1");
}

PixelProjection project(const CameraModel& camera, const WorldPoint& p) {
  const Eigen::Vector3d cam = camera.rotation() * p.vec() + camera.translation();
  PixelProjection out;
  out.depth = cam.z();
  if (std::abs(out.depth) < kDepthEps) {
    // On the principal plane: the homogeneous division degenerates.
    out.in_frustum = false;
    return out;
  }
  const Eigen::Vector3d h = camera.intrinsic() * cam;
  out.u = h.x() / out.depth;
  out.v = h.y() / out.depth;
  out.in_frustum = out.depth > 0.0 && out.u >= 0.0 && out.u < camera.width() && out.v >= 0.0 &&
                   out.v < camera.height();
  return out;
}

WorldPoint backproject(const CameraModel& camera, double u, double v, double depth) {
  if (depth <= 0.0)
    throw validation_error("backproject: depth must be positive, got " + std::to_string(depth));
  const Eigen::Vector3d pix(u, v, 1.0);
  const Eigen::Vector3d cam = depth * (camera.intrinsic().inverse() * pix);
  return WorldPoint::from(camera.rotation().transpose() * (cam - camera.translation()));
}

Ray ray_through_pixel(const CameraModel& camera, double u, double v) {
  const Eigen::Vector3d pix(u, v, 1.0);
  const Eigen::Vector3d dir_cam = camera.intrinsic().inverse() * pix;
  Ray ray;
  ray.origin = camera.center();
  ray.direction = (camera.rotation().transpose() * dir_cam).normalized();
  return ray;
}

double orthonormality_residual(const Eigen::Matrix3d& R) {
  return (R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& R) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace mvped
