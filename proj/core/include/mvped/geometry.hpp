#pragma once

#include <Eigen/Dense>

#include "mvped/common.hpp"

namespace mvped {

/// Point in the shared world frame: z up, ground plane z = 0, meters.
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static WorldPoint from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

/// Result of projecting a world point into a view. Out-of-frustum is a
/// value, not an error: lifting legitimately probes every voxel.
struct PixelProjection {
  double u = 0.0;      ///< continuous pixel column
  double v = 0.0;      ///< continuous pixel row
  double depth = 0.0;  ///< distance along the optical axis, meters
  bool in_frustum = false;
};

/// Calibrated pinhole camera. K is upper-triangular with K(2,2) = 1 and
/// positive focal entries; R is a proper rotation (world -> camera);
/// t is in meters. Construction validates both.
class CameraModel {
 public:
  CameraModel(int view_id, int width, int height, const Eigen::Matrix3d& K,
              const Eigen::Matrix3d& R, const Eigen::Vector3d& t);

  int view_id() const { return view_id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const Eigen::Matrix3d& intrinsic() const { return K_; }
  const Eigen::Matrix3d& rotation() const { return R_; }
  const Eigen::Vector3d& translation() const { return t_; }

  /// Camera center in world coordinates, -R^T t.
  Eigen::Vector3d center() const { return -(R_.transpose() * t_); }

 private:
  int view_id_;
  int width_;
  int height_;
  Eigen::Matrix3d K_;
  Eigen::Matrix3d R_;
  Eigen::Vector3d t_;
};

/// Pinhole projection: (u,v,1)^T = (1/depth) K [R|t] (x,y,z,1)^T, with depth
/// the third component before normalization. in_frustum is false when
/// depth <= 0 or (u,v) falls outside [0,width) x [0,height).
PixelProjection project(const CameraModel& camera, const WorldPoint& p);

/// Inverse of project at a given depth along the optical axis. depth must
/// be positive.
WorldPoint backproject(const CameraModel& camera, double u, double v, double depth);

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;  ///< unit norm
};

/// Ray from the camera center through the continuous pixel (u, v).
Ray ray_through_pixel(const CameraModel& camera, double u, double v);

/// Max-abs deviation of R R^T from the identity.
double orthonormality_residual(const Eigen::Matrix3d& R);

/// Nearest rotation in the Frobenius sense (polar factor via SVD).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& R);

}  // namespace mvped
