#pragma once

// Shared test fixtures: seeded random cameras/points and a scratch
// directory that cleans up after itself.

#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "mvped/geometry.hpp"

namespace test {

inline mvped::CameraModel identity_camera(int size = 1) {
  return mvped::CameraModel(0, size, size, Eigen::Matrix3d::Identity(),
                            Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return q.toRotationMatrix();
}

/// Plausible surveillance camera: f in [80, 400] px, principal point near
/// the image center, arbitrary pose.
inline mvped::CameraModel random_camera(std::mt19937_64& rng, int id = 0, int width = 640,
                                        int height = 480) {
  std::uniform_real_distribution<double> uf(80.0, 400.0);
  std::uniform_real_distribution<double> uc(-20.0, 20.0);
  std::uniform_real_distribution<double> ut(-5.0, 5.0);
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = uf(rng);
  K(1, 1) = uf(rng);
  K(0, 2) = width / 2.0 + uc(rng);
  K(1, 2) = height / 2.0 + uc(rng);
  Eigen::Vector3d t(ut(rng), ut(rng), ut(rng));
  return mvped::CameraModel(id, width, height, K, random_rotation(rng), t);
}

/// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace test
