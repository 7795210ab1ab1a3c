#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "mvped/geometry.hpp"

#include "helpers.hpp"

using namespace mvped;

namespace {

// Independent oracle: the full homogeneous chain K [I|0] [R t; 0 1] applied
// explicitly with 4x4/3x4 matrices, no shortcuts shared with the library.
PixelProjection project_oracle(const CameraModel& cam, const WorldPoint& p) {
  Eigen::Matrix4d psi = Eigen::Matrix4d::Identity();
  psi.topLeftCorner<3, 3>() = cam.rotation();
  psi.topRightCorner<3, 1>() = cam.translation();
  Eigen::Matrix<double, 3, 4> pi0 = Eigen::Matrix<double, 3, 4>::Zero();
  pi0.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity();
  Eigen::Vector4d hom(p.x, p.y, p.z, 1.0);
  Eigen::Vector3d uvw = cam.intrinsic() * (pi0 * (psi * hom));
  PixelProjection out;
  out.depth = uvw.z();
  out.u = uvw.x() / uvw.z();
  out.v = uvw.y() / uvw.z();
  out.in_frustum = uvw.z() > 0.0 && out.u >= 0.0 && out.u < cam.width() && out.v >= 0.0 &&
                   out.v < cam.height();
  return out;
}

}  // namespace

TEST_CASE("project: identity camera") {
  const CameraModel cam = test::identity_camera(1);
  const PixelProjection pp = project(cam, {0.0, 0.0, 1.0});
  CHECK(pp.u == doctest::Approx(0.0));
  CHECK(pp.v == doctest::Approx(0.0));
  CHECK(pp.depth == doctest::Approx(1.0));
  CHECK(pp.in_frustum);
}

TEST_CASE("project: on-axis point maps to the principal point") {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = K(1, 1) = 100.0;
  K(0, 2) = K(1, 2) = 50.0;
  const CameraModel cam(0, 100, 100, K, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  const PixelProjection pp = project(cam, {0.0, 0.0, 2.0});
  CHECK(pp.u == doctest::Approx(50.0));
  CHECK(pp.v == doctest::Approx(50.0));
  CHECK(pp.depth == doctest::Approx(2.0));
}

TEST_CASE("project: matches the homogeneous matrix-chain oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> up(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const CameraModel cam = test::random_camera(rng);
    const WorldPoint p{up(rng), up(rng), up(rng)};
    const PixelProjection got = project(cam, p);
    const PixelProjection want = project_oracle(cam, p);
    if (std::abs(want.depth) < 1e-6) continue;  // near the principal plane
    CHECK(got.u == doctest::Approx(want.u).epsilon(1e-9));
    CHECK(got.v == doctest::Approx(want.v).epsilon(1e-9));
    CHECK(got.depth == doctest::Approx(want.depth).epsilon(1e-9));
    CHECK(got.in_frustum == want.in_frustum);
  }
}

TEST_CASE("backproject: identity camera unit depth") {
  const CameraModel cam = test::identity_camera(1);
  const WorldPoint p = backproject(cam, 0.0, 0.0, 1.0);
  CHECK(p.x == doctest::Approx(0.0));
  CHECK(p.y == doctest::Approx(0.0));
  CHECK(p.z == doctest::Approx(1.0));
}

TEST_CASE("backproject: rejects non-positive depth") {
  const CameraModel cam = test::identity_camera(1);
  CHECK_THROWS_AS(backproject(cam, 0.0, 0.0, 0.0), Error);
  CHECK_THROWS_AS(backproject(cam, 0.0, 0.0, -1.0), Error);
}

TEST_CASE("backproject: principal-point pixel lands on the optical axis") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20; ++i) {
    const CameraModel cam = test::random_camera(rng);
    const double lambda = 0.5 + i * 0.25;
    const double cx = cam.intrinsic()(0, 2), cy = cam.intrinsic()(1, 2);
    const WorldPoint p = backproject(cam, cx, cy, lambda);
    // Optical axis = camera center + lambda * (third row of R).
    const Eigen::Vector3d expect = cam.center() + lambda * cam.rotation().row(2).transpose();
    CHECK((p.vec() - expect).norm() < 1e-9);
  }
}

TEST_CASE("project over backproject is the identity on (u, v, depth)") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uu(0.0, 640.0), uv(0.0, 480.0), ud(0.1, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const CameraModel cam = test::random_camera(rng, i % 7);
    const double u = uu(rng), v = uv(rng), d = ud(rng);
    const PixelProjection pp = project(cam, backproject(cam, u, v, d));
    CHECK(std::abs(pp.u - u) < 1e-6);
    CHECK(std::abs(pp.v - v) < 1e-6);
    CHECK(std::abs(pp.depth - d) < 1e-6);
    CHECK(pp.in_frustum);
  }
}

TEST_CASE("project: homogeneous scale invariance for a camera at the origin") {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = K(1, 1) = 120.0;
  K(0, 2) = 32.0;
  K(1, 2) = 24.0;
  const CameraModel cam(0, 64, 48, K, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> up(0.1, 5.0);
  for (int i = 0; i < 100; ++i) {
    const WorldPoint p{up(rng) - 2.5, up(rng) - 2.5, up(rng)};
    for (double c : {0.5, 2.0, 7.25}) {
      const PixelProjection a = project(cam, p);
      const PixelProjection b = project(cam, {c * p.x, c * p.y, c * p.z});
      CHECK(a.u == doctest::Approx(b.u).epsilon(1e-9));
      CHECK(a.v == doctest::Approx(b.v).epsilon(1e-9));
    }
  }
}

TEST_CASE("project: the camera center is degenerate, not an error") {
  std::mt19937_64 rng(15);
  const CameraModel cam = test::random_camera(rng);
  const Eigen::Vector3d c = cam.center();
  const PixelProjection pp = project(cam, WorldPoint::from(c));
  CHECK(!pp.in_frustum);
  CHECK(pp.depth == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("project: points behind the camera are out of frustum") {
  const CameraModel cam = test::identity_camera(1);
  CHECK(!project(cam, {0.0, 0.0, -1.0}).in_frustum);
}

TEST_CASE("ray_through_pixel: identity camera principal point") {
  const CameraModel cam = test::identity_camera(1);
  const Ray ray = ray_through_pixel(cam, 0.0, 0.0);
  CHECK(ray.origin.norm() == doctest::Approx(0.0));
  CHECK(ray.direction.x() == doctest::Approx(0.0));
  CHECK(ray.direction.y() == doctest::Approx(0.0));
  CHECK(ray.direction.z() == doctest::Approx(1.0));
}

TEST_CASE("ray_through_pixel: unit direction") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> uu(0.0, 640.0), uv(0.0, 480.0);
  for (int i = 0; i < 100; ++i) {
    const CameraModel cam = test::random_camera(rng);
    const Ray ray = ray_through_pixel(cam, uu(rng), uv(rng));
    CHECK(std::abs(ray.direction.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("ray_through_pixel: collinear with backproject at any depth") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uu(0.0, 640.0), uv(0.0, 480.0);
  for (int i = 0; i < 100; ++i) {
    const CameraModel cam = test::random_camera(rng);
    const double u = uu(rng), v = uv(rng);
    const Ray ray = ray_through_pixel(cam, u, v);
    CHECK((ray.origin - cam.center()).norm() < 1e-12);
    for (double d : {0.3, 1.0, 9.5}) {
      const Eigen::Vector3d p = backproject(cam, u, v, d).vec();
      const double s = (p - ray.origin).dot(ray.direction);
      CHECK(s > 0.0);
      CHECK((ray.origin + s * ray.direction - p).norm() < 1e-6);
    }
  }
}

TEST_CASE("CameraModel: construction validates R and K") {
  const Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d scaled = Eigen::Matrix3d::Identity() * 1.001;  // not orthonormal
  CHECK_THROWS_AS(CameraModel(0, 1, 1, K, scaled, Eigen::Vector3d::Zero()), Error);

  Eigen::Matrix3d reflect = Eigen::Matrix3d::Identity();
  reflect(2, 2) = -1.0;  // det = -1
  CHECK_THROWS_AS(CameraModel(0, 1, 1, K, reflect, Eigen::Vector3d::Zero()), Error);

  Eigen::Matrix3d lower = Eigen::Matrix3d::Identity();
  lower(1, 0) = 0.5;  // not upper-triangular
  CHECK_THROWS_AS(CameraModel(0, 1, 1, lower, Eigen::Matrix3d::Identity(),
                              Eigen::Vector3d::Zero()),
                  Error);

  Eigen::Matrix3d negf = Eigen::Matrix3d::Identity();
  negf(0, 0) = -2.0;  // negative focal
  CHECK_THROWS_AS(CameraModel(0, 1, 1, negf, Eigen::Matrix3d::Identity(),
                              Eigen::Vector3d::Zero()),
                  Error);
}

TEST_CASE("nearest_rotation: restores a perturbed rotation") {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Matrix3d R = test::random_rotation(rng);
    Eigen::Matrix3d noisy = R;
    noisy(0, 1) += 5e-4;
    const Eigen::Matrix3d fixed = nearest_rotation(noisy);
    CHECK(orthonormality_residual(fixed) < 1e-9);
    CHECK((fixed - R).norm() < 1e-2);
  }
  CHECK(orthonormality_residual(Eigen::Matrix3d::Identity()) == doctest::Approx(0.0));
}
