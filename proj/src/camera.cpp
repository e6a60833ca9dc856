#include "nerfdyn/camera.hpp"

#include <cmath>

#include "nerfdyn/errors.hpp"

namespace nerfdyn {

CameraPose CameraPose::look_at(Vec3 eye, Vec3 target, Vec3 up, float focal, int width, int height) {
  Vec3 fwd = (target - eye).normalized();
  Vec3 right = up.cross(fwd);
  if (right.norm() < 1e-6f) throw Error("look_at: view direction parallel to up");
  right = right.normalized();
  Vec3 down = right.cross(fwd);  // completes +x right, +y down, +z forward
  CameraPose cam;
  cam.focal = focal;
  cam.width = width;
  cam.height = height;
  // Rows of the rotation block are the camera axes in world coordinates.
  const Vec3 axes[3] = {right, down, fwd};
  for (int r = 0; r < 3; ++r) {
    cam.view[r * 4 + 0] = axes[r].x;
    cam.view[r * 4 + 1] = axes[r].y;
    cam.view[r * 4 + 2] = axes[r].z;
    cam.view[r * 4 + 3] = -axes[r].dot(eye);
  }
  cam.view[12] = cam.view[13] = cam.view[14] = 0.0f;
  cam.view[15] = 1.0f;
  return cam;
}

CameraPose CameraPose::from_flat(const std::array<float, 16>& flat, float focal, int width, int height) {
  CameraPose cam;
  cam.view = flat;
  cam.focal = focal;
  cam.width = width;
  cam.height = height;
  return cam;
}

Vec3 CameraPose::eye() const {
  // eye = -R^T t
  Vec3 t{view[3], view[7], view[11]};
  return {-(view[0] * t.x + view[4] * t.y + view[8] * t.z),
          -(view[1] * t.x + view[5] * t.y + view[9] * t.z),
          -(view[2] * t.x + view[6] * t.y + view[10] * t.z)};
}

Vec3 CameraPose::pixel_direction(float px, float py) const {
  float dx = (px + 0.5f - 0.5f * width) / focal;
  float dy = (py + 0.5f - 0.5f * height) / focal;
  Vec3 d = right() * dx + down() * dy + forward();
  return d.normalized();
}

std::array<float, 3> CameraPose::project(Vec3 w) const {
  float cx = view[0] * w.x + view[1] * w.y + view[2] * w.z + view[3];
  float cy = view[4] * w.x + view[5] * w.y + view[6] * w.z + view[7];
  float cz = view[8] * w.x + view[9] * w.y + view[10] * w.z + view[11];
  return {focal * cx / cz + 0.5f * width - 0.5f, focal * cy / cz + 0.5f * height - 0.5f, cz};
}

float CameraPose::orthonormality_error() const {
  float err = 0.0f;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      float dot = 0.0f;
      for (int k = 0; k < 3; ++k) dot += view[k * 4 + i] * view[k * 4 + j];
      err = std::max(err, std::abs(dot - (i == j ? 1.0f : 0.0f)));
    }
  }
  return err;
}

CameraPose ring_camera(float azimuth_rad, float radius, float elevation, float focal, int width, int height) {
  Vec3 eye{radius * std::cos(azimuth_rad), radius * std::sin(azimuth_rad), elevation};
  return CameraPose::look_at(eye, {0.0f, 0.0f, 0.0f}, {0.0f, 0.0f, 1.0f}, focal, width, height);
}

std::vector<CameraPose> training_cameras(int n_views, float radius, float elevation, float focal,
                                         int width, int height) {
  if (n_views < 1) throw Error("training_cameras: n_views must be >= 1");
  if (radius <= 0.0f) throw Error("training_cameras: radius must be positive");
  std::vector<CameraPose> out;
  out.reserve(n_views);
  const float step = 2.0f * float(M_PI) / float(n_views);
  for (int i = 0; i < n_views; ++i) out.push_back(ring_camera(i * step, radius, elevation, focal, width, height));
  return out;
}

std::vector<CameraPose> extrapolated_cameras(int n_views, float radius, float elevation, float focal,
                                             int width, int height) {
  return training_cameras(n_views, radius * kExtrapRadiusFactor, elevation * kExtrapElevationFactor,
                          focal, width, height);
}

}  // namespace nerfdyn
