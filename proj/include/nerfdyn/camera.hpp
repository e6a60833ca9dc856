#pragma once

#include <array>
#include <vector>

#include "nerfdyn/vec3.hpp"

namespace nerfdyn {

// Pinhole camera: 4x4 world-to-camera view matrix (row-major) plus focal
// length in pixels. Camera frame is +x right, +y down, +z forward.
struct CameraPose {
  std::array<float, 16> view{};  // world-to-camera
  float focal = 0.0f;
  int width = 0, height = 0;

  static CameraPose look_at(Vec3 eye, Vec3 target, Vec3 up, float focal, int width, int height);

  // Row-major flattening of the view matrix; invertible back via from_flat.
  std::array<float, 16> flatten() const { return view; }
  static CameraPose from_flat(const std::array<float, 16>& flat, float focal, int width, int height);

  Vec3 eye() const;
  Vec3 right() const { return {view[0], view[1], view[2]}; }
  Vec3 down() const { return {view[4], view[5], view[6]}; }
  Vec3 forward() const { return {view[8], view[9], view[10]}; }

  // World ray through the center of pixel (px, py).
  Vec3 pixel_direction(float px, float py) const;
  // Projects a world point; returns {u, v, depth} with depth along +z cam.
  std::array<float, 3> project(Vec3 world) const;

  // max |R^T R - I| over the rotation block.
  float orthonormality_error() const;
};

// One camera on the azimuth ring, looking at the world origin with up = +z.
CameraPose ring_camera(float azimuth_rad, float radius, float elevation, float focal, int width, int height);

// n_views cameras equally spaced in azimuth at fixed radius/elevation.
std::vector<CameraPose> training_cameras(int n_views, float radius, float elevation, float focal,
                                         int width, int height);

// Out-of-distribution evaluation ring: closer, higher, facing more downward.
constexpr float kExtrapRadiusFactor = 0.7f;
constexpr float kExtrapElevationFactor = 1.8f;
std::vector<CameraPose> extrapolated_cameras(int n_views, float radius, float elevation, float focal,
                                             int width, int height);

}  // namespace nerfdyn
