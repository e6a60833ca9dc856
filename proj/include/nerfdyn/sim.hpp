#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nerfdyn/camera.hpp"
#include "nerfdyn/image.hpp"
#include "nerfdyn/vec3.hpp"

namespace nerfdyn {

enum class EnvId { PushBox, BlockDrop };

enum class ShapeKind { Box, Sphere, OpenBox };

struct BodyDef {
  std::string name;
  ShapeKind shape = ShapeKind::Box;
  Vec3 half_extents{0.1f, 0.1f, 0.1f};  // Box: half sizes; Sphere: x = radius;
                                        // OpenBox: inner half sizes (x,y) and wall height (z)
  float wall_thickness = 0.02f;         // OpenBox only
  Vec3 color{0.5f, 0.5f, 0.5f};
  bool actuated = false;   // kinematic, driven by the action
  bool movable = true;     // participates in dynamics
};

// Per-body state: position (m), yaw (rad), linear velocity (m/s).
struct BodyState {
  Vec3 pos;
  float yaw = 0.0f;
  Vec3 vel;

  bool operator==(const BodyState&) const = default;
};

struct RigidState {
  std::vector<BodyState> bodies;

  std::vector<float> serialize() const;                       // 7 floats per body, fixed order
  static RigidState deserialize(const std::vector<float>& v); // inverse
  bool operator==(const RigidState&) const = default;
};

// Environment definition: bodies, action space, camera ring, integrator
// constants. Values are fixed per environment so datasets are self-consistent.
struct EnvSpec {
  EnvId id;
  std::string name;
  std::vector<BodyDef> bodies;
  int actuated_body = -1;   // -1: passive environment
  int action_dim = 0;
  float action_bound = 0.05f;  // per-step displacement clamp (m)

  float dt = 0.05f;
  float gravity = 9.81f;
  float friction_damping = 0.9f;  // per-step ground-contact velocity factor
  float contact_tol = 1e-3f;
  Vec3 arena_min{-0.6f, -0.6f, 0.0f};
  Vec3 arena_max{0.6f, 0.6f, 1.5f};

  // Camera protocol (ring around the origin) and render depth range.
  float cam_radius = 4.2f;
  float cam_elevation = 1.9f;
  float focal_rel = 2.3f;  // focal = focal_rel * image width
  float near = 2.0f;
  float far = 7.0f;
  int default_views = 8;

  static EnvSpec make(EnvId id);
  static EnvSpec by_name(const std::string& name);

  // Random setup used by dataset generation and task generation.
  RigidState sample_initial_state(class RandomStream& rng) const;
  // Momentum random walk within bounds, with a per-trajectory drift direction.
  std::vector<std::vector<float>> sample_action_sequence(class RandomStream& rng, int steps) const;

  std::vector<CameraPose> make_training_cameras(int n_views, int width, int height) const;
  std::vector<CameraPose> make_extrapolated_cameras(int n_views, int width, int height) const;
  CameraPose make_ring_camera(float azimuth_rad, int width, int height) const;
  CameraPose make_extrapolated_camera(float azimuth_rad, int width, int height) const;
};

// One integrator step: position update with current velocity, then velocity
// update (gravity, friction), then contact resolution by projection with
// velocity zeroing along the contact normal. The actuated body is kinematic.
// `action` must already satisfy the per-environment bounds.
RigidState sim_step(const EnvSpec& env, const RigidState& state, const std::vector<float>& action);

float kinetic_energy(const EnvSpec& env, const RigidState& state);

// Deterministic surface point samples of all bodies (world frame), used by
// the Chamfer metric.
std::vector<Vec3> surface_points(const EnvSpec& env, const RigidState& state);

// Lambertian ray-traced render of the state: checkered ground plane, boxes
// and spheres, constant white background, one fixed directional light.
Image render_gt(const EnvSpec& env, const RigidState& state, const CameraPose& camera);

// Depth of the nearest hit along the ray through pixel (px, py); +inf when
// only background is hit.
float trace_depth(const EnvSpec& env, const RigidState& state, const CameraPose& camera, int px, int py);

}  // namespace nerfdyn
