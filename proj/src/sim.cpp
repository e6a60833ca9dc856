#include "nerfdyn/sim.hpp"

#include <cmath>

#include "nerfdyn/errors.hpp"
#include "nerfdyn/random.hpp"

namespace nerfdyn {

std::vector<float> RigidState::serialize() const {
  std::vector<float> out;
  out.reserve(bodies.size() * 7);
  for (const BodyState& b : bodies) {
    out.push_back(b.pos.x);
    out.push_back(b.pos.y);
    out.push_back(b.pos.z);
    out.push_back(b.yaw);
    out.push_back(b.vel.x);
    out.push_back(b.vel.y);
    out.push_back(b.vel.z);
  }
  return out;
}

RigidState RigidState::deserialize(const std::vector<float>& v) {
  if (v.size() % 7 != 0) throw DataError("RigidState: serialized length not a multiple of 7");
  RigidState s;
  s.bodies.resize(v.size() / 7);
  for (std::size_t i = 0; i < s.bodies.size(); ++i) {
    const float* p = v.data() + i * 7;
    s.bodies[i].pos = {p[0], p[1], p[2]};
    s.bodies[i].yaw = p[3];
    s.bodies[i].vel = {p[4], p[5], p[6]};
  }
  return s;
}

EnvSpec EnvSpec::make(EnvId id) {
  EnvSpec e;
  e.id = id;
  switch (id) {
    case EnvId::PushBox: {
      e.name = "push_box";
      BodyDef pusher;
      pusher.name = "pusher";
      pusher.shape = ShapeKind::Sphere;
      pusher.half_extents = {0.10f, 0.10f, 0.10f};
      pusher.color = {0.78f, 0.22f, 0.16f};
      pusher.actuated = true;
      BodyDef box;
      box.name = "box";
      box.shape = ShapeKind::Box;
      box.half_extents = {0.18f, 0.12f, 0.10f};
      box.color = {0.20f, 0.38f, 0.82f};
      e.bodies = {pusher, box};
      e.actuated_body = 0;
      e.action_dim = 2;
      e.action_bound = 0.05f;
      e.cam_radius = 4.2f;
      e.cam_elevation = 1.9f;
      e.focal_rel = 2.3f;
      e.near = 2.0f;
      e.far = 7.0f;
      break;
    }
    case EnvId::BlockDrop: {
      e.name = "block_drop";
      BodyDef cube;
      cube.name = "cube";
      cube.shape = ShapeKind::Box;
      cube.half_extents = {0.12f, 0.12f, 0.12f};
      cube.color = {0.92f, 0.55f, 0.14f};
      BodyDef container;
      container.name = "container";
      container.shape = ShapeKind::OpenBox;
      container.half_extents = {0.20f, 0.20f, 0.16f};  // inner xy, wall height
      container.wall_thickness = 0.035f;
      container.color = {0.42f, 0.45f, 0.50f};
      container.movable = false;
      e.bodies = {cube, container};
      e.actuated_body = -1;
      e.action_dim = 0;
      e.arena_max.z = 1.6f;
      e.cam_radius = 3.4f;
      e.cam_elevation = 1.5f;
      e.focal_rel = 1.55f;
      e.near = 2.0f;
      e.far = 6.0f;
      break;
    }
  }
  return e;
}

EnvSpec EnvSpec::by_name(const std::string& name) {
  if (name == "push_box") return make(EnvId::PushBox);
  if (name == "block_drop") return make(EnvId::BlockDrop);
  throw DataError("unknown environment '" + name + "' (expected push_box or block_drop)");
}

RigidState EnvSpec::sample_initial_state(RandomStream& rng) const {
  RigidState s;
  s.bodies.resize(bodies.size());
  switch (id) {
    case EnvId::PushBox: {
      BodyState& box = s.bodies[1];
      box.pos = {rng.uniform(-0.15f, 0.15f), rng.uniform(-0.15f, 0.15f), bodies[1].half_extents.z};
      box.yaw = rng.uniform(-float(M_PI), float(M_PI));
      BodyState& pusher = s.bodies[0];
      float ang = rng.uniform(0.0f, 2.0f * float(M_PI));
      float dist = rng.uniform(0.28f, 0.42f);
      pusher.pos = {box.pos.x + dist * std::cos(ang), box.pos.y + dist * std::sin(ang),
                    bodies[0].half_extents.x};
      pusher.pos.x = std::clamp(pusher.pos.x, arena_min.x + 0.12f, arena_max.x - 0.12f);
      pusher.pos.y = std::clamp(pusher.pos.y, arena_min.y + 0.12f, arena_max.y - 0.12f);
      break;
    }
    case EnvId::BlockDrop: {
      BodyState& container = s.bodies[1];
      container.pos = {rng.uniform(-0.22f, 0.22f), rng.uniform(-0.22f, 0.22f), 0.0f};
      BodyState& cube = s.bodies[0];
      cube.pos = {container.pos.x + rng.uniform(-0.22f, 0.22f),
                  container.pos.y + rng.uniform(-0.22f, 0.22f), rng.uniform(0.75f, 1.15f)};
      break;
    }
  }
  return s;
}

std::vector<std::vector<float>> EnvSpec::sample_action_sequence(RandomStream& rng, int steps) const {
  std::vector<std::vector<float>> actions(steps, std::vector<float>(action_dim, 0.0f));
  if (action_dim == 0) return actions;
  // Per-trajectory drift keeps walks loosely directed so contacts occur.
  float drift_ang = rng.uniform(0.0f, 2.0f * float(M_PI));
  std::vector<float> drift = {std::cos(drift_ang), std::sin(drift_ang)};
  std::vector<float> prev(action_dim, 0.0f);
  for (int t = 0; t < steps; ++t) {
    for (int k = 0; k < action_dim; ++k) {
      float a = 0.70f * prev[k] + action_bound * (0.45f * rng.normal() + 0.18f * drift[k % 2]);
      actions[t][k] = std::clamp(a, -action_bound, action_bound);
      prev[k] = actions[t][k];
    }
  }
  return actions;
}

std::vector<CameraPose> EnvSpec::make_training_cameras(int n_views, int width, int height) const {
  return training_cameras(n_views, cam_radius, cam_elevation, focal_rel * width, width, height);
}

std::vector<CameraPose> EnvSpec::make_extrapolated_cameras(int n_views, int width, int height) const {
  return extrapolated_cameras(n_views, cam_radius, cam_elevation, focal_rel * width, width, height);
}

CameraPose EnvSpec::make_ring_camera(float azimuth_rad, int width, int height) const {
  return ring_camera(azimuth_rad, cam_radius, cam_elevation, focal_rel * width, width, height);
}

CameraPose EnvSpec::make_extrapolated_camera(float azimuth_rad, int width, int height) const {
  return ring_camera(azimuth_rad, cam_radius * kExtrapRadiusFactor, cam_elevation * kExtrapElevationFactor,
                     focal_rel * width, width, height);
}

// ---- contact helpers ----

namespace {

struct Rot2 {
  float c, s;
  explicit Rot2(float yaw) : c(std::cos(yaw)), s(std::sin(yaw)) {}
  Vec3 to_local(Vec3 v) const { return {c * v.x + s * v.y, -s * v.x + c * v.y, v.z}; }
  Vec3 to_world(Vec3 v) const { return {c * v.x - s * v.y, s * v.x + c * v.y, v.z}; }
};

// Resolves a kinematic sphere pressing into a yawed box. Moves the box out,
// matches normal velocity, and applies a contact torque about z.
void sphere_vs_box(const BodyState& sphere, float radius, BodyState& box, Vec3 box_half) {
  Rot2 rot(box.yaw);
  Vec3 local = rot.to_local(sphere.pos - box.pos);
  Vec3 closest{std::clamp(local.x, -box_half.x, box_half.x), std::clamp(local.y, -box_half.y, box_half.y),
               std::clamp(local.z, -box_half.z, box_half.z)};
  Vec3 delta = local - closest;
  float dist2 = delta.norm2();
  if (dist2 >= radius * radius) return;
  Vec3 n_local;  // from box surface toward sphere center
  float pen;
  if (dist2 > 1e-12f) {
    float dist = std::sqrt(dist2);
    n_local = delta / dist;
    pen = radius - dist;
  } else {
    // Sphere center inside the box: push out along the axis of least depth.
    float dx = box_half.x - std::abs(local.x);
    float dy = box_half.y - std::abs(local.y);
    float dz = box_half.z - std::abs(local.z);
    if (dx <= dy && dx <= dz) n_local = {local.x >= 0 ? 1.0f : -1.0f, 0, 0};
    else if (dy <= dz) n_local = {0, local.y >= 0 ? 1.0f : -1.0f, 0};
    else n_local = {0, 0, local.z >= 0 ? 1.0f : -1.0f};
    pen = radius + std::min({dx, dy, dz});
  }
  Vec3 n_world = rot.to_world(n_local);  // box -> sphere
  Vec3 push_dir = -n_world;              // direction the box yields
  box.pos += push_dir * pen;
  float v_box = box.vel.dot(push_dir);
  float v_sph = sphere.vel.dot(push_dir);
  if (v_box < v_sph) {
    float dv = v_sph - v_box;
    box.vel += push_dir * dv;
    // Contact torque about z from the off-center impulse.
    Vec3 contact = rot.to_world(closest) + box.pos;
    Vec3 arm = contact - box.pos;
    float torque = arm.x * push_dir.y * dv - arm.y * push_dir.x * dv;
    float inertia = (box_half.x * box_half.x + box_half.y * box_half.y) / 3.0f;
    float dyaw = std::clamp(torque / inertia * 0.05f, -0.2f, 0.2f);
    box.yaw += dyaw;
  }
}

// Axis-aligned overlap resolution: pushes `body` (an AABB) out of a static
// AABB along the axis of minimum penetration, zeroing velocity along it.
// Touching contacts (gap within tol) zero the approaching velocity without
// moving the body, so resting states are fixed points.
void aabb_vs_static(BodyState& body, Vec3 body_half, Vec3 center, Vec3 half, float tol) {
  Vec3 d = body.pos - center;
  float ox = body_half.x + half.x - std::abs(d.x);
  float oy = body_half.y + half.y - std::abs(d.y);
  float oz = body_half.z + half.z - std::abs(d.z);
  if (ox <= -tol || oy <= -tol || oz <= -tol) return;
  if (ox <= oy && ox <= oz) {
    float s = d.x >= 0 ? 1.0f : -1.0f;
    if (ox > 0.0f) body.pos.x += s * ox;
    if (body.vel.x * s < 0) body.vel.x = 0.0f;
  } else if (oy <= oz) {
    float s = d.y >= 0 ? 1.0f : -1.0f;
    if (oy > 0.0f) body.pos.y += s * oy;
    if (body.vel.y * s < 0) body.vel.y = 0.0f;
  } else {
    float s = d.z >= 0 ? 1.0f : -1.0f;
    if (oz > 0.0f) body.pos.z += s * oz;
    if (body.vel.z * s < 0) body.vel.z = 0.0f;
  }
}

struct SubBox {
  Vec3 center;
  Vec3 half;
};

// Floor slab plus four walls of an open container, in world coordinates.
std::vector<SubBox> open_box_parts(const BodyDef& def, const BodyState& st) {
  float ix = def.half_extents.x, iy = def.half_extents.y;
  float h = def.half_extents.z, th = def.wall_thickness;
  Vec3 base = st.pos;
  std::vector<SubBox> parts;
  parts.push_back({base + Vec3{0, 0, th * 0.5f}, {ix + th, iy + th, th * 0.5f}});
  float wz = th + h * 0.5f;
  parts.push_back({base + Vec3{ix + th * 0.5f, 0, wz}, {th * 0.5f, iy + th, h * 0.5f}});
  parts.push_back({base + Vec3{-(ix + th * 0.5f), 0, wz}, {th * 0.5f, iy + th, h * 0.5f}});
  parts.push_back({base + Vec3{0, iy + th * 0.5f, wz}, {ix + th, th * 0.5f, h * 0.5f}});
  parts.push_back({base + Vec3{0, -(iy + th * 0.5f), wz}, {ix + th, th * 0.5f, h * 0.5f}});
  return parts;
}

float yaw_expanded_half(float hx, float hy, float c, float s) {
  return std::abs(c) * hx + std::abs(s) * hy;
}

}  // namespace

RigidState sim_step(const EnvSpec& env, const RigidState& state, const std::vector<float>& action) {
  if (static_cast<int>(action.size()) != env.action_dim)
    throw Error("sim_step: action dimension " + std::to_string(action.size()) + " != " +
                std::to_string(env.action_dim));
  for (float a : action)
    if (!(std::abs(a) <= env.action_bound + 1e-6f))
      throw Error("sim_step: action exceeds bound " + std::to_string(env.action_bound));
  if (state.bodies.size() != env.bodies.size()) throw Error("sim_step: body count mismatch");

  RigidState next = state;
  const float dt = env.dt;

  // Kinematic actuated body: position-driven, velocity implied.
  if (env.actuated_body >= 0) {
    BodyState& act = next.bodies[env.actuated_body];
    const BodyDef& def = env.bodies[env.actuated_body];
    Vec3 before = act.pos;
    act.pos.x += action[0];
    act.pos.y += action.size() > 1 ? action[1] : 0.0f;
    float margin = def.half_extents.x;
    act.pos.x = std::clamp(act.pos.x, env.arena_min.x + margin, env.arena_max.x - margin);
    act.pos.y = std::clamp(act.pos.y, env.arena_min.y + margin, env.arena_max.y - margin);
    act.pos.z = def.half_extents.x;  // sphere resting height
    act.vel = (act.pos - before) / dt;
  }

  // Free bodies: position update with current velocity, then gravity.
  for (std::size_t i = 0; i < next.bodies.size(); ++i) {
    if (static_cast<int>(i) == env.actuated_body || !env.bodies[i].movable) continue;
    BodyState& b = next.bodies[i];
    b.pos += b.vel * dt;
    b.vel.z -= env.gravity * dt;
  }

  // Contacts.
  for (std::size_t i = 0; i < next.bodies.size(); ++i) {
    if (static_cast<int>(i) == env.actuated_body || !env.bodies[i].movable) continue;
    BodyState& b = next.bodies[i];
    const BodyDef& def = env.bodies[i];
    Vec3 half = def.half_extents;
    const float pre_bottom = state.bodies[i].pos.z - half.z;

    if (env.actuated_body >= 0) {
      const BodyState& act = next.bodies[env.actuated_body];
      const BodyDef& act_def = env.bodies[env.actuated_body];
      if (act_def.shape == ShapeKind::Sphere && def.shape == ShapeKind::Box)
        sphere_vs_box(act, act_def.half_extents.x, b, half);
    }

    for (std::size_t j = 0; j < next.bodies.size(); ++j) {
      if (j == i || env.bodies[j].shape != ShapeKind::OpenBox) continue;
      for (const SubBox& part : open_box_parts(env.bodies[j], next.bodies[j])) {
        // Swept check against tunneling: landing on a part's top face.
        float top = part.center.z + part.half.z;
        bool xy_overlap = std::abs(b.pos.x - part.center.x) < half.x + part.half.x &&
                          std::abs(b.pos.y - part.center.y) < half.y + part.half.y;
        if (xy_overlap && b.vel.z < 0.0f && pre_bottom >= top - 1e-6f && b.pos.z - half.z < top) {
          b.pos.z = top + half.z;
          b.vel.z = 0.0f;
        }
        aabb_vs_static(b, half, part.center, part.half, env.contact_tol);
      }
    }

    // Ground plane.
    float rest_z = def.shape == ShapeKind::Sphere ? half.x : half.z;
    if (b.pos.z - rest_z < env.contact_tol) {
      if (b.pos.z < rest_z) b.pos.z = rest_z;
      if (b.vel.z < 0.0f) b.vel.z = 0.0f;
    }

    // Arena bounds (yaw-expanded for boxes).
    Rot2 rot(b.yaw);
    float ex = def.shape == ShapeKind::Sphere ? half.x : yaw_expanded_half(half.x, half.y, rot.c, rot.s);
    float ey = def.shape == ShapeKind::Sphere ? half.x : yaw_expanded_half(half.y, half.x, rot.c, rot.s);
    if (b.pos.x < env.arena_min.x + ex) { b.pos.x = env.arena_min.x + ex; if (b.vel.x < 0) b.vel.x = 0; }
    if (b.pos.x > env.arena_max.x - ex) { b.pos.x = env.arena_max.x - ex; if (b.vel.x > 0) b.vel.x = 0; }
    if (b.pos.y < env.arena_min.y + ey) { b.pos.y = env.arena_min.y + ey; if (b.vel.y < 0) b.vel.y = 0; }
    if (b.pos.y > env.arena_max.y - ey) { b.pos.y = env.arena_max.y - ey; if (b.vel.y > 0) b.vel.y = 0; }

    // Ground friction as exponential velocity damping while supported.
    bool supported = b.pos.z - rest_z < env.contact_tol && std::abs(b.vel.z) < 1e-6f;
    if (!supported) {
      // Supported on a container part counts as well.
      for (std::size_t j = 0; j < next.bodies.size(); ++j) {
        if (j == i || env.bodies[j].shape != ShapeKind::OpenBox) continue;
        for (const SubBox& part : open_box_parts(env.bodies[j], next.bodies[j])) {
          float top = part.center.z + part.half.z;
          if (std::abs(b.pos.z - half.z - top) < env.contact_tol && std::abs(b.vel.z) < 1e-6f)
            supported = true;
        }
      }
    }
    if (supported) {
      b.vel.x *= env.friction_damping;
      b.vel.y *= env.friction_damping;
    }
  }

  // If the free box ended up wedged (wall behind it), the position-driven
  // pusher yields instead of overlapping it.
  if (env.actuated_body >= 0) {
    BodyState& act = next.bodies[env.actuated_body];
    const BodyDef& act_def = env.bodies[env.actuated_body];
    if (act_def.shape == ShapeKind::Sphere) {
      float r = act_def.half_extents.x;
      for (std::size_t i = 0; i < next.bodies.size(); ++i) {
        if (static_cast<int>(i) == env.actuated_body || env.bodies[i].shape != ShapeKind::Box) continue;
        const BodyState& box = next.bodies[i];
        Rot2 rot(box.yaw);
        Vec3 local = rot.to_local(act.pos - box.pos);
        Vec3 h = env.bodies[i].half_extents;
        Vec3 closest{std::clamp(local.x, -h.x, h.x), std::clamp(local.y, -h.y, h.y),
                     std::clamp(local.z, -h.z, h.z)};
        Vec3 delta = local - closest;
        float dist2 = delta.norm2();
        if (dist2 < r * r && dist2 > 1e-12f) {
          float dist = std::sqrt(dist2);
          act.pos += rot.to_world(delta / dist) * (r - dist);
        }
      }
      Vec3 before = state.bodies[env.actuated_body].pos;
      act.vel = (act.pos - before) / dt;
    }
  }

  return next;
}

float kinetic_energy(const EnvSpec& env, const RigidState& state) {
  float ke = 0.0f;
  for (std::size_t i = 0; i < state.bodies.size(); ++i)
    if (env.bodies[i].movable) ke += 0.5f * state.bodies[i].vel.norm2();
  return ke;
}

// ---- surface sampling ----

namespace {

void box_surface(std::vector<Vec3>& out, Vec3 center, Vec3 half, float yaw, int n) {
  Rot2 rot(yaw);
  auto emit = [&](Vec3 local) { out.push_back(rot.to_world(local.cwise_mul(half)) + center); };
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      float u = -1.0f + 2.0f * (a + 0.5f) / n;
      float v = -1.0f + 2.0f * (b + 0.5f) / n;
      emit({1.0f, u, v});
      emit({-1.0f, u, v});
      emit({u, 1.0f, v});
      emit({u, -1.0f, v});
      emit({u, v, 1.0f});
      emit({u, v, -1.0f});
    }
  }
}

void sphere_surface(std::vector<Vec3>& out, Vec3 center, float radius, int n) {
  const float golden = 2.39996322972865332f;  // golden angle
  for (int i = 0; i < n; ++i) {
    float z = 1.0f - 2.0f * (i + 0.5f) / n;
    float r = std::sqrt(std::max(0.0f, 1.0f - z * z));
    float a = golden * i;
    out.push_back(center + Vec3{r * std::cos(a), r * std::sin(a), z} * radius);
  }
}

}  // namespace

std::vector<Vec3> surface_points(const EnvSpec& env, const RigidState& state) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < state.bodies.size(); ++i) {
    const BodyDef& def = env.bodies[i];
    const BodyState& st = state.bodies[i];
    switch (def.shape) {
      case ShapeKind::Box:
        box_surface(out, st.pos, def.half_extents, st.yaw, 4);
        break;
      case ShapeKind::Sphere:
        sphere_surface(out, st.pos, def.half_extents.x, 96);
        break;
      case ShapeKind::OpenBox:
        for (const SubBox& part : open_box_parts(def, st)) box_surface(out, part.center, part.half, 0.0f, 2);
        break;
    }
  }
  return out;
}

// ---- ground-truth ray tracer ----

namespace {

struct Hit {
  float t = -1.0f;
  Vec3 normal;
  Vec3 color;
};

bool ray_sphere(Vec3 o, Vec3 d, Vec3 c, float r, float& t) {
  Vec3 oc = o - c;
  float b = oc.dot(d);
  float disc = b * b - (oc.norm2() - r * r);
  if (disc < 0.0f) return false;
  float s = std::sqrt(disc);
  float t0 = -b - s;
  float t1 = -b + s;
  t = t0 > 1e-4f ? t0 : t1;
  return t > 1e-4f;
}

bool ray_box_local(Vec3 o, Vec3 d, Vec3 half, float& t, Vec3& normal) {
  float tmin = -1e30f, tmax = 1e30f;
  int axis = -1;
  float sign = 1.0f;
  const float oo[3] = {o.x, o.y, o.z};
  const float dd[3] = {d.x, d.y, d.z};
  const float hh[3] = {half.x, half.y, half.z};
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dd[k]) < 1e-9f) {
      if (std::abs(oo[k]) > hh[k]) return false;
      continue;
    }
    float inv = 1.0f / dd[k];
    float t0 = (-hh[k] - oo[k]) * inv;
    float t1 = (hh[k] - oo[k]) * inv;
    float near_sign = -1.0f;
    if (t0 > t1) {
      std::swap(t0, t1);
      near_sign = 1.0f;
    }
    if (t0 > tmin) {
      tmin = t0;
      axis = k;
      sign = near_sign;
    }
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  if (tmin <= 1e-4f || axis < 0) return false;
  t = tmin;
  normal = {0, 0, 0};
  if (axis == 0) normal.x = sign;
  if (axis == 1) normal.y = sign;
  if (axis == 2) normal.z = sign;
  return true;
}

bool ray_obb(Vec3 o, Vec3 d, Vec3 center, Vec3 half, float yaw, float& t, Vec3& normal) {
  Rot2 rot(yaw);
  Vec3 lo = rot.to_local(o - center);
  Vec3 ld = rot.to_local(d);
  Vec3 ln;
  if (!ray_box_local(lo, ld, half, t, ln)) return false;
  normal = rot.to_world(ln);
  return true;
}

bool trace_ray(const EnvSpec& env, const RigidState& state, Vec3 eye, Vec3 d, Hit& best) {
  const Vec3 checker_a{0.80f, 0.80f, 0.82f};
  const Vec3 checker_b{0.52f, 0.56f, 0.61f};
  const float cell = 0.2f;
  best.t = 1e30f;
  bool hit_any = false;

  // Checkered table slab at z = 0, finite so the scene stays compact and
  // distant rays terminate as background.
  const float table_half = 1.0f;
  if (std::abs(d.z) > 1e-9f) {
    float t = -eye.z / d.z;
    if (t > 1e-4f && t < best.t) {
      Vec3 p = eye + d * t;
      if (std::abs(p.x) <= table_half && std::abs(p.y) <= table_half) {
        int par = (int(std::floor(p.x / cell)) + int(std::floor(p.y / cell))) & 1;
        best = {t, {0, 0, 1}, par ? checker_a : checker_b};
        hit_any = true;
      }
    }
  }

  for (std::size_t i = 0; i < state.bodies.size(); ++i) {
    const BodyDef& def = env.bodies[i];
    const BodyState& st = state.bodies[i];
    float t;
    Vec3 n;
    switch (def.shape) {
      case ShapeKind::Sphere:
        if (ray_sphere(eye, d, st.pos, def.half_extents.x, t) && t < best.t) {
          Vec3 p = eye + d * t;
          best = {t, (p - st.pos).normalized(), def.color};
          hit_any = true;
        }
        break;
      case ShapeKind::Box:
        if (ray_obb(eye, d, st.pos, def.half_extents, st.yaw, t, n) && t < best.t) {
          best = {t, n, def.color};
          hit_any = true;
        }
        break;
      case ShapeKind::OpenBox:
        for (const SubBox& part : open_box_parts(def, st)) {
          if (ray_obb(eye, d, part.center, part.half, 0.0f, t, n) && t < best.t) {
            best = {t, n, def.color};
            hit_any = true;
          }
        }
        break;
    }
  }
  return hit_any;
}

}  // namespace

Image render_gt(const EnvSpec& env, const RigidState& state, const CameraPose& camera) {
  Image im(camera.width, camera.height);
  const Vec3 light = Vec3{0.45f, 0.30f, 1.0f}.normalized();
  const float ambient = 0.35f;
  const Vec3 bg{1.0f, 1.0f, 1.0f};
  const Vec3 eye = camera.eye();

  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      Vec3 d = camera.pixel_direction(float(x), float(y));
      Hit hit;
      if (!trace_ray(env, state, eye, d, hit)) {
        im.set(x, y, bg);
      } else {
        float diff = std::max(0.0f, hit.normal.dot(light));
        im.set(x, y, hit.color * (ambient + (1.0f - ambient) * diff));
      }
    }
  }
  return im;
}

float trace_depth(const EnvSpec& env, const RigidState& state, const CameraPose& camera, int px, int py) {
  Hit hit;
  if (!trace_ray(env, state, camera.eye(), camera.pixel_direction(float(px), float(py)), hit))
    return std::numeric_limits<float>::infinity();
  return hit.t;
}

}  // namespace nerfdyn
