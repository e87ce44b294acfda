// Synthetic scenes for a translating pinhole camera: sampled 3D points,
// rectilinear trajectories with constant or linearly varying speed, moving
// boxes of points, analytic ground-truth flow and point-sprite rendering.
//
// The camera never rotates, so camera-frame axes equal world axes and
// camera-frame coordinates are world position minus camera position.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rinv/camera.hpp"
#include "rinv/core.hpp"
#include "rinv/flow.hpp"

namespace rinv {

struct SpeedProfile {
  enum class Kind { kConstant, kLinear };
  Kind kind = Kind::kConstant;
  double v0 = 1.0;      // m/s
  double accel = 0.0;   // m/s^2, linear profile only

  static SpeedProfile constant(double v) { return {Kind::kConstant, v, 0.0}; }
  static SpeedProfile linear(double v0, double a) { return {Kind::kLinear, v0, a}; }

  double speed(double t) const { return kind == Kind::kConstant ? v0 : v0 + accel * t; }
  double distance(double t) const { return kind == Kind::kConstant ? v0 * t : v0 * t + 0.5 * accel * t * t; }
};

struct StaticPointsSpec {
  int count = 0;
  double range_min = 2.0;
  double range_max = 100.0;
  double sprite_radius_px = 2.0;
};

struct MoverSpec {
  Vec3 center{0.0, 0.0, 10.0};
  Vec3 half_extent{0.5, 0.5, 0.5};
  Vec3 world_velocity{0.0, 0.0, 0.0};
  int point_count = 200;
};

struct BackgroundSpec {
  std::uint64_t seed = 1;
  int octaves = 4;
};

inline constexpr double kMaxFlowPerFrame = 16.0;

struct SceneConfig {
  CameraModel camera = CameraModel::centered(100.0, 320, 240);
  Vec3 t_dir{0.0, 0.0, 1.0};
  SpeedProfile speed = SpeedProfile::constant(1.0);
  int frame_count = 2;
  double dt = 1.0 / 30.0;
  StaticPointsSpec static_points;
  std::vector<MoverSpec> movers;
  BackgroundSpec background;
  std::uint64_t seed = 0;

  /// Field-level checks; the flow cap is checked by build_scene once points exist.
  void validate() const {
    camera.validate();
    if (!t_dir.allFinite() || std::abs(t_dir.norm() - 1.0) > 1e-9) throw ConfigError("t_dir", "must be a unit vector");
    if (!std::isfinite(speed.v0) || !std::isfinite(speed.accel)) throw ConfigError("speed_profile", "must be finite");
    if (frame_count < 2) throw ConfigError("frame_count", "must be >= 2");
    if (!(dt > 0.0 && std::isfinite(dt))) throw ConfigError("dt", "must be > 0");
    if (static_points.count < 0) throw ConfigError("static_points.count", "must be >= 0");
    if (!(static_points.range_min > 0.0)) throw ConfigError("static_points.range_min", "must be > 0");
    if (!(static_points.range_max >= static_points.range_min && std::isfinite(static_points.range_max)))
      throw ConfigError("static_points.range_max", "must be finite and >= range_min");
    if (!(static_points.sprite_radius_px > 0.0)) throw ConfigError("static_points.sprite_radius_px", "must be > 0");
    for (std::size_t i = 0; i < movers.size(); ++i) {
      const auto& m = movers[i];
      const std::string field = "movers[" + std::to_string(i) + "]";
      if (!m.center.allFinite()) throw ConfigError(field + ".center", "must be finite");
      if (!m.half_extent.allFinite() || (m.half_extent.array() < 0.0).any())
        throw ConfigError(field + ".half_extent", "must be finite and >= 0");
      if (!m.world_velocity.allFinite()) throw ConfigError(field + ".world_velocity", "must be finite");
      if (m.point_count < 0) throw ConfigError(field + ".point_count", "must be >= 0");
    }
    if (background.octaves < 1) throw ConfigError("background.octaves", "must be >= 1");
  }

  double duration() const { return (frame_count - 1) * dt; }
};

struct ScenePoint {
  Vec3 position0;   // world, t = 0
  Vec3 velocity;    // world, m/s
  float intensity = 0.5f;
  int mover = -1;   // index into SceneConfig::movers, -1 for static
};

struct Scene {
  SceneConfig config;
  std::vector<ScenePoint> points;
};

inline Vec3 camera_position(const SceneConfig& config, double t) { return config.t_dir * config.speed.distance(t); }
inline Vec3 camera_velocity(const SceneConfig& config, double t) { return config.t_dir * config.speed.speed(t); }

inline Vec3 point_in_camera(const Scene& scene, const ScenePoint& p, double t) {
  return p.position0 + p.velocity * t - camera_position(scene.config, t);
}

/// Image-plane velocity (px/s) of a camera-frame point moving at vel_cam.
inline Vec2 image_velocity(const CameraModel& cam, const Vec3& point_cam, const Vec3& vel_cam) {
  const Vec2 offset = project(cam, point_cam) - cam.principal_point;
  const double f = cam.focal_length_px;
  return Vec2((f * vel_cam.x() - offset.x() * vel_cam.z()) / point_cam.z(),
              (f * vel_cam.y() - offset.y() * vel_cam.z()) / point_cam.z());
}

namespace detail {

inline constexpr double kMinDepth = 1e-9;

inline bool projects_into(const CameraModel& cam, const Vec3& pc) {
  if (!(pc.z() > kMinDepth)) return false;
  const Vec2 p = project(cam, pc);
  return p.x() >= -0.5 && p.y() >= -0.5 && p.x() < cam.width - 0.5 && p.y() < cam.height - 0.5;
}

}  // namespace detail

inline Scene build_scene(const SceneConfig& config) {
  config.validate();
  Scene scene;
  scene.config = config;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const CameraModel& cam = config.camera;
  auto intensity = [&] { return static_cast<float>(0.55 + 0.45 * unit(rng)); };

  const auto& sp = config.static_points;
  scene.points.reserve(static_cast<std::size_t>(sp.count));
  for (int i = 0; i < sp.count; ++i) {
    const double px = -0.5 + cam.width * unit(rng);
    const double py = -0.5 + cam.height * unit(rng);
    const double range = sp.range_min + (sp.range_max - sp.range_min) * unit(rng);
    const Vec3 ray = Vec3((px - cam.principal_point.x()) / cam.focal_length_px,
                          (py - cam.principal_point.y()) / cam.focal_length_px, 1.0)
                         .normalized();
    scene.points.push_back(ScenePoint{range * ray, Vec3::Zero(), intensity(), -1});
  }
  for (std::size_t m = 0; m < config.movers.size(); ++m) {
    const auto& spec = config.movers[m];
    for (int i = 0; i < spec.point_count; ++i) {
      const Vec3 jitter(2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0);
      scene.points.push_back(ScenePoint{spec.center + spec.half_extent.cwiseProduct(jitter), spec.world_velocity,
                                        intensity(), static_cast<int>(m)});
    }
  }

  for (int k = 0; k + 1 < config.frame_count; ++k) {
    const double t = k * config.dt;
    for (const auto& p : scene.points) {
      const Vec3 a = point_in_camera(scene, p, t);
      const Vec3 b = point_in_camera(scene, p, t + config.dt);
      if (!detail::projects_into(cam, a) || !(b.z() > detail::kMinDepth)) continue;
      const double flow = (project(cam, b) - project(cam, a)).norm();
      if (flow > kMaxFlowPerFrame)
        throw ConfigError("speed_profile", "image flow of " + std::to_string(flow) + " px/frame at frame " +
                                               std::to_string(k) + " exceeds " + std::to_string(kMaxFlowPerFrame));
    }
  }
  return scene;
}

struct GroundTruthFrame {
  FlowField flow;                 // displacement, px/frame
  FlowField instantaneous_flow;   // image velocity, px/s * dt
  Mask moving_mask;
  std::optional<FoePoint> foe;    // empty for purely lateral translation
  Vec3 camera_position{0.0, 0.0, 0.0};
};

/// Per-pixel winner of the nearest-point-wins sprite rasterization.
struct SpriteOwnership {
  Image<int> owner;     // index into Scene::points, -1 where empty
  Image<double> depth;  // camera-frame Z of the owner
};

inline SpriteOwnership rasterize_sprites(const Scene& scene, double t) {
  const CameraModel& cam = scene.config.camera;
  const double radius = scene.config.static_points.sprite_radius_px;
  SpriteOwnership out{Image<int>(cam.width, cam.height, -1),
                      Image<double>(cam.width, cam.height, std::numeric_limits<double>::infinity())};
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const Vec3 pc = point_in_camera(scene, scene.points[i], t);
    if (!(pc.z() > detail::kMinDepth)) continue;
    const Vec2 c = project(cam, pc);
    const int x0 = std::max(0, static_cast<int>(std::ceil(c.x() - radius)));
    const int x1 = std::min(cam.width - 1, static_cast<int>(std::floor(c.x() + radius)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(c.y() - radius)));
    const int y1 = std::min(cam.height - 1, static_cast<int>(std::floor(c.y() + radius)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - c.x(), dy = y - c.y();
        if (dx * dx + dy * dy > radius * radius) continue;
        if (pc.z() < out.depth(x, y)) {
          out.depth(x, y) = pc.z();
          out.owner(x, y) = static_cast<int>(i);
        }
      }
  }
  return out;
}

/// Ground truth between t and t + dt. Each sprite is a fronto-parallel patch at
/// its point's depth moving with the point, so every footprint pixel gets the
/// exact flow of the surface it shows.
inline GroundTruthFrame analytic_flow(const Scene& scene, double t) {
  const SceneConfig& cfg = scene.config;
  const CameraModel& cam = cfg.camera;
  if (!(t >= 0.0) || t + cfg.dt > cfg.duration() + 1e-9 * cfg.dt)
    throw ConfigError("t", "t and t + dt must lie within the trajectory");

  const SpriteOwnership own = rasterize_sprites(scene, t);
  GroundTruthFrame gt;
  gt.flow = FlowField(cam.width, cam.height);
  gt.instantaneous_flow = FlowField(cam.width, cam.height);
  gt.moving_mask = Mask(cam.width, cam.height, 0);
  gt.camera_position = camera_position(cfg, t);
  try {
    gt.foe = foe_from_translation(cam, cfg.t_dir);
  } catch (const Error&) {
    gt.foe.reset();
  }

  const Vec3 cam_step = camera_position(cfg, t + cfg.dt) - camera_position(cfg, t);
  const Vec3 cam_vel = camera_velocity(cfg, t);
  const double f = cam.focal_length_px;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const int idx = own.owner(x, y);
      if (idx < 0) continue;
      const ScenePoint& p = scene.points[static_cast<std::size_t>(idx)];
      const double z = own.depth(x, y);
      const double ox = x - cam.principal_point.x();
      const double oy = y - cam.principal_point.y();
      // project(surface + step) - pixel, rearranged to avoid cancellation.
      const Vec3 step = p.velocity * cfg.dt - cam_step;
      const double z_next = z + step.z();
      if (!(z_next > detail::kMinDepth)) continue;
      gt.flow.set(x, y, (f * step.x() - ox * step.z()) / z_next, (f * step.y() - oy * step.z()) / z_next);
      const Vec3 vel = p.velocity - cam_vel;
      gt.instantaneous_flow.set(x, y, (f * vel.x() - ox * vel.z()) / z * cfg.dt, (f * vel.y() - oy * vel.z()) / z * cfg.dt);
      if (p.mover >= 0) gt.moving_mask(x, y) = 1;
    }
  return gt;
}

/// Mover footprints at time t (no flow needed, so valid on the last frame too).
inline Mask moving_mask_at(const Scene& scene, double t) {
  const SpriteOwnership own = rasterize_sprites(scene, t);
  Mask out(own.owner.width(), own.owner.height(), 0);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (own.owner[i] >= 0 && scene.points[static_cast<std::size_t>(own.owner[i])].mover >= 0) out[i] = 1;
  return out;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x632BE59BD9B4E019ull ^
                                                       static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double value_noise(double x, double y, std::uint64_t seed) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  auto fade = [](double s) { return s * s * s * (s * (s * 6.0 - 15.0) + 10.0); };
  const double sx = fade(x - fx), sy = fade(y - fy);
  const double a = lattice(ix, iy, seed), b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed), d = lattice(ix + 1, iy + 1, seed);
  return (a + (b - a) * sx) * (1.0 - sy) + (c + (d - c) * sx) * sy;
}

}  // namespace detail

/// Fractal value noise in [0, 1].
inline double background_texture(const BackgroundSpec& bg, double x, double y) {
  double sum = 0.0, norm = 0.0, amp = 1.0, freq = 1.0;
  for (int o = 0; o < bg.octaves; ++o) {
    sum += amp * detail::value_noise(x * freq, y * freq, bg.seed + static_cast<std::uint64_t>(o) * 7919u);
    norm += amp;
    amp *= 0.5;
    freq *= 2.0;
  }
  return sum / norm;
}

/// Textured background plane at world Z = 2 Rmax, then Gaussian sprites
/// painted far to near.
inline Frame render_frame(const Scene& scene, double t) {
  const SceneConfig& cfg = scene.config;
  const CameraModel& cam = cfg.camera;
  const double f = cam.focal_length_px;
  const Vec3 c = camera_position(cfg, t);
  const double plane_z = 2.0 * cfg.static_points.range_max;
  const double cell_m = 4.0 * plane_z / f;  // ~4 px features seen from the start position
  const double depth = plane_z - c.z();

  Frame frame(cam.width, cam.height, 0.25f);
  if (depth > detail::kMinDepth) {
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        const double wx = c.x() + depth * (x - cam.principal_point.x()) / f;
        const double wy = c.y() + depth * (y - cam.principal_point.y()) / f;
        frame(x, y) = static_cast<float>(0.05 + 0.45 * background_texture(cfg.background, wx / cell_m, wy / cell_m));
      }
  }

  struct Sprite {
    double z;
    Vec2 center;
    float intensity;
  };
  std::vector<Sprite> sprites;
  for (const auto& p : scene.points) {
    const Vec3 pc = point_in_camera(scene, p, t);
    if (!(pc.z() > detail::kMinDepth)) continue;
    sprites.push_back({pc.z(), project(cam, pc), p.intensity});
  }
  std::stable_sort(sprites.begin(), sprites.end(), [](const Sprite& a, const Sprite& b) { return a.z > b.z; });

  const double radius = cfg.static_points.sprite_radius_px;
  const double inv_two_sigma_sq = 1.0 / (2.0 * (0.5 * radius) * (0.5 * radius));
  for (const auto& s : sprites) {
    const int x0 = std::max(0, static_cast<int>(std::ceil(s.center.x() - radius)));
    const int x1 = std::min(cam.width - 1, static_cast<int>(std::floor(s.center.x() + radius)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(s.center.y() - radius)));
    const int y1 = std::min(cam.height - 1, static_cast<int>(std::floor(s.center.y() + radius)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - s.center.x(), dy = y - s.center.y();
        const double d2 = dx * dx + dy * dy;
        if (d2 > radius * radius) continue;
        const double w = std::exp(-d2 * inv_two_sigma_sq);
        frame(x, y) = static_cast<float>((1.0 - w) * frame(x, y) + w * s.intensity);
      }
  }
  return frame;
}

}  // namespace rinv
