// Pinhole camera, angular pixel coordinates and the precomputed lookup image.
//
// Conventions: x grows rightward, y grows downward, azimuths are atan2(dy, dx)
// and theta is the angle between a pixel's ray and the optical axis.
#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "rinv/core.hpp"

namespace rinv {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

struct CameraModel {
  double focal_length_px = 100.0;
  Vec2 principal_point{0.0, 0.0};
  int width = 1;
  int height = 1;

  /// Throws ConfigError naming the first violated field.
  void validate() const {
    if (!(std::isfinite(focal_length_px) && focal_length_px > 0.0))
      throw ConfigError("camera.focal_length_px", "must be positive and finite");
    if (!principal_point.allFinite()) throw ConfigError("camera.principal_point", "must be finite");
    if (width < 1) throw ConfigError("camera.width", "must be >= 1");
    if (height < 1) throw ConfigError("camera.height", "must be >= 1");
  }

  /// Camera whose principal point sits at the image center.
  static CameraModel centered(double focal, int width, int height) {
    return CameraModel{focal, Vec2((width - 1) / 2.0, (height - 1) / 2.0), width, height};
  }
};

struct AngularCoords {
  double theta = 0.0;
  double phi = 0.0;
  bool valid = false;
};

enum class FoeSource { kAssumedPrincipalPoint, kFromTranslation, kEstimated };

inline const char* to_string(FoeSource s) {
  switch (s) {
    case FoeSource::kAssumedPrincipalPoint: return "assumed-principal-point";
    case FoeSource::kFromTranslation: return "from-translation";
    case FoeSource::kEstimated: return "estimated";
  }
  return "unknown";
}

inline FoeSource foe_source_from_string(const std::string& s) {
  if (s == "assumed-principal-point") return FoeSource::kAssumedPrincipalPoint;
  if (s == "from-translation") return FoeSource::kFromTranslation;
  if (s == "estimated") return FoeSource::kEstimated;
  throw ConfigError("foe.source", "unknown source '" + s + "'");
}

/// Focus of expansion (or contraction). May lie outside the image.
struct FoePoint {
  Vec2 position{0.0, 0.0};
  FoeSource source = FoeSource::kAssumedPrincipalPoint;

  static FoePoint principal_point(const CameraModel& cam) {
    return FoePoint{cam.principal_point, FoeSource::kAssumedPrincipalPoint};
  }
};

inline constexpr double kDefaultExclusionRadiusPx = 8.0;
inline constexpr double kRatioCosEpsilon = 1e-9;

struct Dir2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Dir2&, const Dir2&) = default;
};

/// Per-pixel expected flow direction about a FOE, valid for every static
/// scene and every translation speed.
///
/// `dir_valid` marks pixels outside the exclusion disk. `ratio_valid` is the
/// subset where the ratio dir.y / dir.x is finite (|cos| > 1e-9).
struct LookupImage {
  CameraModel camera;
  FoePoint foe;
  double exclusion_radius_px = kDefaultExclusionRadiusPx;
  Image<double> ratio;
  Image<Dir2> radial_dir;
  Mask dir_valid;
  Mask ratio_valid;

  int width() const noexcept { return camera.width; }
  int height() const noexcept { return camera.height; }

  friend bool operator==(const LookupImage& a, const LookupImage& b) {
    return a.camera.focal_length_px == b.camera.focal_length_px &&
           a.camera.principal_point == b.camera.principal_point && a.camera.width == b.camera.width &&
           a.camera.height == b.camera.height && a.foe.position == b.foe.position &&
           a.foe.source == b.foe.source && a.exclusion_radius_px == b.exclusion_radius_px &&
           a.ratio == b.ratio && a.radial_dir == b.radial_dir && a.dir_valid == b.dir_valid &&
           a.ratio_valid == b.ratio_valid;
  }
};

inline AngularCoords pixel_to_angles(const CameraModel& cam, const Vec2& pixel) {
  const double dx = pixel.x() - cam.principal_point.x();
  const double dy = pixel.y() - cam.principal_point.y();
  if (dx == 0.0 && dy == 0.0) return AngularCoords{0.0, 0.0, false};
  return AngularCoords{std::atan(std::hypot(dx, dy) / cam.focal_length_px), std::atan2(dy, dx), true};
}

/// Inverse of pixel_to_angles: r = f tan(theta) along azimuth phi.
inline Vec2 angles_to_pixel(const CameraModel& cam, double theta, double phi) {
  const double r = cam.focal_length_px * std::tan(theta);
  return cam.principal_point + Vec2(r * std::cos(phi), r * std::sin(phi));
}

struct Azimuth {
  double phi = 0.0;
  bool valid = false;
};

inline Azimuth azimuth_about(const FoePoint& foe, const Vec2& pixel) {
  const double dx = pixel.x() - foe.position.x();
  const double dy = pixel.y() - foe.position.y();
  if (dx == 0.0 && dy == 0.0) return Azimuth{0.0, false};
  return Azimuth{std::atan2(dy, dx), true};
}

inline Vec2 project(const CameraModel& cam, const Vec3& point_cam) {
  if (!(point_cam.z() > 1e-9)) throw Error(ErrorCode::kBehindCamera, "point has Z <= 1e-9");
  return cam.principal_point + cam.focal_length_px * Vec2(point_cam.x() / point_cam.z(), point_cam.y() / point_cam.z());
}

inline FoePoint foe_from_translation(const CameraModel& cam, const Vec3& t_dir) {
  if (!(std::abs(t_dir.z()) > 1e-6))
    throw Error(ErrorCode::kLateralMotion, "translation has no forward component; FOE at infinity");
  return FoePoint{cam.principal_point + cam.focal_length_px * Vec2(t_dir.x() / t_dir.z(), t_dir.y() / t_dir.z()),
                  FoeSource::kFromTranslation};
}

inline LookupImage synthesize_lookup(const CameraModel& cam, const FoePoint& foe,
                                     double exclusion_radius_px = kDefaultExclusionRadiusPx,
                                     const Exec& exec = {}) {
  cam.validate();
  if (!(exclusion_radius_px >= 0.0)) throw ConfigError("exclusion_radius_px", "must be >= 0");
  if (!foe.position.allFinite()) throw ConfigError("foe.position", "must be finite");

  LookupImage out;
  out.camera = cam;
  out.foe = foe;
  out.exclusion_radius_px = exclusion_radius_px;
  out.ratio = Image<double>(cam.width, cam.height, 0.0);
  out.radial_dir = Image<Dir2>(cam.width, cam.height);
  out.dir_valid = Mask(cam.width, cam.height, 0);
  out.ratio_valid = Mask(cam.width, cam.height, 0);

  const double ex = foe.position.x();
  const double ey = foe.position.y();
  for_rows(exec, cam.height, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      const double dy = y - ey;
      for (int x = 0; x < cam.width; ++x) {
        const double dx = x - ex;
        const double dist = std::hypot(dx, dy);
        if (dist == 0.0 || dist <= exclusion_radius_px) continue;
        const Dir2 dir{dx / dist, dy / dist};
        out.radial_dir(x, y) = dir;
        out.dir_valid(x, y) = 1;
        if (std::abs(dir.x) > kRatioCosEpsilon) {
          out.ratio(x, y) = dy / dx;
          out.ratio_valid(x, y) = 1;
        }
      }
    }
  });
  return out;
}

}  // namespace rinv
