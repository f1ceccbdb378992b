#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "artkin/geometry.hpp"

namespace artkin {

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
};

/// One dense trajectory: a 3D position per frame plus per-sample metadata.
/// `valid` is the working mask maintained by the filter stage; samples are
/// masked rather than deleted so point ids and frame indices stay stable.
struct TrackedPoint {
  int id = 0;
  std::vector<Vec3> positions;       // N, meters
  std::vector<double> visibility;    // N, in [0,1]
  std::vector<char> foreground;      // N
  std::vector<char> valid;           // N, all true on load
  Eigen::VectorXd feature;           // D >= 1, empty when the bundle has none
};

struct TrackSet {
  int frame_count = 0;
  std::vector<TrackedPoint> points;
  std::optional<CameraIntrinsics> intrinsics;

  bool has_features() const {
    return !points.empty() && points.front().feature.size() > 0;
  }
  int point_count() const { return static_cast<int>(points.size()); }
};

struct FilterConfig {
  double tau_c = 0.5;  // visibility threshold
  double tau_v = 2.0;  // displacement sigma multiplier
};

struct FilterStats {
  double mu_v = 0;     // mean per-step displacement over the visibility-consistent set
  double sigma_v = 0;  // std of per-step displacement norms over the same set
  int removed_samples = 0;
  int surviving_points = 0;
};

/// Pinhole back-projection: ((u-cx)*d/fx, (v-cy)*d/fy, d). Depth must be > 0.
Vec3 lift_to_3d(double u, double v, double depth, const CameraIntrinsics& k);

/// Pinhole projection, the inverse of lift_to_3d. Returns (u, v, depth).
Vec3 project_to_pixel(const Vec3& x, const CameraIntrinsics& k);

/// Applies the visibility / foreground / displacement filters and returns the
/// track set with its per-sample valid mask updated (intersected with the
/// input mask, so filtering is idempotent and never re-validates a sample).
///
/// A step (t, t+1) of point p belongs to the visibility-consistent set when
/// visibility(t) > tau_c and the point is in the foreground at t and t+1.
/// Steps of that set whose displacement exceeds mu_v + tau_v * sigma_v have
/// both endpoint samples invalidated. The statistics are computed once, over
/// the visibility-consistent set only.
TrackSet filter_tracks(const TrackSet& raw, const FilterConfig& cfg,
                       FilterStats* stats = nullptr);

}  // namespace artkin
