#include "artkin/trajectory.hpp"

#include <cmath>

namespace artkin {

Vec3 lift_to_3d(double u, double v, double depth, const CameraIntrinsics& k) {
  if (!(depth > 0)) throw DataError("lift_to_3d: depth must be > 0");
  return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

Vec3 project_to_pixel(const Vec3& x, const CameraIntrinsics& k) {
  if (!(x.z() > 0)) throw DataError("project_to_pixel: depth must be > 0");
  return {x.x() / x.z() * k.fx + k.cx, x.y() / x.z() * k.fy + k.cy, x.z()};
}

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

TrackSet filter_tracks(const TrackSet& raw, const FilterConfig& cfg, FilterStats* stats) {
  if (raw.points.empty()) throw DataError("filter_tracks: empty track set");
  const int n = raw.frame_count;
  TrackSet out = raw;

  // Visibility-consistent step set; statistics depend only on the raw
  // visibility / foreground / position data, never on the valid mask, so a
  // second pass reproduces the same decisions.
  double sum = 0, sum_sq = 0;
  int count = 0;
  for (const auto& p : raw.points) {
    for (int t = 0; t + 1 < n; ++t) {
      if (!(p.visibility[t] > cfg.tau_c)) continue;
      if (!p.foreground[t] || !p.foreground[t + 1]) continue;
      if (!finite(p.positions[t]) || !finite(p.positions[t + 1])) continue;
      const double d = (p.positions[t + 1] - p.positions[t]).norm();
      sum += d;
      sum_sq += d * d;
      ++count;
    }
  }
  const double mu = count > 0 ? sum / count : 0.0;
  const double var = count > 0 ? std::max(0.0, sum_sq / count - mu * mu) : 0.0;
  const double sigma = std::sqrt(var);
  const double limit = mu + cfg.tau_v * sigma;

  int removed = 0;
  for (auto& p : out.points) {
    for (int t = 0; t < n; ++t) {
      const bool vis_ok = p.visibility[t] > cfg.tau_c && p.foreground[t];
      if (!vis_ok && p.valid[t]) {
        p.valid[t] = 0;
        ++removed;
      }
    }
    for (int t = 0; t + 1 < n; ++t) {
      if (!(p.visibility[t] > cfg.tau_c)) continue;
      if (!p.foreground[t] || !p.foreground[t + 1]) continue;
      if (!finite(p.positions[t]) || !finite(p.positions[t + 1])) continue;
      const double d = (p.positions[t + 1] - p.positions[t]).norm();
      if (d > limit) {
        // The offending displacement implicates both endpoint samples.
        for (int s : {t, t + 1}) {
          if (p.valid[s]) {
            p.valid[s] = 0;
            ++removed;
          }
        }
      }
    }
  }

  int surviving = 0;
  for (const auto& p : out.points) {
    int ok = 0;
    for (int t = 0; t < n; ++t) ok += p.valid[t] ? 1 : 0;
    if (ok >= 2) ++surviving;
  }
  if (stats) *stats = FilterStats{mu, sigma, removed, surviving};
  if (surviving < 6)
    throw DataError("filter_tracks: fewer than 6 points survive filtering");
  return out;
}

}  // namespace artkin
