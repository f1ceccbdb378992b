#pragma once

#include <optional>
#include <string>
#include <vector>

#include "artkin/dataset.hpp"
#include "artkin/joint_estimator.hpp"

namespace artkin {

struct MetricsReport {
  std::string scene_id;
  std::string kind;  // predicted joint kind
  bool kind_match = true;
  double axis_deg = 0;
  std::optional<double> position_cm;  // revolute only
  std::optional<double> state_mae;    // deg (revolute) or cm (prismatic)
  std::string state_unit;
  std::optional<double> cd_w, cd_m, cd_s;  // cm
  std::optional<double> miou;
  std::vector<double> per_frame_state_error;
};

/// Angle between axis lines in degrees, in [0, 90] (direction sign folded).
double axis_error_deg(const UnitAxis& u, const UnitAxis& u_gt);

/// Distance from the ground-truth pivot to the predicted axis line, in cm.
/// The ground-truth axis direction does not enter the distance; it is kept
/// in the signature because revolute comparisons always carry both.
double position_error_cm(const Vec3& pivot, const UnitAxis& axis, const Vec3& pivot_gt,
                         const UnitAxis& axis_gt);

/// Mean absolute state difference over the masked frames after re-basing to
/// frame 0, minimized over the global sign flip. Degrees for revolute,
/// centimeters for prismatic.
double state_error_mae(const std::vector<double>& states, const std::vector<double>& states_gt,
                       JointKind kind, const std::vector<char>& frames,
                       std::vector<double>* per_frame = nullptr);

/// Symmetric l2 Chamfer distance in centimeters. The fast path matches the
/// quadratic scan exactly.
double chamfer_cm(const std::vector<Vec3>& a, const std::vector<Vec3>& b, bool parallel = true);
double chamfer_cm_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

/// Mean of the two per-part IoUs over all (frame, point) samples, maximized
/// over the global label flip.
double segmentation_miou(const std::vector<std::vector<char>>& masks,
                         const std::vector<int>& labels);

/// Full evaluation of a pipeline result against the scene's ground truth.
MetricsReport evaluate_scene(const std::string& scene_id, const SceneDataset& scene,
                             const std::vector<std::vector<char>>& masks,
                             const JointEstimate& estimate, bool parallel = true);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& r);

}  // namespace artkin
