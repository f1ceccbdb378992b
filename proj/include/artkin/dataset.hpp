#pragma once

#include <optional>
#include <string>
#include <vector>

#include "artkin/joint_model.hpp"
#include "artkin/trajectory.hpp"

namespace artkin {

struct InjectionRecord {
  int point_id = 0;
  int frame = 0;
  std::string type;  // "outlier" | "dropout"
};

/// Evaluation targets carried alongside a synthetic capture.
struct GroundTruth {
  std::vector<int> labels;                          // per point, 0 or 1
  std::vector<std::vector<RigidTransform>> poses;   // N x 2 part poses (part-to-camera)
  JointModel joint;                                 // canonical (frame-0 camera) frame
  std::vector<InjectionRecord> injections;
};

struct SceneDataset {
  TrackSet tracks;
  std::optional<GroundTruth> ground_truth;
};

/// Reads a trajectory bundle. 2D tracks with depth and intrinsics are lifted
/// to 3D on load; malformed documents raise DataError naming the offending
/// field or point record.
SceneDataset load_bundle(const std::string& path);

/// Writes a bundle; positions are stored as 3D regardless of how the scene
/// was originally expressed. Round-trips bit-exactly through load_bundle.
void save_bundle(const SceneDataset& scene, const std::string& path);

}  // namespace artkin
