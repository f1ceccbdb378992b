#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "artkin/dataset.hpp"

namespace artkin {

enum class PartShape { kBox, kCylinder, kBlade };

struct ShapeSpec {
  PartShape shape = PartShape::kBox;
  Vec3 dims = Vec3(0.1, 0.1, 0.1);  // box/blade extents; cylinder (radius, height, -)
};

struct NoiseSpec {
  double position_sigma = 0.0;    // meters
  double dropout_rate = 0.0;      // visibility set to 0.2
  double outlier_rate = 0.0;      // teleported samples
  double outlier_magnitude = 0.5; // meters
};

struct FeatureSpec {
  int dimension = 16;
  double cluster_separation = 6.0;  // in units of noise_sigma
  double noise_sigma = 0.08;
};

struct WalkSpec {
  double sigma_rot_deg = 2.0;  // per frame
  double sigma_trans = 0.01;   // meters per frame
};

/// Everything needed to generate one scene deterministically from the seed.
/// The canonical (object) frame coincides with the frame-0 camera frame, so
/// the ground-truth joint is directly comparable with the estimate.
struct SceneSpec {
  JointModel joint;  // ground truth; states sized to frame_count
  int frame_count = 60;
  std::array<int, 2> part_points = {200, 200};
  std::array<ShapeSpec, 2> shapes;
  std::array<RigidTransform, 2> shape_offsets;  // placement in the canonical frame
  std::optional<std::vector<RigidTransform>> object_poses;  // explicit trajectory
  WalkSpec walk;                 // used when object_poses is absent
  bool reference_static = false; // world-fixed reference part
  double symmetric_split = 0.0;  // share of joint motion carried by the reference part
  NoiseSpec noise;
  FeatureSpec feature;
  std::uint64_t seed = 0;
};

/// Deterministic generation: part points on the shapes, free 6-DoF object
/// motion, the joint motion on part 1, then noise / dropout / outliers with
/// an injection log in the ground truth.
SceneDataset generate_scene(const SceneSpec& spec);

/// Named scene templates: laptop-like, scissors-like, drawer-like, usb-like.
/// Presets carry the benchmark noise (2 mm position noise, 2% outliers,
/// 5% dropout); callers may zero it for clean-data tests.
SceneSpec preset(const std::string& name);

const std::vector<std::string>& preset_names();

/// SceneSpec JSON: used by the synth CLI `--spec` path.
SceneSpec scene_spec_from_json_file(const std::string& path);

}  // namespace artkin
