#include "artkin/synth.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "artkin/rng.hpp"
#include "artkin/serialize.hpp"

namespace artkin {

namespace {

Vec3 sample_box(const Vec3& dims, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ax = dims.y() * dims.z(), ay = dims.x() * dims.z(), az = dims.x() * dims.y();
  const double total = 2.0 * (ax + ay + az);
  double pick = unit(rng) * total;
  int face = 0;
  for (double a : {ax, ax, ay, ay, az, az}) {
    if (pick < a) break;
    pick -= a;
    ++face;
  }
  face = std::min(face, 5);
  const double u = (unit(rng) - 0.5), v = (unit(rng) - 0.5);
  switch (face) {
    case 0: return {-0.5 * dims.x(), u * dims.y(), v * dims.z()};
    case 1: return {+0.5 * dims.x(), u * dims.y(), v * dims.z()};
    case 2: return {u * dims.x(), -0.5 * dims.y(), v * dims.z()};
    case 3: return {u * dims.x(), +0.5 * dims.y(), v * dims.z()};
    case 4: return {u * dims.x(), v * dims.y(), -0.5 * dims.z()};
    default: return {u * dims.x(), v * dims.y(), +0.5 * dims.z()};
  }
}

Vec3 sample_cylinder(double radius, double height, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lateral = 2.0 * M_PI * radius * height;
  const double caps = 2.0 * M_PI * radius * radius;
  if (unit(rng) * (lateral + caps) < lateral) {
    const double a = unit(rng) * 2.0 * M_PI;
    return {radius * std::cos(a), radius * std::sin(a), (unit(rng) - 0.5) * height};
  }
  const double a = unit(rng) * 2.0 * M_PI;
  const double r = radius * std::sqrt(unit(rng));
  const double z = unit(rng) < 0.5 ? -0.5 * height : 0.5 * height;
  return {r * std::cos(a), r * std::sin(a), z};
}

Vec3 sample_shape(const ShapeSpec& s, Rng& rng) {
  if (s.shape == PartShape::kCylinder) return sample_cylinder(s.dims.x(), s.dims.y(), rng);
  return sample_box(s.dims, rng);  // blade is a thin box
}

Vec3 gaussian3(Rng& rng, std::normal_distribution<double>& g) {
  const double a = g(rng), b = g(rng), c = g(rng);
  return {a, b, c};
}

std::vector<RigidTransform> random_walk(int n, const WalkSpec& walk, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const double srot = walk.sigma_rot_deg * M_PI / 180.0;
  std::vector<RigidTransform> poses(n);
  poses[0] = RigidTransform::identity();
  for (int i = 1; i < n; ++i) {
    const Vec3 dw = srot * gaussian3(rng, g);
    const Vec3 dt = walk.sigma_trans * gaussian3(rng, g);
    poses[i] = {project_so3(so3_exp(dw) * poses[i - 1].rotation),
                poses[i - 1].translation + dt};
  }
  return poses;
}

}  // namespace

SceneDataset generate_scene(const SceneSpec& spec) {
  const int n = spec.frame_count;
  if (n < 2) throw DataError("generate_scene: frame_count must be >= 2");
  if (static_cast<int>(spec.joint.states.size()) != n)
    throw DataError("generate_scene: joint states length must equal frame_count");
  if (spec.object_poses && static_cast<int>(spec.object_poses->size()) != n)
    throw DataError("generate_scene: object_poses length must equal frame_count");
  if (spec.joint.states[0] != 0.0)
    throw DataError("generate_scene: joint states must start at 0");
  for (const double r : {spec.noise.dropout_rate, spec.noise.outlier_rate})
    if (r < 0.0 || r > 1.0) throw DataError("generate_scene: rates must lie in [0,1]");

  // Canonical per-part point clouds.
  Rng geom_rng(sub_seed(spec.seed, 1));
  std::vector<Vec3> canonical;
  std::vector<int> labels;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < spec.part_points[k]; ++i) {
      canonical.push_back(spec.shape_offsets[k].apply(sample_shape(spec.shapes[k], geom_rng)));
      labels.push_back(k);
    }
  }
  const int n_pts = static_cast<int>(canonical.size());
  if (n_pts == 0) throw DataError("generate_scene: no points");

  // Object trajectory (reference-part base motion).
  std::vector<RigidTransform> base;
  if (spec.object_poses) {
    base = *spec.object_poses;
  } else if (spec.reference_static) {
    base.assign(n, RigidTransform::identity());
  } else {
    Rng walk_rng(sub_seed(spec.seed, 2));
    base = random_walk(n, spec.walk, walk_rng);
  }

  // Part poses. The reference part may carry a share of the joint motion
  // (scissors-style symmetric articulation); the relative transform between
  // the parts is the ground-truth joint either way.
  GroundTruth gt;
  gt.labels = labels;
  gt.joint = spec.joint;
  gt.poses.resize(n);
  for (int i = 0; i < n; ++i) {
    RigidTransform w0 = base[i];
    if (spec.symmetric_split != 0.0)
      w0 = w0.compose(joint_transform_at(spec.joint, -spec.symmetric_split * spec.joint.states[i]));
    const RigidTransform w1 = w0.compose(joint_transform(spec.joint, i));
    gt.poses[i] = {w0, w1};
  }

  // Features: two cluster centers separated in units of the feature noise.
  Rng feat_rng(sub_seed(spec.seed, 3));
  std::normal_distribution<double> g(0.0, 1.0);
  const int d = spec.feature.dimension;
  Eigen::VectorXd c0(d), dir(d);
  for (int i = 0; i < d; ++i) c0(i) = g(feat_rng);
  c0.normalize();
  for (int i = 0; i < d; ++i) dir(i) = g(feat_rng);
  dir -= dir.dot(c0) * c0;
  dir.normalize();
  const Eigen::VectorXd c1 =
      c0 + spec.feature.cluster_separation * spec.feature.noise_sigma * dir;

  SceneDataset scene;
  scene.tracks.frame_count = n;
  Rng noise_rng(sub_seed(spec.seed, 4));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int p = 0; p < n_pts; ++p) {
    TrackedPoint tp;
    tp.id = p;
    tp.feature = (labels[p] == 0 ? c0 : c1);
    for (int i = 0; i < d; ++i) tp.feature(i) += spec.feature.noise_sigma * g(feat_rng);

    tp.positions.resize(n);
    tp.visibility.assign(n, 1.0);
    tp.foreground.assign(n, 1);
    tp.valid.assign(n, 1);
    for (int i = 0; i < n; ++i) {
      const RigidTransform& pose = gt.poses[i][labels[p]];
      Vec3 x = pose.apply(canonical[p]);
      // Noise variates are always drawn so streams stay aligned across specs
      // that differ only in the noise magnitudes.
      const Vec3 eta = gaussian3(noise_rng, g);
      x += spec.noise.position_sigma * eta;
      if (unit(noise_rng) < spec.noise.dropout_rate) {
        tp.visibility[i] = 0.2;
        gt.injections.push_back({p, i, "dropout"});
      }
      if (unit(noise_rng) < spec.noise.outlier_rate) {
        Vec3 dirn = gaussian3(noise_rng, g);
        const double nn = dirn.norm();
        if (nn > 1e-12) x += spec.noise.outlier_magnitude * (dirn / nn);
        gt.injections.push_back({p, i, "outlier"});
      }
      tp.positions[i] = x;
    }
    scene.tracks.points.push_back(std::move(tp));
  }

  scene.ground_truth = std::move(gt);
  return scene;
}

namespace {

std::vector<double> ramp(int n, double to) {
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = to * static_cast<double>(i) / (n - 1);
  return s;
}

double deg(double x) { return x * M_PI / 180.0; }

RigidTransform placement(const Mat3& r, const Vec3& t) { return {r, t}; }

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"laptop-like", "scissors-like", "drawer-like",
                                                 "usb-like"};
  return names;
}

SceneSpec preset(const std::string& name) {
  SceneSpec s;
  s.frame_count = 60;
  s.noise = NoiseSpec{0.002, 0.05, 0.02, 0.5};
  s.feature = FeatureSpec{16, 6.0, 0.08};

  const Mat3 eye = Mat3::Identity();
  if (name == "laptop-like") {
    s.joint.kind = JointKind::kRevolute;
    s.joint.axis = UnitAxis::from(Vec3(0, 1, 0));
    s.joint.pivot = Vec3(0, 0, 1.2);  // hinge line along y through the spine
    s.joint.states = ramp(s.frame_count, deg(90));
    s.part_points = {220, 220};
    s.shapes[0] = {PartShape::kBox, Vec3(0.21, 0.30, 0.015)};
    s.shapes[1] = {PartShape::kBox, Vec3(0.20, 0.30, 0.008)};
    s.shape_offsets[0] = placement(eye, Vec3(0.105, 0, 1.2));
    s.shape_offsets[1] = placement(eye, Vec3(-0.105, 0, 1.2));
  } else if (name == "scissors-like") {
    s.joint.kind = JointKind::kRevolute;
    s.joint.axis = UnitAxis::from(Vec3(0, 0, 1));
    s.joint.pivot = Vec3::Zero();  // axis line through (0, 0, z)
    s.joint.states = ramp(s.frame_count, deg(50));
    s.symmetric_split = 0.5;
    s.part_points = {200, 200};
    s.shapes[0] = {PartShape::kBlade, Vec3(0.16, 0.015, 0.002)};
    s.shapes[1] = {PartShape::kBlade, Vec3(0.16, 0.015, 0.002)};
    const Mat3 rp = axis_angle_rotation(UnitAxis::from(Vec3(0, 0, 1)), deg(12));
    const Mat3 rm = axis_angle_rotation(UnitAxis::from(Vec3(0, 0, 1)), deg(-12));
    s.shape_offsets[0] = placement(rp, Vec3(0, 0, 1.1) + rp * Vec3(0.085, 0, 0));
    s.shape_offsets[1] = placement(rm, Vec3(0, 0, 1.1) + rm * Vec3(0.085, 0, 0));
  } else if (name == "drawer-like") {
    s.joint.kind = JointKind::kPrismatic;
    s.joint.axis = UnitAxis::from(Vec3(1, 0, 0));
    s.joint.states = ramp(s.frame_count, 0.12);
    s.part_points = {260, 200};
    s.shapes[0] = {PartShape::kBox, Vec3(0.40, 0.30, 0.30)};
    s.shapes[1] = {PartShape::kBox, Vec3(0.36, 0.26, 0.10)};
    s.shape_offsets[0] = placement(eye, Vec3(0, 0, 1.3));
    s.shape_offsets[1] = placement(eye, Vec3(0.01, 0, 1.22));
  } else if (name == "usb-like") {
    s.joint.kind = JointKind::kRevolute;
    s.joint.axis = UnitAxis::from(Vec3(0, 1, 0));
    s.joint.pivot = Vec3(0.0225, 0, 1.0);
    s.joint.states = ramp(s.frame_count, deg(120));
    s.part_points = {180, 180};
    s.shapes[0] = {PartShape::kBlade, Vec3(0.045, 0.012, 0.0045)};
    s.shapes[1] = {PartShape::kBlade, Vec3(0.040, 0.011, 0.003)};
    s.shape_offsets[0] = placement(eye, Vec3(0, 0, 1.0));
    s.shape_offsets[1] = placement(eye, Vec3(0.045, 0, 1.0));
  } else {
    std::string msg = "unknown preset '" + name + "'; available:";
    for (const auto& p : preset_names()) msg += " " + p;
    throw DataError(msg);
  }
  // Pivot convention: orthogonal to the axis (same line, canonical point).
  s.joint.pivot -= s.joint.axis.direction.dot(s.joint.pivot) * s.joint.axis.direction;
  return s;
}

SceneSpec scene_spec_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("scene spec: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scene spec: ") + e.what());
  }

  SceneSpec s;
  if (j.contains("preset")) {
    s = preset(j.at("preset").get<std::string>());
  }
  if (!j.contains("preset") && !j.contains("joint"))
    throw DataError("scene spec: missing field 'joint' (or 'preset')");

  if (j.contains("frame_count")) s.frame_count = j.at("frame_count").get<int>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("joint")) {
    const auto& jj = j.at("joint");
    JointModel m;
    const std::string kind = jj.at("kind").get<std::string>();
    if (kind == "revolute")
      m.kind = JointKind::kRevolute;
    else if (kind == "prismatic")
      m.kind = JointKind::kPrismatic;
    else
      throw DataError("scene spec: joint.kind must be revolute or prismatic");
    const auto& ax = jj.at("axis");
    if (!ax.is_array() || ax.size() != 3)
      throw DataError("scene spec: joint.axis must be 3 reals");
    m.axis = UnitAxis::from(Vec3(ax[0].get<double>(), ax[1].get<double>(), ax[2].get<double>()));
    if (jj.contains("pivot") && !jj.at("pivot").is_null()) {
      const auto& pv = jj.at("pivot");
      if (!pv.is_array() || pv.size() != 3)
        throw DataError("scene spec: joint.pivot must be 3 reals");
      m.pivot = Vec3(pv[0].get<double>(), pv[1].get<double>(), pv[2].get<double>());
      m.pivot -= m.axis.direction.dot(m.pivot) * m.axis.direction;
    }
    if (jj.contains("states"))
      m.states = jj.at("states").get<std::vector<double>>();
    else if (jj.contains("state_ramp_to"))
      m.states = ramp(s.frame_count, jj.at("state_ramp_to").get<double>());
    else
      throw DataError("scene spec: joint needs 'states' or 'state_ramp_to'");
    s.joint = m;
  } else if (j.contains("frame_count") && s.joint.states.size() != static_cast<std::size_t>(s.frame_count)) {
    // preset with overridden frame count: rebuild the ramp to the same range
    const double to = s.joint.states.empty() ? 0.0 : s.joint.states.back();
    s.joint.states = ramp(s.frame_count, to);
  }
  if (static_cast<int>(s.joint.states.size()) != s.frame_count)
    throw DataError("scene spec: joint.states length must equal frame_count");

  if (j.contains("noise")) {
    const auto& jn = j.at("noise");
    if (jn.contains("position_sigma")) s.noise.position_sigma = jn.at("position_sigma").get<double>();
    if (jn.contains("dropout_rate")) s.noise.dropout_rate = jn.at("dropout_rate").get<double>();
    if (jn.contains("outlier_rate")) s.noise.outlier_rate = jn.at("outlier_rate").get<double>();
    if (jn.contains("outlier_magnitude"))
      s.noise.outlier_magnitude = jn.at("outlier_magnitude").get<double>();
  }
  return s;
}

}  // namespace artkin
