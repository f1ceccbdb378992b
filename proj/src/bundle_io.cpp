#include <fstream>
#include <nlohmann/json.hpp>

#include "artkin/dataset.hpp"
#include "artkin/serialize.hpp"

namespace artkin {

using nlohmann::json;

nlohmann::json pose_to_json(const RigidTransform& t) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(t.rotation(r, c));
    a.push_back(t.translation(r));
  }
  return a;
}

RigidTransform pose_from_json(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 12)
    throw DataError(context + ": pose record must be 12 reals (row-major 3x4)");
  RigidTransform t;
  int k = 0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = j[k++].get<double>();
    t.translation(r) = j[k++].get<double>();
  }
  return t;
}

nlohmann::json joint_to_json(const JointModel& model) {
  json j;
  j["kind"] = model.kind == JointKind::kRevolute ? "revolute" : "prismatic";
  j["axis"] = {model.axis.direction.x(), model.axis.direction.y(), model.axis.direction.z()};
  if (model.kind == JointKind::kRevolute)
    j["pivot"] = {model.pivot.x(), model.pivot.y(), model.pivot.z()};
  else
    j["pivot"] = nullptr;
  j["states"] = model.states;
  return j;
}

JointModel joint_from_json(const json& j) {
  JointModel m;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "revolute")
    m.kind = JointKind::kRevolute;
  else if (kind == "prismatic")
    m.kind = JointKind::kPrismatic;
  else
    throw DataError("joint: unknown kind '" + kind + "'");
  const auto& ax = j.at("axis");
  if (!ax.is_array() || ax.size() != 3) throw DataError("joint: axis must be 3 reals");
  m.axis = UnitAxis::from(Vec3(ax[0].get<double>(), ax[1].get<double>(), ax[2].get<double>()));
  if (j.contains("pivot") && !j.at("pivot").is_null()) {
    const auto& pv = j.at("pivot");
    if (!pv.is_array() || pv.size() != 3) throw DataError("joint: pivot must be 3 reals");
    m.pivot = Vec3(pv[0].get<double>(), pv[1].get<double>(), pv[2].get<double>());
  }
  m.states = j.at("states").get<std::vector<double>>();
  return m;
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw DataError(msg);
}

template <typename T>
std::vector<T> fixed_array(const json& j, std::size_t n, const std::string& what) {
  require(j.is_array() && j.size() == n, what + ": expected array of length " + std::to_string(n));
  std::vector<T> out;
  out.reserve(n);
  for (const auto& v : j) out.push_back(v.get<T>());
  return out;
}

TrackedPoint parse_point(const json& jp, int n, const std::optional<CameraIntrinsics>& k) {
  TrackedPoint p;
  require(jp.contains("id"), "point: missing id");
  p.id = jp.at("id").get<int>();
  const std::string ctx = "point " + std::to_string(p.id);

  require(jp.contains("visibility"), ctx + ": missing visibility");
  p.visibility = fixed_array<double>(jp.at("visibility"), n, ctx + ".visibility");
  require(jp.contains("foreground"), ctx + ": missing foreground");
  auto fg = fixed_array<bool>(jp.at("foreground"), n, ctx + ".foreground");
  p.foreground.assign(fg.begin(), fg.end());

  if (jp.contains("feature") && !jp.at("feature").is_null()) {
    const auto& f = jp.at("feature");
    require(f.is_array(), ctx + ".feature: expected array");
    p.feature.resize(static_cast<Eigen::Index>(f.size()));
    for (Eigen::Index i = 0; i < p.feature.size(); ++i)
      p.feature(i) = f[static_cast<std::size_t>(i)].get<double>();
  }

  const bool has_xyz = jp.contains("xyz");
  const bool has_uv = jp.contains("uv") || jp.contains("depth");
  require(!(has_xyz && has_uv), ctx + ": mixed 2D and 3D position data");
  if (has_xyz) {
    const auto& xyz = jp.at("xyz");
    require(xyz.is_array() && xyz.size() == static_cast<std::size_t>(n),
            ctx + ".xyz: expected " + std::to_string(n) + " rows");
    for (const auto& row : xyz) {
      require(row.is_array() && row.size() == 3, ctx + ".xyz: rows must be 3 reals");
      p.positions.emplace_back(row[0].get<double>(), row[1].get<double>(), row[2].get<double>());
    }
  } else {
    require(jp.contains("uv") && jp.contains("depth"), ctx + ": needs xyz, or uv plus depth");
    require(k.has_value(), ctx + ": 2D tracks require intrinsics");
    const auto& uv = jp.at("uv");
    require(uv.is_array() && uv.size() == static_cast<std::size_t>(n),
            ctx + ".uv: expected " + std::to_string(n) + " rows");
    auto depth = fixed_array<double>(jp.at("depth"), n, ctx + ".depth");
    int t = 0;
    for (const auto& row : uv) {
      require(row.is_array() && row.size() == 2, ctx + ".uv: rows must be 2 reals");
      p.positions.push_back(lift_to_3d(row[0].get<double>(), row[1].get<double>(), depth[t], *k));
      ++t;
    }
  }
  p.valid.assign(n, 1);
  return p;
}

GroundTruth parse_ground_truth(const json& jg, int n, int point_count) {
  GroundTruth gt;
  gt.labels = fixed_array<int>(jg.at("labels"), point_count, "ground_truth.labels");
  const auto& poses = jg.at("poses");
  require(poses.is_array() && poses.size() == static_cast<std::size_t>(n),
          "ground_truth.poses: expected " + std::to_string(n) + " records");
  for (const auto& rec : poses) {
    require(rec.is_array() && rec.size() == 2, "ground_truth.poses: records must hold 2 parts");
    gt.poses.push_back({pose_from_json(rec[0], "ground_truth.poses"),
                        pose_from_json(rec[1], "ground_truth.poses")});
  }
  gt.joint = joint_from_json(jg.at("joint"));
  if (jg.contains("injections")) {
    for (const auto& ji : jg.at("injections")) {
      gt.injections.push_back({ji.at("point").get<int>(), ji.at("frame").get<int>(),
                               ji.at("type").get<std::string>()});
    }
  }
  return gt;
}

}  // namespace

SceneDataset load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_bundle: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("load_bundle: " + path + ": " + e.what());
  }

  SceneDataset scene;
  require(j.contains("frame_count"), "bundle: missing frame_count");
  const int n = j.at("frame_count").get<int>();
  require(n >= 2, "bundle: frame_count must be >= 2");
  scene.tracks.frame_count = n;

  if (j.contains("intrinsics") && !j.at("intrinsics").is_null()) {
    const auto& ji = j.at("intrinsics");
    CameraIntrinsics k{ji.at("fx").get<double>(), ji.at("fy").get<double>(),
                       ji.at("cx").get<double>(), ji.at("cy").get<double>()};
    require(k.fx > 0 && k.fy > 0, "intrinsics: focal lengths must be > 0");
    scene.tracks.intrinsics = k;
  }

  require(j.contains("points") && j.at("points").is_array(), "bundle: missing points array");
  for (const auto& jp : j.at("points"))
    scene.tracks.points.push_back(parse_point(jp, n, scene.tracks.intrinsics));
  require(!scene.tracks.points.empty(), "bundle: no points");

  const Eigen::Index d = scene.tracks.points.front().feature.size();
  for (const auto& p : scene.tracks.points)
    require(p.feature.size() == d, "bundle: inconsistent feature dimensions across points");

  if (j.contains("ground_truth") && !j.at("ground_truth").is_null())
    scene.ground_truth = parse_ground_truth(j.at("ground_truth"), n, scene.tracks.point_count());
  return scene;
}

void save_bundle(const SceneDataset& scene, const std::string& path) {
  const auto& ts = scene.tracks;
  json j;
  j["frame_count"] = ts.frame_count;
  if (ts.intrinsics) {
    j["intrinsics"] = {{"fx", ts.intrinsics->fx},
                       {"fy", ts.intrinsics->fy},
                       {"cx", ts.intrinsics->cx},
                       {"cy", ts.intrinsics->cy}};
  } else {
    j["intrinsics"] = nullptr;
  }
  json pts = json::array();
  for (const auto& p : ts.points) {
    json jp;
    jp["id"] = p.id;
    if (p.feature.size() > 0) {
      json f = json::array();
      for (Eigen::Index i = 0; i < p.feature.size(); ++i) f.push_back(p.feature(i));
      jp["feature"] = f;
    }
    jp["visibility"] = p.visibility;
    json fg = json::array();
    for (char b : p.foreground) fg.push_back(static_cast<bool>(b));
    jp["foreground"] = fg;
    json xyz = json::array();
    for (const auto& x : p.positions) xyz.push_back({x.x(), x.y(), x.z()});
    jp["xyz"] = xyz;
    pts.push_back(std::move(jp));
  }
  j["points"] = std::move(pts);

  if (scene.ground_truth) {
    const auto& gt = *scene.ground_truth;
    json jg;
    jg["labels"] = gt.labels;
    json poses = json::array();
    for (const auto& rec : gt.poses)
      poses.push_back({pose_to_json(rec[0]), pose_to_json(rec[1])});
    jg["poses"] = std::move(poses);
    jg["joint"] = joint_to_json(gt.joint);
    json inj = json::array();
    for (const auto& r : gt.injections)
      inj.push_back({{"point", r.point_id}, {"frame", r.frame}, {"type", r.type}});
    jg["injections"] = std::move(inj);
    j["ground_truth"] = std::move(jg);
  }

  std::ofstream out(path);
  if (!out) throw DataError("save_bundle: cannot write " + path);
  out << j.dump(1, '\t') << "\n";
}

}  // namespace artkin
