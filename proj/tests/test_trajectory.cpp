#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "artkin/dataset.hpp"
#include "artkin/synth.hpp"

using namespace artkin;

namespace {

TrackedPoint make_point(int id, const std::vector<Vec3>& pos) {
  TrackedPoint p;
  p.id = id;
  p.positions = pos;
  const int n = static_cast<int>(pos.size());
  p.visibility.assign(n, 1.0);
  p.foreground.assign(n, 1);
  p.valid.assign(n, 1);
  p.feature = Eigen::VectorXd::Ones(2);
  return p;
}

TrackSet static_cloud(int points, int frames, double spacing = 0.01) {
  TrackSet ts;
  ts.frame_count = frames;
  for (int i = 0; i < points; ++i) {
    std::vector<Vec3> pos(frames, Vec3(i * spacing, (i % 3) * spacing, 1.0 + (i % 5) * spacing));
    ts.points.push_back(make_point(i, pos));
  }
  return ts;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("lift_to_3d pinhole formula") {
  const CameraIntrinsics k{500, 500, 320, 240};
  CHECK((lift_to_3d(320, 240, 1.0, k) - Vec3(0, 0, 1)).norm() == 0.0);
  CHECK((lift_to_3d(820, 240, 2.0, k) - Vec3(2, 0, 2)).norm() < 1e-12);
  CHECK_THROWS_AS(lift_to_3d(320, 240, 0.0, k), DataError);
}

TEST_CASE("lift then project recovers pixel and depth") {
  const CameraIntrinsics k{431.5, 412.0, 317.2, 243.9};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 640), v(0, 480), d(0.2, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double uu = u(rng), vv = v(rng), dd = d(rng);
    const Vec3 back = project_to_pixel(lift_to_3d(uu, vv, dd, k), k);
    CHECK(std::abs(back.x() - uu) < 1e-9);
    CHECK(std::abs(back.y() - vv) < 1e-9);
    CHECK(std::abs(back.z() - dd) < 1e-9);
  }
}

TEST_CASE("filter removes low-visibility points") {
  TrackSet ts = static_cloud(10, 5);
  for (auto& v : ts.points[3].visibility) v = 0.4;  // below tau_c = 0.5
  const TrackSet out = filter_tracks(ts, FilterConfig{});
  for (int t = 0; t < 5; ++t) CHECK(out.points[3].valid[t] == 0);
  for (int t = 0; t < 5; ++t) CHECK(out.points[4].valid[t] == 1);
}

TEST_CASE("filter excludes a teleporting step") {
  // ~static scene, one point jumps 1 m for one step
  TrackSet ts = static_cloud(101, 6, 0.001);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1e-4);
  for (auto& p : ts.points)
    for (auto& x : p.positions) x += Vec3(g(rng), g(rng), g(rng));
  ts.points[50].positions[3] += Vec3(1.0, 0, 0);  // arrives displaced at t=3

  FilterStats stats;
  const TrackSet out = filter_tracks(ts, FilterConfig{}, &stats);

  // oracle: recompute mu + 2 sigma over all steps directly
  std::vector<double> steps;
  for (const auto& p : ts.points)
    for (int t = 0; t + 1 < 6; ++t)
      steps.push_back((p.positions[t + 1] - p.positions[t]).norm());
  double mu = 0;
  for (double s : steps) mu += s;
  mu /= steps.size();
  double var = 0;
  for (double s : steps) var += (s - mu) * (s - mu);
  const double limit = mu + 2.0 * std::sqrt(var / steps.size());
  CHECK(stats.mu_v == doctest::Approx(mu).epsilon(1e-12));

  for (const auto& p : ts.points) {
    for (int t = 0; t + 1 < 6; ++t) {
      const double d = (p.positions[t + 1] - p.positions[t]).norm();
      const bool step_kept = out.points[p.id].valid[t] && out.points[p.id].valid[t + 1];
      if (d > limit) CHECK(!step_kept);
    }
  }
  // the teleport step itself is gone, everything else intact for that point
  CHECK(out.points[50].valid[2] == 0);
  CHECK(out.points[50].valid[3] == 0);
  CHECK(out.points[50].valid[0] == 1);
  CHECK(out.points[49].valid[3] == 1);
}

TEST_CASE("filter keeps a clean uniform-motion set unchanged") {
  TrackSet ts = static_cloud(20, 8);
  for (auto& p : ts.points)
    for (int t = 0; t < 8; ++t) p.positions[t] += Vec3(0.01 * t, 0, 0);
  const TrackSet out = filter_tracks(ts, FilterConfig{});
  for (const auto& p : out.points)
    for (int t = 0; t < 8; ++t) CHECK(p.valid[t] == 1);
}

TEST_CASE("filter is idempotent and never re-validates") {
  TrackSet ts = static_cloud(40, 10, 0.002);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 5e-4);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& p : ts.points) {
    for (int t = 0; t < 10; ++t) {
      p.positions[t] += Vec3(g(rng), g(rng), g(rng));
      if (u(rng) < 0.1) p.visibility[t] = 0.3;
      if (u(rng) < 0.05) p.foreground[t] = 0;
      if (u(rng) < 0.03) p.positions[t] += Vec3(0.5, 0, 0);
    }
  }
  const TrackSet once = filter_tracks(ts, FilterConfig{});
  const TrackSet twice = filter_tracks(once, FilterConfig{});
  for (int p = 0; p < once.point_count(); ++p) {
    for (int t = 0; t < 10; ++t) {
      CHECK(once.points[p].valid[t] == twice.points[p].valid[t]);
      CHECK(once.points[p].valid[t] <= ts.points[p].valid[t]);
    }
  }
}

TEST_CASE("filter requires six surviving points") {
  TrackSet ts = static_cloud(7, 4);
  for (int i = 0; i < 2; ++i)
    for (auto& v : ts.points[i].visibility) v = 0.0;
  CHECK_THROWS_AS(filter_tracks(ts, FilterConfig{}), DataError);
}

TEST_CASE("bundle round trip is bitwise exact") {
  SceneSpec spec = preset("drawer-like");
  spec.frame_count = 10;
  spec.joint.states.assign(10, 0.0);
  for (int i = 0; i < 10; ++i) spec.joint.states[i] = 0.12 * i / 9.0;
  spec.part_points = {30, 30};
  spec.seed = 77;
  const SceneDataset scene = generate_scene(spec);

  const std::string path = temp_path("artkin_roundtrip.json");
  save_bundle(scene, path);
  const SceneDataset loaded = load_bundle(path);

  REQUIRE(loaded.tracks.point_count() == scene.tracks.point_count());
  CHECK(loaded.tracks.frame_count == scene.tracks.frame_count);
  for (int p = 0; p < scene.tracks.point_count(); ++p) {
    const auto& a = scene.tracks.points[p];
    const auto& b = loaded.tracks.points[p];
    CHECK(a.id == b.id);
    CHECK(a.feature == b.feature);
    for (int t = 0; t < scene.tracks.frame_count; ++t) {
      CHECK(a.positions[t] == b.positions[t]);  // bitwise
      CHECK(a.visibility[t] == b.visibility[t]);
      CHECK(a.foreground[t] == b.foreground[t]);
    }
  }
  REQUIRE(loaded.ground_truth.has_value());
  const auto& ga = *scene.ground_truth;
  const auto& gb = *loaded.ground_truth;
  CHECK(ga.labels == gb.labels);
  for (int i = 0; i < scene.tracks.frame_count; ++i) {
    for (int k = 0; k < 2; ++k) {
      CHECK(ga.poses[i][k].rotation == gb.poses[i][k].rotation);
      CHECK(ga.poses[i][k].translation == gb.poses[i][k].translation);
    }
  }
  CHECK(ga.joint.states == gb.joint.states);
  std::remove(path.c_str());

  // save -> load -> save is byte-identical
  const std::string path2 = temp_path("artkin_roundtrip2.json");
  save_bundle(loaded, path2);
  save_bundle(scene, path);
  std::ifstream f1(path), f2(path2);
  const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("2D bundles are lifted on load") {
  const CameraIntrinsics k{500, 450, 320, 240};
  nlohmann::json j;
  j["frame_count"] = 3;
  j["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
  nlohmann::json pts = nlohmann::json::array();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(10, 600), v(10, 460), d(0.5, 3.0);
  std::vector<std::array<double, 9>> raw;
  for (int p = 0; p < 8; ++p) {
    nlohmann::json jp;
    jp["id"] = p;
    jp["feature"] = {1.0};
    jp["visibility"] = {1.0, 1.0, 1.0};
    jp["foreground"] = {true, true, true};
    std::array<double, 9> r{};
    nlohmann::json uv = nlohmann::json::array(), depth = nlohmann::json::array();
    for (int t = 0; t < 3; ++t) {
      r[3 * t] = u(rng);
      r[3 * t + 1] = v(rng);
      r[3 * t + 2] = d(rng);
      uv.push_back({r[3 * t], r[3 * t + 1]});
      depth.push_back(r[3 * t + 2]);
    }
    raw.push_back(r);
    jp["uv"] = uv;
    jp["depth"] = depth;
    pts.push_back(jp);
  }
  j["points"] = pts;
  const std::string path = temp_path("artkin_2d.json");
  std::ofstream(path) << j.dump();
  const SceneDataset scene = load_bundle(path);
  for (int p = 0; p < 8; ++p) {
    for (int t = 0; t < 3; ++t) {
      const Vec3 expect =
          lift_to_3d(raw[p][3 * t], raw[p][3 * t + 1], raw[p][3 * t + 2], k);  // independent pass
      CHECK((scene.tracks.points[p].positions[t] - expect).norm() == 0.0);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("schema errors name the problem") {
  const std::string path = temp_path("artkin_bad.json");

  std::ofstream(path) << R"({"points": []})";
  CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("frame_count"), DataError);

  std::ofstream(path) << R"({"frame_count": 2, "points": [
    {"id": 0, "visibility": [1,1], "foreground": [true,true],
     "xyz": [[0,0,1],[0,0,1]], "uv": [[0,0],[0,0]], "depth": [1,1]}]})";
  CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("mixed"), DataError);

  std::ofstream(path) << R"({"frame_count": 2, "points": [
    {"id": 3, "visibility": [1], "foreground": [true,true], "xyz": [[0,0,1],[0,0,1]]}]})";
  CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("visibility"), DataError);

  std::remove(path.c_str());
}
