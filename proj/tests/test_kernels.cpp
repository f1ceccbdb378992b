#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "artkin/kernels.hpp"
#include "artkin/part_solver.hpp"

using namespace artkin;

namespace {

std::vector<Vec3> random_cloud(int n, unsigned seed, double scale = 0.4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = Vec3(g(rng), g(rng), g(rng));
  return out;
}

struct PairData {
  std::vector<Vec3> x0, xt;
  std::vector<unsigned char> valid;
  std::vector<double> logits, w0;
  NeighborGraph graph;
  RigidTransform t0, t1;
  PairLossConfig cfg;
};

PairData random_pair(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  PairData d;
  d.x0 = random_cloud(n, seed + 1);
  d.xt = random_cloud(n, seed + 2);
  d.valid.assign(n, 1);
  for (int p = 0; p < n; ++p)
    if (g(rng) > 1.2) d.valid[p] = 0;
  d.logits.resize(n);
  d.w0.resize(n);
  for (int p = 0; p < n; ++p) {
    d.logits[p] = 1.5 * g(rng);
    d.w0[p] = g(rng) > 0 ? 0.95 : 0.05;
  }
  d.t0 = {so3_exp(0.2 * Vec3(g(rng), g(rng), g(rng))), 0.1 * Vec3(g(rng), g(rng), g(rng))};
  d.t1 = {so3_exp(0.2 * Vec3(g(rng), g(rng), g(rng))), 0.1 * Vec3(g(rng), g(rng), g(rng))};
  // small random symmetric graph
  d.graph.offsets.assign(n + 1, 0);
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> au(0.1, 1.0);
  for (int e = 0; e < 3 * n; ++e) {
    const int a = pick(rng), b = pick(rng);
    if (a == b) continue;
    const double alpha = au(rng);
    bool dup = false;
    for (const auto& [q, _] : adj[a])
      if (q == b) dup = true;
    if (dup) continue;
    adj[a].push_back({b, alpha});
    adj[b].push_back({a, alpha});
  }
  for (int p = 0; p < n; ++p) {
    std::sort(adj[p].begin(), adj[p].end());
    d.graph.offsets[p + 1] = d.graph.offsets[p] + static_cast<int>(adj[p].size());
    for (const auto& [q, a] : adj[p]) {
      d.graph.neighbors.push_back(q);
      d.graph.alpha.push_back(a);
    }
  }
  return d;
}

}  // namespace

TEST_CASE("pair loss: serial and parallel paths are bitwise identical") {
  for (unsigned seed : {11u, 12u, 13u}) {
    const PairData d = random_pair(257, seed);
    const int n = 257;
    std::vector<double> gl_s(n), gl_p(n);
    double g0_s[6], g1_s[6], g0_p[6], g1_p[6];
    const auto bs = pair_loss(d.x0.data(), d.xt.data(), d.valid.data(), n, d.t0, d.t1,
                              d.logits.data(), d.w0.data(), d.graph.view(), d.cfg, gl_s.data(),
                              g0_s, g1_s, false);
    const auto bp = pair_loss(d.x0.data(), d.xt.data(), d.valid.data(), n, d.t0, d.t1,
                              d.logits.data(), d.w0.data(), d.graph.view(), d.cfg, gl_p.data(),
                              g0_p, g1_p, true);
    CHECK(bs.total == bp.total);
    CHECK(bs.main == bp.main);
    CHECK(bs.ent == bp.ent);
    CHECK(bs.smooth == bp.smooth);
    CHECK(bs.init == bp.init);
    for (int p = 0; p < n; ++p) CHECK(gl_s[p] == gl_p[p]);
    for (int j = 0; j < 6; ++j) {
      CHECK(g0_s[j] == g0_p[j]);
      CHECK(g1_s[j] == g1_p[j]);
    }
  }
}

TEST_CASE("refine objective: serial and parallel paths are bitwise identical") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  const int frames = 9, pts = 40;

  JointModel model;
  model.kind = JointKind::kRevolute;
  model.axis = UnitAxis::from(Vec3(0.2, 0.9, -0.1));
  model.pivot = Vec3(0.1, 0, 0);
  model.pivot -= model.axis.direction.dot(model.pivot) * model.axis.direction;
  for (int i = 0; i < frames; ++i) model.states.push_back(0.1 * i);

  std::vector<Vec3> canonical = random_cloud(pts, 31);
  std::vector<double> w_ref(pts);
  for (auto& w : w_ref) w = g(rng) > 0 ? 0.9 : 0.1;
  std::vector<Vec3> obs(frames * pts);
  std::vector<unsigned char> ov(frames * pts, 1);
  std::vector<RigidTransform> poses(frames);
  std::vector<unsigned char> fv(frames, 1);
  for (int i = 0; i < frames; ++i) {
    poses[i] = {so3_exp(0.05 * Vec3(g(rng), g(rng), g(rng))),
                0.02 * Vec3(g(rng), g(rng), g(rng))};
    for (int p = 0; p < pts; ++p)
      obs[i * pts + p] = random_cloud(1, 1000 + i * pts + p)[0];
  }

  RefineProblemView view;
  view.canonical = canonical.data();
  view.w_ref = w_ref.data();
  view.point_count = pts;
  view.obs = obs.data();
  view.obs_valid = ov.data();
  view.frame_count = frames;
  view.ref_poses = poses.data();
  view.frame_valid = fv.data();
  view.loss = RobustLoss::huber(0.05);

  const auto gs = refine_objective_grad(view, model, true, false);
  const auto gp = refine_objective_grad(view, model, true, true);
  CHECK(gs.objective == gp.objective);
  CHECK(gs.g_axis == gp.g_axis);
  CHECK(gs.g_pivot == gp.g_pivot);
  for (int i = 0; i < frames; ++i) {
    CHECK(gs.g_states[i] == gp.g_states[i]);
    CHECK(gs.g_poses[i] == gp.g_poses[i]);
  }
  CHECK(refine_objective(view, model, false) == refine_objective(view, model, true));
}

TEST_CASE("chamfer grid path equals the quadratic scan exactly") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> size(1, 600);
  for (int trial = 0; trial < 25; ++trial) {
    const auto a = random_cloud(size(rng), 100 + trial);
    const auto b = random_cloud(size(rng), 200 + trial);
    CHECK(chamfer_forward(a, b, false) == chamfer_forward_bruteforce(a, b));
    CHECK(chamfer_forward(a, b, true) == chamfer_forward_bruteforce(a, b));
  }
  // clustered clouds stress the shell search
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_cloud(300, 300 + trial, 0.01);
    auto b = random_cloud(300, 400 + trial, 0.01);
    for (int i = 0; i < 100; ++i) b[i] += Vec3(5, 0, 0);
    CHECK(chamfer_forward(a, b, true) == chamfer_forward_bruteforce(a, b));
  }
  // degenerate: all target points identical
  std::vector<Vec3> one(40, Vec3(1, 2, 3));
  const auto q = random_cloud(17, 999);
  CHECK(chamfer_forward(q, one, true) == chamfer_forward_bruteforce(q, one));
}

TEST_CASE("axis scan finds the smallest quadratic direction") {
  // A = diag(5, 2, 0.01): minimum along z
  Mat3 a = Vec3(5.0, 2.0, 0.01).asDiagonal();
  const Vec3 u = axis_grid_scan(a, 100000, true);
  CHECK(std::abs(u.z()) > 0.9999);
  const Vec3 us = axis_grid_scan(a, 100000, false);
  CHECK(u == us);  // deterministic across serial/parallel
}
