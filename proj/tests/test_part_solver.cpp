#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "artkin/metrics.hpp"
#include "artkin/part_solver.hpp"
#include "artkin/synth.hpp"

using namespace artkin;

namespace {

TrackSet tracks_with_features(const std::vector<Eigen::VectorXd>& features) {
  TrackSet ts;
  ts.frame_count = 2;
  int id = 0;
  for (const auto& f : features) {
    TrackedPoint p;
    p.id = id++;
    p.positions.assign(2, Vec3(0, 0, 1));
    p.visibility.assign(2, 1.0);
    p.foreground.assign(2, 1);
    p.valid.assign(2, 1);
    p.feature = f;
    ts.points.push_back(std::move(p));
  }
  return ts;
}

// Exhaustive 2-means oracle: every point as first seed, farthest second,
// Lloyd to convergence, keep the lowest-inertia labeling.
std::vector<int> exhaustive_two_means(const std::vector<Eigen::VectorXd>& f) {
  const int n = static_cast<int>(f.size());
  std::vector<Eigen::VectorXd> nf = f;
  for (auto& v : nf)
    if (v.norm() > 1e-15) v.normalize();
  double best_inertia = std::numeric_limits<double>::infinity();
  std::vector<int> best_labels(n, 0);
  for (int first = 0; first < n; ++first) {
    int second = 0;
    double far = -1;
    for (int i = 0; i < n; ++i) {
      const double d = (nf[i] - nf[first]).norm();
      if (d > far) {
        far = d;
        second = i;
      }
    }
    Eigen::VectorXd c0 = nf[first], c1 = nf[second];
    std::vector<int> label(n, 0);
    for (int it = 0; it < 100; ++it) {
      int changes = 0;
      for (int i = 0; i < n; ++i) {
        const int want = (nf[i] - c0).squaredNorm() <= (nf[i] - c1).squaredNorm() ? 0 : 1;
        if (want != label[i]) {
          label[i] = want;
          ++changes;
        }
      }
      Eigen::VectorXd s0 = Eigen::VectorXd::Zero(nf[0].size()), s1 = s0;
      int n0 = 0, n1 = 0;
      for (int i = 0; i < n; ++i)
        (label[i] == 0 ? (s0 += nf[i], ++n0) : (s1 += nf[i], ++n1));
      if (n0) c0 = s0 / n0;
      if (n1) c1 = s1 / n1;
      if (!changes && it > 0) break;
    }
    double inertia = 0;
    for (int i = 0; i < n; ++i)
      inertia += (nf[i] - (label[i] == 0 ? c0 : c1)).squaredNorm();
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = label;
    }
  }
  return best_labels;
}

int agreement_up_to_flip(const std::vector<int>& a, const std::vector<int>& b) {
  int direct = 0, flipped = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    direct += a[i] == b[i] ? 1 : 0;
    flipped += a[i] == 1 - b[i] ? 1 : 0;
  }
  return std::max(direct, flipped);
}

SolverConfig quick_config(std::uint64_t seed = 0) {
  SolverConfig cfg;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("feature init matches the exhaustive 2-means oracle on separated clusters") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 8;
    Eigen::VectorXd c0(d), c1(d);
    for (int i = 0; i < d; ++i) {
      c0(i) = g(rng);
      c1(i) = g(rng);
    }
    c0.normalize();
    c1 = (c0 + 1.0 * c1).normalized();  // distinct directions
    const double sigma = (c1 - c0).norm() / 10.0;  // separation >= 10 sigma
    std::vector<Eigen::VectorXd> feats;
    std::vector<int> gen_label;
    for (int i = 0; i < 60; ++i) {
      Eigen::VectorXd f = (i % 2 == 0) ? c0 : c1;
      for (int k = 0; k < d; ++k) f(k) += sigma * g(rng);
      feats.push_back(f);
      gen_label.push_back(i % 2);
    }
    const TrackSet ts = tracks_with_features(feats);
    const InitWeights init = init_weights_from_features(ts, trial);
    CHECK(!init.degenerate_features);

    std::vector<int> got;
    for (double w : init.w0) got.push_back(w >= 0.5 ? 1 : 0);
    CHECK(agreement_up_to_flip(got, gen_label) == 60);
    CHECK(agreement_up_to_flip(got, exhaustive_two_means(feats)) == 60);
  }
}

TEST_CASE("feature init degenerate cases") {
  // one point: single cluster at w = 0.95
  const TrackSet one = tracks_with_features({Eigen::VectorXd::Ones(3)});
  const InitWeights iw = init_weights_from_features(one, 0);
  CHECK(iw.w0 == std::vector<double>{0.95});

  // identical features: uniform 0.5 with the flag set
  std::vector<Eigen::VectorXd> same(10, Eigen::VectorXd::Ones(4));
  const InitWeights is = init_weights_from_features(tracks_with_features(same), 0);
  CHECK(is.degenerate_features);
  for (double w : is.w0) CHECK(w == 0.5);
}

TEST_CASE("neighbor graph respects the cosine radius and symmetry") {
  // two orthogonal feature clusters: no cross-cluster edges
  std::vector<Eigen::VectorXd> feats;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(4);
    f(i < 5 ? 0 : 1) = 1.0;
    feats.push_back(f);
  }
  SolverConfig cfg = quick_config();
  NeighborGraph g = build_neighbor_graph(tracks_with_features(feats), cfg);
  for (int p = 0; p < 10; ++p) {
    for (int k = g.offsets[p]; k < g.offsets[p + 1]; ++k) {
      CHECK((p < 5) == (g.neighbors[k] < 5));
      CHECK(g.alpha[k] == doctest::Approx(1.0));
    }
  }
  CHECK(g.symmetric());

  // identical features: complete graph truncated to k, all alpha = 1
  std::vector<Eigen::VectorXd> same(20, Eigen::VectorXd::Ones(4));
  NeighborGraph gs = build_neighbor_graph(tracks_with_features(same), cfg);
  for (int p = 0; p < 20; ++p)
    CHECK(gs.offsets[p + 1] - gs.offsets[p] >= cfg.neighbor_k);
  for (double a : gs.alpha) CHECK(a == doctest::Approx(1.0));
  CHECK(gs.symmetric());
}

TEST_CASE("neighbor graph symmetry holds for random features") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  SolverConfig cfg = quick_config();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Eigen::VectorXd> feats;
    const int n = 5 + trial % 40;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd f(6);
      for (int k = 0; k < 6; ++k) f(k) = g(rng);
      feats.push_back(f);
    }
    CHECK(build_neighbor_graph(tracks_with_features(feats), cfg).symmetric());
  }
}

TEST_CASE("window loss closed-form values") {
  const int n = 13;
  std::vector<Vec3> x0, xt;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int i = 0; i < n; ++i) {
    x0.push_back(Vec3(g(rng), g(rng), g(rng) + 1.0));
    xt.push_back(x0.back() + Vec3(0.01, 0, 0));
  }
  const std::vector<char> valid(n, 1);
  NeighborGraph graph;
  graph.offsets.assign(n + 1, 0);
  SolverConfig cfg = quick_config();

  // w = 0.5 everywhere maximizes the entropy term at P ln 2
  const std::vector<double> half(n, 0.5), winit(n, 0.5);
  const auto b = window_loss(x0, xt, valid, RigidTransform::identity(),
                             RigidTransform::identity(), half, winit, graph, cfg);
  CHECK(b.ent == doctest::Approx(n * std::log(2.0)).epsilon(1e-12));

  // binary weights constant on each connected component zero the smooth term
  NeighborGraph comp;
  comp.offsets = {0, 1, 2, 3, 3};  // 0-1 edge, 1-0, 2-... build: edges (0,1) and (2,? none)
  comp.offsets = {0, 1, 2, 2, 2};
  comp.neighbors = {1, 0};
  comp.alpha = {0.8, 0.8};
  std::vector<Vec3> q0(4, Vec3(0, 0, 1)), qt(4, Vec3(0, 0, 1));
  std::vector<double> wbin = {0.95, 0.95, 0.05, 0.05};
  const auto b2 = window_loss(q0, qt, std::vector<char>(4, 1), RigidTransform::identity(),
                              RigidTransform::identity(), wbin, wbin, comp, quick_config());
  CHECK(b2.smooth == 0.0);
}

TEST_CASE("window loss vanishes on ground-truth transforms and binary weights") {
  SceneSpec spec = preset("laptop-like");
  spec.noise = NoiseSpec{};  // clean
  spec.frame_count = 8;
  spec.joint.states.assign(8, 0.0);
  for (int i = 0; i < 8; ++i) spec.joint.states[i] = (M_PI / 2) * i / 7.0;
  spec.part_points = {40, 40};
  spec.seed = 5;
  const SceneDataset scene = generate_scene(spec);
  const auto& gt = *scene.ground_truth;

  const int t = 5;
  std::vector<Vec3> x0, xt;
  std::vector<double> w;
  for (int p = 0; p < scene.tracks.point_count(); ++p) {
    x0.push_back(scene.tracks.points[p].positions[0]);
    xt.push_back(scene.tracks.points[p].positions[t]);
    w.push_back(gt.labels[p] == 1 ? 1.0 - 1e-9 : 1e-9);
  }
  const RigidTransform t0 = gt.poses[t][0].compose(gt.poses[0][0].inverse());
  const RigidTransform t1 = gt.poses[t][1].compose(gt.poses[0][1].inverse());
  NeighborGraph graph;
  graph.offsets.assign(x0.size() + 1, 0);
  const auto b = window_loss(x0, xt, std::vector<char>(x0.size(), 1), t0, t1, w, w, graph,
                             quick_config());
  CHECK(b.main < 1e-18);
}

TEST_CASE("window loss flip symmetry") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 17;
  std::vector<Vec3> x0, xt;
  std::vector<double> w, w0;
  for (int i = 0; i < n; ++i) {
    x0.push_back(Vec3(g(rng), g(rng), g(rng) + 2.0));
    xt.push_back(Vec3(g(rng), g(rng), g(rng) + 2.0));
    w.push_back(1.0 / (1.0 + std::exp(-g(rng))));
    w0.push_back(g(rng) > 0 ? 0.95 : 0.05);
  }
  RigidTransform t0{so3_exp(Vec3(0.1, -0.2, 0.05)), Vec3(0.02, 0, 0.01)};
  RigidTransform t1{so3_exp(Vec3(-0.05, 0.1, 0.2)), Vec3(0, 0.03, -0.01)};
  NeighborGraph graph;
  graph.offsets.assign(n + 1, 0);
  SolverConfig cfg = quick_config();

  const auto a = window_loss(x0, xt, std::vector<char>(n, 1), t0, t1, w, w0, graph, cfg);
  std::vector<double> wf, w0f;
  for (int i = 0; i < n; ++i) {
    wf.push_back(1.0 - w[i]);
    w0f.push_back(1.0 - w0[i]);
  }
  const auto bflip = window_loss(x0, xt, std::vector<char>(n, 1), t1, t0, wf, w0f, graph, cfg);
  CHECK(a.total == doctest::Approx(bflip.total).epsilon(1e-10));
}

TEST_CASE("window loss rejects NaN inputs by naming the term") {
  std::vector<Vec3> x0 = {Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1)};
  std::vector<Vec3> xt = x0;
  xt[0] = Vec3(std::numeric_limits<double>::quiet_NaN(), 0, 1);
  NeighborGraph graph;
  graph.offsets.assign(4, 0);
  CHECK_THROWS_WITH_AS(
      window_loss(x0, xt, std::vector<char>(3, 1), RigidTransform::identity(),
                  RigidTransform::identity(), std::vector<double>(3, 0.5),
                  std::vector<double>(3, 0.5), graph, quick_config()),
      doctest::Contains("main"), NumericError);
}

TEST_CASE("pair loss analytic gradients match finite differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 19;
  PairLossConfig cfg;

  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vec3> x0, xt;
    std::vector<unsigned char> valid(n, 1);
    std::vector<double> logits(n), w0(n);
    for (int i = 0; i < n; ++i) {
      x0.push_back(Vec3(g(rng), g(rng), g(rng) + 2.0));
      xt.push_back(x0.back() + 0.1 * Vec3(g(rng), g(rng), g(rng)));
      logits[i] = 1.2 * g(rng);
      w0[i] = g(rng) > 0 ? 0.95 : 0.05;
    }
    NeighborGraph graph;
    graph.offsets.assign(n + 1, 0);
    graph.offsets[2] = 0;  // sparse graph with a couple of edges
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    adj[0].push_back({5, 0.7});
    adj[5].push_back({0, 0.7});
    adj[3].push_back({8, 0.4});
    adj[8].push_back({3, 0.4});
    graph.offsets.assign(n + 1, 0);
    for (int p = 0; p < n; ++p) {
      graph.offsets[p + 1] = graph.offsets[p] + static_cast<int>(adj[p].size());
      for (auto& [q, a] : adj[p]) {
        graph.neighbors.push_back(q);
        graph.alpha.push_back(a);
      }
    }
    RigidTransform t0{so3_exp(0.3 * Vec3(g(rng), g(rng), g(rng))),
                      0.05 * Vec3(g(rng), g(rng), g(rng))};
    RigidTransform t1{so3_exp(0.3 * Vec3(g(rng), g(rng), g(rng))),
                      0.05 * Vec3(g(rng), g(rng), g(rng))};

    std::vector<double> gl(n);
    double g0[6], g1[6];
    pair_loss(x0.data(), xt.data(), valid.data(), n, t0, t1, logits.data(), w0.data(),
              graph.view(), cfg, gl.data(), g0, g1, false);

    auto value = [&](const RigidTransform& a, const RigidTransform& b,
                     const std::vector<double>& l) {
      return pair_loss(x0.data(), xt.data(), valid.data(), n, a, b, l.data(), w0.data(),
                       graph.view(), cfg, nullptr, nullptr, nullptr, false)
          .total;
    };
    const double h = 1e-6;
    auto check = [&](double analytic, double fd) {
      CHECK(std::abs(analytic - fd) <= 1e-4 * std::max({std::abs(analytic), std::abs(fd), 1e-4}));
    };
    for (int i = 0; i < n; ++i) {
      std::vector<double> lp = logits, lm = logits;
      lp[i] += h;
      lm[i] -= h;
      check(gl[i], (value(t0, t1, lp) - value(t0, t1, lm)) / (2 * h));
    }
    for (int j = 0; j < 6; ++j) {
      auto perturb = [&](const RigidTransform& t, double eps) {
        RigidTransform out = t;
        if (j < 3) {
          Vec3 w = Vec3::Zero();
          w(j) = eps;
          out.rotation = so3_exp(w) * t.rotation;
        } else {
          out.translation(j - 3) += eps;
        }
        return out;
      };
      check(g0[j], (value(perturb(t0, h), t1, logits) - value(perturb(t0, -h), t1, logits)) /
                       (2 * h));
      check(g1[j], (value(t0, perturb(t1, h), logits) - value(t0, perturb(t1, -h), logits)) /
                       (2 * h));
    }
  }
}

TEST_CASE("solve_window separates a clean revolute scene with correct init") {
  SceneSpec spec = preset("laptop-like");
  spec.noise = NoiseSpec{};
  spec.frame_count = 8;
  spec.joint.states.assign(8, 0.0);
  for (int i = 0; i < 8; ++i) spec.joint.states[i] = (M_PI / 3) * i / 7.0;
  spec.part_points = {50, 50};
  spec.seed = 13;
  const SceneDataset scene = generate_scene(spec);

  SolverConfig cfg = quick_config(13);
  const InitWeights init = init_weights_from_features(scene.tracks, cfg.seed);
  const NeighborGraph graph = build_neighbor_graph(scene.tracks, cfg);
  const WindowResult win = solve_window(scene.tracks, 0, 8, init.w0, graph, cfg);

  std::vector<std::vector<char>> masks;
  for (int i = 1; i < 8; ++i) {
    std::vector<char> m;
    for (double w : win.weights[i]) m.push_back(w >= 0.5 ? 1 : 0);
    masks.push_back(std::move(m));
  }
  CHECK(segmentation_miou(masks, scene.ground_truth->labels) == 1.0);
  CHECK(!win.single_part);

  for (const auto& trace : win.loss_trace) {
    REQUIRE(!trace.empty());
    CHECK(trace.back() <= trace.front() + 1e-12);
  }
}

TEST_CASE("solve_window flags a single-part window") {
  SceneSpec spec = preset("laptop-like");
  spec.noise = NoiseSpec{};
  spec.frame_count = 8;
  spec.joint.states.assign(8, 0.0);  // the lid never moves relative to the base
  spec.part_points = {60, 0};        // only one part observed
  spec.seed = 17;
  const SceneDataset scene = generate_scene(spec);

  SolverConfig cfg = quick_config(17);
  const InitWeights init = init_weights_from_features(scene.tracks, cfg.seed);
  const NeighborGraph graph = build_neighbor_graph(scene.tracks, cfg);
  const WindowResult win = solve_window(scene.tracks, 0, 8, init.w0, graph, cfg);
  CHECK(win.single_part);
}

TEST_CASE("solve_window keeps transforms near identity without motion") {
  SceneSpec spec = preset("laptop-like");
  spec.noise = NoiseSpec{};
  spec.reference_static = true;
  spec.frame_count = 8;
  spec.joint.states.assign(8, 0.0);
  spec.part_points = {40, 40};
  spec.seed = 19;
  const SceneDataset scene = generate_scene(spec);

  SolverConfig cfg = quick_config(19);
  const InitWeights init = init_weights_from_features(scene.tracks, cfg.seed);
  const NeighborGraph graph = build_neighbor_graph(scene.tracks, cfg);
  const WindowResult win = solve_window(scene.tracks, 0, 8, init.w0, graph, cfg);
  for (std::size_t k = 0; k < win.t0.size(); ++k) {
    CHECK(rotation_angle(win.t0[k].rotation) < 1e-6);
    CHECK(win.t0[k].translation.norm() < 1e-6);
    CHECK(rotation_angle(win.t1[k].rotation) < 1e-6);
    CHECK(win.t1[k].translation.norm() < 1e-6);
  }
}

TEST_CASE("weight propagation carries, fills, and aligns") {
  // 2 windows of 3 frames over 5 frames; point 3 unseen in the first window
  TrackSet ts;
  ts.frame_count = 5;
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int p = 0; p < 4; ++p) {
    TrackedPoint tp;
    tp.id = p;
    tp.positions.assign(5, Vec3(p, 0, 1));
    tp.visibility.assign(5, 1.0);
    tp.foreground.assign(5, 1);
    tp.valid.assign(5, 1);
    Eigen::VectorXd f(3);
    for (int k = 0; k < 3; ++k) f(k) = g(rng);
    tp.feature = f;
    ts.points.push_back(tp);
  }
  for (int t = 0; t < 3; ++t) ts.points[3].valid[t] = 0;  // unseen early
  ts.points[3].feature = ts.points[1].feature;            // twin of point 1

  WindowResult prev;
  prev.start = 0;
  prev.length = 3;
  prev.weights.assign(3, {0.9, 0.2, 0.7, 0.5});

  const auto w0 = propagate_weights(prev, ts, 2, 3);
  CHECK(w0[0] == 0.9);
  CHECK(w0[1] == 0.2);
  CHECK(w0[2] == 0.7);
  CHECK(w0[3] == doctest::Approx(0.2));  // inherited from its feature twin

  // all points persisting: exact copy
  TrackSet all = ts;
  for (int t = 0; t < 5; ++t) all.points[3].valid[t] = 1;
  const auto w0b = propagate_weights(prev, all, 2, 3);
  CHECK(w0b == std::vector<double>{0.9, 0.2, 0.7, 0.5});

  // injected flip across the boundary is undone by the alignment rule
  std::vector<double> flipped = {0.1, 0.8, 0.3, 0.5};
  const bool did = align_part_identity(prev.weights.back(), flipped, {0, 1, 2});
  CHECK(did);
  CHECK(flipped[0] == doctest::Approx(0.9));
  CHECK(flipped[1] == doctest::Approx(0.2));
}

TEST_CASE("propagation without shared points or features fails loudly") {
  TrackSet ts;
  ts.frame_count = 5;
  for (int p = 0; p < 3; ++p) {
    TrackedPoint tp;
    tp.id = p;
    tp.positions.assign(5, Vec3(p, 0, 1));
    tp.visibility.assign(5, 1.0);
    tp.foreground.assign(5, 1);
    tp.valid.assign(5, 0);  // nothing observed in the first window
    ts.points.push_back(tp);
  }
  WindowResult prev;
  prev.start = 0;
  prev.length = 3;
  prev.weights.assign(3, {0.9, 0.2, 0.7});
  CHECK_THROWS_AS(propagate_weights(prev, ts, 2, 3), DataError);
}

TEST_CASE("segment reaches high mIoU on a scissors-like scene") {
  SceneSpec spec = preset("scissors-like");
  spec.noise = NoiseSpec{0.0005, 0.0, 0.0, 0.5};
  spec.part_points = {120, 120};
  spec.seed = 29;
  const SceneDataset scene = generate_scene(spec);

  SolverConfig cfg = quick_config(29);
  const TrackSet tracks = filter_tracks(scene.tracks, FilterConfig{});
  const SegmentationResult seg = segment(tracks, cfg);
  CHECK(segmentation_miou(seg.masks, scene.ground_truth->labels) >= 0.95);
}

TEST_CASE("segment handles a static-base scene identically") {
  SceneSpec spec = preset("laptop-like");
  spec.reference_static = true;
  spec.noise = NoiseSpec{0.0005, 0.0, 0.0, 0.5};
  spec.frame_count = 24;
  spec.joint.states.assign(24, 0.0);
  for (int i = 0; i < 24; ++i) spec.joint.states[i] = (M_PI / 2) * i / 23.0;
  spec.part_points = {80, 80};
  spec.seed = 31;
  const SceneDataset scene = generate_scene(spec);

  const SegmentationResult seg = segment(filter_tracks(scene.tracks, FilterConfig{}),
                                         quick_config(31));
  CHECK(segmentation_miou(seg.masks, scene.ground_truth->labels) >= 0.95);
}

TEST_CASE("featureless bundles segment with the uniform fallback; ties go to part 1") {
  SceneSpec spec = preset("laptop-like");
  spec.noise = NoiseSpec{};
  spec.frame_count = 8;
  spec.joint.states.assign(8, 0.0);
  for (int i = 0; i < 8; ++i) spec.joint.states[i] = (M_PI / 3) * i / 7.0;
  spec.part_points = {40, 40};
  spec.seed = 37;
  SceneDataset scene = generate_scene(spec);
  for (auto& p : scene.tracks.points) p.feature.resize(0);

  const SegmentationResult seg = segment(scene.tracks, quick_config(37));
  CHECK(seg.degenerate_features);
  // frame-0 weights stay at the 0.5 seed and binarize to part 1 by the >= rule
  for (int p = 0; p < scene.tracks.point_count(); ++p) {
    CHECK(seg.weights[0][p] == 0.5);
    CHECK(seg.masks[0][p] == 1);
  }
}

TEST_CASE("segment is deterministic") {
  SceneSpec spec = preset("usb-like");
  spec.part_points = {60, 60};
  spec.frame_count = 15;
  spec.joint.states.assign(15, 0.0);
  for (int i = 0; i < 15; ++i) spec.joint.states[i] = 2.0 * i / 14.0;
  spec.seed = 41;
  const SceneDataset scene = generate_scene(spec);
  const TrackSet tracks = filter_tracks(scene.tracks, FilterConfig{});

  const SegmentationResult a = segment(tracks, quick_config(41));
  const SegmentationResult b = segment(tracks, quick_config(41));
  CHECK(a.weights == b.weights);
  CHECK(a.masks == b.masks);
}
