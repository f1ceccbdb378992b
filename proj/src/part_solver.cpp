#include "artkin/part_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "artkin/adam.hpp"
#include "artkin/rng.hpp"

namespace artkin {

namespace {

constexpr double kSoftLow = 0.05;
constexpr double kSoftHigh = 0.95;
constexpr double kSinglePartFraction = 0.95;

double logit(double w) {
  const double c = std::min(1.0 - 1e-7, std::max(1e-7, w));
  return std::log(c / (1.0 - c));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<Eigen::VectorXd> normalized_features(const TrackSet& tracks) {
  std::vector<Eigen::VectorXd> f;
  f.reserve(tracks.points.size());
  for (const auto& p : tracks.points) {
    Eigen::VectorXd v = p.feature;
    const double n = v.norm();
    if (n > 1e-15) v /= n;
    f.push_back(std::move(v));
  }
  return f;
}

}  // namespace

bool NeighborGraph::symmetric() const {
  const int n = static_cast<int>(offsets.size()) - 1;
  for (int p = 0; p < n; ++p) {
    for (int k = offsets[p]; k < offsets[p + 1]; ++k) {
      const int q = neighbors[k];
      bool found = false;
      for (int j = offsets[q]; j < offsets[q + 1]; ++j) {
        if (neighbors[j] == p) {
          if (std::abs(alpha[j] - alpha[k]) > 1e-12) return false;
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  }
  return true;
}

InitWeights init_weights_from_features(const TrackSet& tracks, std::uint64_t seed) {
  if (!tracks.has_features())
    throw DataError("init_weights_from_features: track set has no features");
  const int n = tracks.point_count();
  auto f = normalized_features(tracks);

  InitWeights out;
  out.w0.assign(n, kSoftHigh);
  if (n == 1) return out;

  double diameter = 0;
  for (int i = 1; i < n; ++i) diameter = std::max(diameter, (f[i] - f[0]).norm());
  if (diameter < 1e-12) {
    out.w0.assign(n, 0.5);
    out.degenerate_features = true;
    return out;
  }

  // 2-means, farthest-point seeding from the given seed.
  Rng rng(seed);
  const int first = static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
  int second = 0;
  double best = -1;
  for (int i = 0; i < n; ++i) {
    const double d = (f[i] - f[first]).norm();
    if (d > best) {
      best = d;
      second = i;
    }
  }
  Eigen::VectorXd c0 = f[first], c1 = f[second];
  std::vector<int> label(n, 0);
  for (int it = 0; it < 100; ++it) {
    int changes = 0;
    for (int i = 0; i < n; ++i) {
      const int want = (f[i] - c0).squaredNorm() <= (f[i] - c1).squaredNorm() ? 0 : 1;
      if (want != label[i]) {
        label[i] = want;
        ++changes;
      }
    }
    Eigen::VectorXd s0 = Eigen::VectorXd::Zero(f[0].size());
    Eigen::VectorXd s1 = s0;
    int n0 = 0, n1 = 0;
    for (int i = 0; i < n; ++i) {
      if (label[i] == 0) {
        s0 += f[i];
        ++n0;
      } else {
        s1 += f[i];
        ++n1;
      }
    }
    if (n0 > 0) c0 = s0 / n0;
    if (n1 > 0) c1 = s1 / n1;
    if (changes == 0 && it > 0) break;
  }

  // The cluster holding the first point is part 1 (w0 high).
  const int part1_cluster = label[0];
  for (int i = 0; i < n; ++i)
    out.w0[i] = label[i] == part1_cluster ? kSoftHigh : kSoftLow;
  return out;
}

NeighborGraph build_neighbor_graph(const TrackSet& tracks, const SolverConfig& cfg) {
  const int n = tracks.point_count();
  NeighborGraph g;
  if (!tracks.has_features()) {
    g.offsets.assign(n + 1, 0);
    return g;
  }
  auto f = normalized_features(tracks);

  std::vector<std::vector<std::pair<int, double>>> adj(n);  // (neighbor, alpha)
  std::vector<std::pair<double, int>> cand;
  for (int p = 0; p < n; ++p) {
    cand.clear();
    for (int q = 0; q < n; ++q) {
      if (q == p) continue;
      const double sim = f[p].dot(f[q]);
      const double dist = 1.0 - sim;
      if (dist <= cfg.neighbor_radius) cand.push_back({dist, q});
    }
    std::sort(cand.begin(), cand.end());
    const int keep = std::min<int>(cfg.neighbor_k, static_cast<int>(cand.size()));
    for (int k = 0; k < keep; ++k) {
      const int q = cand[k].second;
      adj[p].push_back({q, std::max(0.0, 1.0 - cand[k].first)});
    }
  }
  // Symmetrize by union.
  for (int p = 0; p < n; ++p) {
    for (const auto& [q, a] : adj[p]) {
      bool present = false;
      for (const auto& [r, _] : adj[q]) {
        if (r == p) {
          present = true;
          break;
        }
      }
      if (!present) adj[q].push_back({p, a});
    }
  }
  g.offsets.assign(n + 1, 0);
  for (int p = 0; p < n; ++p) {
    std::sort(adj[p].begin(), adj[p].end());
    g.offsets[p + 1] = g.offsets[p] + static_cast<int>(adj[p].size());
    for (const auto& [q, a] : adj[p]) {
      g.neighbors.push_back(q);
      g.alpha.push_back(a);
    }
  }
  return g;
}

std::pair<RigidTransform, RigidTransform> init_pair_transforms(
    const std::vector<Vec3>& x0, const std::vector<Vec3>& xt, const std::vector<int>& labels,
    const RegistrationConfig& cfg) {
  if (x0.size() != xt.size() || x0.size() != labels.size())
    throw DataError("init_pair_transforms: size mismatch");
  RigidTransform t[2];
  for (int k = 0; k < 2; ++k) {
    std::vector<Vec3> cx, cy;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      if (labels[i] == k) {
        cx.push_back(x0[i]);
        cy.push_back(xt[i]);
      }
    }
    RegistrationConfig sub = cfg;
    sub.seed = sub_seed(cfg.seed, static_cast<std::uint64_t>(k) + 7);
    t[k] = robust_register(cx, cy, sub);  // throws NumericError on degenerate class
  }
  return {t[0], t[1]};
}

WindowLossBreakdown window_loss(const std::vector<Vec3>& x0, const std::vector<Vec3>& xt,
                                const std::vector<char>& valid_pair, const RigidTransform& t0,
                                const RigidTransform& t1, const std::vector<double>& w_t,
                                const std::vector<double>& w_init, const NeighborGraph& graph,
                                const SolverConfig& cfg) {
  const int n = static_cast<int>(x0.size());
  std::vector<double> logits(n);
  for (int p = 0; p < n; ++p) logits[p] = logit(w_t[p]);
  std::vector<unsigned char> vp(valid_pair.begin(), valid_pair.end());
  const auto b = pair_loss(x0.data(), xt.data(), vp.data(), n, t0, t1, logits.data(),
                           w_init.data(), graph.view(), cfg.loss(), nullptr, nullptr, nullptr,
                           cfg.parallel);
  return {b.main, b.ent, b.smooth, b.init, b.total};
}

namespace {

// Bootstrap labels from motion alone when the seeded labels are single-class
// (featureless bundles or a degenerate clustering): register one transform to
// all points and split at the median residual.
std::vector<int> residual_split_labels(const std::vector<Vec3>& x0, const std::vector<Vec3>& xt,
                                       const RegistrationConfig& cfg) {
  const RigidTransform t = robust_register(x0, xt, cfg);
  std::vector<double> res(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) res[i] = (xt[i] - t.apply(x0[i])).norm();
  std::vector<double> sorted = res;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  std::vector<int> labels(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) labels[i] = res[i] > median ? 1 : 0;
  return labels;
}

struct TransformAdam {
  Adam adam;
  explicit TransformAdam(double lr) : adam(6, lr) {}
  void apply(const double* grad, RigidTransform& t) {
    double delta[6];
    adam.step(grad, delta);
    const Vec3 dw(delta[0], delta[1], delta[2]);
    const Vec3 dt(delta[3], delta[4], delta[5]);
    t.rotation = project_so3(so3_exp(dw) * t.rotation);
    t.translation += dt;
  }
};

}  // namespace

WindowResult solve_window(const TrackSet& tracks, int start, int length,
                          const std::vector<double>& w0, const NeighborGraph& graph,
                          const SolverConfig& cfg) {
  const int n_pts = tracks.point_count();
  if (length < 2) throw DataError("solve_window: window needs at least 2 frames");
  WindowResult res;
  res.start = start;
  res.length = length;
  res.weights.assign(length, w0);

  std::vector<Vec3> x0(n_pts), xt(n_pts);
  std::vector<unsigned char> vp(n_pts);
  for (int p = 0; p < n_pts; ++p) x0[p] = tracks.points[p].positions[start];

  for (int i = 1; i < length; ++i) {
    const int frame = start + i;
    int shared = 0;
    for (int p = 0; p < n_pts; ++p) {
      xt[p] = tracks.points[p].positions[frame];
      vp[p] = tracks.points[p].valid[start] && tracks.points[p].valid[frame] ? 1 : 0;
      shared += vp[p];
    }
    if (shared < 6)
      throw DataError("solve_window: pair (0," + std::to_string(i) +
                      ") has fewer than 6 shared valid points");

    // Gather the shared points for initialization.
    std::vector<Vec3> sx, sy;
    std::vector<int> labels, sel;
    for (int p = 0; p < n_pts; ++p) {
      if (!vp[p]) continue;
      sx.push_back(x0[p]);
      sy.push_back(xt[p]);
      labels.push_back(w0[p] >= 0.5 ? 1 : 0);
      sel.push_back(p);
    }
    const auto reg =
        cfg.registration(sub_seed(cfg.seed, static_cast<std::uint64_t>(start) * 131 + i));
    const int count1 = std::accumulate(labels.begin(), labels.end(), 0);
    if (count1 < 3 || static_cast<int>(labels.size()) - count1 < 3)
      labels = residual_split_labels(sx, sy, reg);

    RigidTransform t0, t1;
    try {
      std::tie(t0, t1) = init_pair_transforms(sx, sy, labels, reg);
    } catch (const NumericError&) {
      // One class too thin even after the bootstrap; fit a single motion.
      t0 = t1 = robust_register(sx, sy, reg);
    }
    const EmResult em = em_refine(sx, sy, t0, t1, labels, reg, cfg.em_rounds);
    t0 = em.t0;
    t1 = em.t1;

    // First-order refinement of transforms (tangent space) and weights (logits).
    std::vector<double> logits(n_pts);
    for (int p = 0; p < n_pts; ++p) logits[p] = logit(w0[p]);
    TransformAdam adam0(cfg.lr_transform), adam1(cfg.lr_transform);
    Adam adam_w(n_pts, cfg.lr_weights);
    std::vector<double> gl(n_pts);
    double g0[6], g1[6];

    std::vector<double> trace;
    trace.reserve(cfg.iters_per_pair + 2);
    double best_total = std::numeric_limits<double>::infinity();
    RigidTransform best_t0 = t0, best_t1 = t1;
    std::vector<double> best_logits = logits;

    for (int it = 0; it <= cfg.iters_per_pair; ++it) {
      const auto b = pair_loss(x0.data(), xt.data(), vp.data(), n_pts, t0, t1, logits.data(),
                               w0.data(), graph.view(), cfg.loss(), gl.data(), g0, g1,
                               cfg.parallel);
      trace.push_back(b.total);
      if (b.total < best_total) {
        best_total = b.total;
        best_t0 = t0;
        best_t1 = t1;
        best_logits = logits;
      }
      if (it == cfg.iters_per_pair) break;
      adam0.apply(g0, t0);
      adam1.apply(g1, t1);
      adam_w.step_inplace(gl.data(), logits.data());
    }
    if (trace.back() > best_total) {
      t0 = best_t0;
      t1 = best_t1;
      logits = best_logits;
      trace.push_back(best_total);
    }

    res.t0.push_back(t0);
    res.t1.push_back(t1);
    res.loss_trace.push_back(std::move(trace));
    for (int p = 0; p < n_pts; ++p) res.weights[i][p] = sigmoid(logits[p]);
  }

  // Flag windows that behaved as a single rigid part: either the weights
  // collapsed to one side, or every pair's two transforms agree.
  int ones = 0, total = 0;
  for (int i = 1; i < length; ++i) {
    for (int p = 0; p < n_pts; ++p) {
      ones += res.weights[i][p] >= 0.5 ? 1 : 0;
      ++total;
    }
  }
  const double frac = total > 0 ? static_cast<double>(ones) / total : 0.0;
  bool transforms_agree = true;
  for (std::size_t k = 0; k < res.t0.size(); ++k) {
    if (rotation_angle(res.t0[k].rotation.transpose() * res.t1[k].rotation) > 1e-3 ||
        (res.t0[k].translation - res.t1[k].translation).norm() > 1e-3) {
      transforms_agree = false;
      break;
    }
  }
  res.single_part =
      frac >= kSinglePartFraction || frac <= 1.0 - kSinglePartFraction || transforms_agree;
  return res;
}

bool align_part_identity(const std::vector<double>& reference, std::vector<double>& candidate,
                         const std::vector<int>& shared) {
  if (shared.empty()) return false;
  double direct = 0, flipped = 0;
  for (int p : shared) {
    direct += std::abs(reference[p] - candidate[p]);
    flipped += std::abs(reference[p] - (1.0 - candidate[p]));
  }
  if (flipped < direct) {
    for (auto& w : candidate) w = 1.0 - w;
    return true;
  }
  return false;
}

std::vector<double> propagate_weights(const WindowResult& prev, const TrackSet& tracks,
                                      int next_start, int next_length) {
  if (prev.start + prev.length - 1 != next_start)
    throw DataError("propagate_weights: windows do not share a boundary frame");
  const int n = tracks.point_count();
  const auto& boundary = prev.weights.back();

  std::vector<char> observed_prev(n, 0);
  for (int p = 0; p < n; ++p) {
    for (int i = 0; i < prev.length; ++i) {
      if (tracks.points[p].valid[prev.start + i]) {
        observed_prev[p] = 1;
        break;
      }
    }
  }

  std::vector<double> w0(n, 0.5);
  std::vector<int> carried;
  bool any_fill = false;
  for (int p = 0; p < n; ++p) {
    if (observed_prev[p]) {
      w0[p] = boundary[p];
      carried.push_back(p);
    } else {
      any_fill = true;
    }
  }
  if (any_fill) {
    if (!tracks.has_features() && carried.empty())
      throw DataError("propagate_weights: no shared points and no features");
    auto f = tracks.has_features() ? normalized_features(tracks)
                                   : std::vector<Eigen::VectorXd>{};
    for (int p = 0; p < n; ++p) {
      if (observed_prev[p]) continue;
      if (f.empty()) continue;  // keep 0.5 without features
      double num = 0, den = 0;
      for (int q : carried) {
        const double s = std::max(0.0, f[p].dot(f[q]));
        num += s * boundary[q];
        den += s;
      }
      if (den > 0) w0[p] = num / den;
    }
  }

  // Shared points double as the identity anchor across the boundary.
  align_part_identity(boundary, w0, carried);
  (void)next_length;
  return w0;
}

SegmentationResult segment(const TrackSet& tracks, const SolverConfig& cfg) {
  const int n_frames = tracks.frame_count;
  const int n_pts = tracks.point_count();
  SegmentationResult out;
  out.weights.assign(n_frames, std::vector<double>(n_pts, 0.5));
  out.masks.assign(n_frames, std::vector<char>(n_pts, 0));
  for (const auto& p : tracks.points) out.point_ids.push_back(p.id);

  std::vector<double> w0;
  if (tracks.has_features()) {
    const InitWeights init = init_weights_from_features(tracks, cfg.seed);
    w0 = init.w0;
    out.degenerate_features = init.degenerate_features;
  } else {
    w0.assign(n_pts, 0.5);
    out.degenerate_features = true;
  }
  const NeighborGraph graph = build_neighbor_graph(tracks, cfg);

  int start = 0;
  bool first = true;
  while (start < n_frames - 1) {
    const int length = std::min(cfg.window_size, n_frames - start);
    WindowResult win = solve_window(tracks, start, length, w0, graph, cfg);
    if (win.single_part) out.single_part_windows.push_back(start);
    const int from = first ? 0 : 1;  // boundary frame already written by the previous window
    for (int i = from; i < length; ++i) out.weights[start + i] = win.weights[i];
    first = false;
    if (start + length >= n_frames) break;
    w0 = propagate_weights(win, tracks, start + length - 1, 0);
    start += length - 1;
  }

  for (int t = 0; t < n_frames; ++t)
    for (int p = 0; p < n_pts; ++p) out.masks[t][p] = out.weights[t][p] >= 0.5 ? 1 : 0;
  return out;
}

}  // namespace artkin
