#include "artkin/joint_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "artkin/rng.hpp"

namespace artkin {

namespace {

std::vector<int> inlier_indices(const RelativePoseSeq& seq) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(seq.t.size()); ++i)
    if (seq.inlier[i]) idx.push_back(i);
  return idx;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

/// Signed rotation angle of r about the (approximate) axis u.
double signed_angle_about(const Mat3& r, const Vec3& u) {
  const double s = 0.5 * u.dot(vee(r - r.transpose()));
  const double c = 0.5 * (r.trace() - u.dot(r * u));
  return std::atan2(s, c);
}

/// Least-squares axis of a set of rotations: smallest eigenvector of
/// A = sum_{i<j} (R_ij - I)^T (R_ij - I). Returns the eigensystem too.
struct AxisFit {
  Vec3 axis;
  Vec3 eigenvalues;  // ascending
  Mat3 accum;
};

AxisFit fit_axis_matrix(const std::vector<Mat3>& rotations) {
  Mat3 a = Mat3::Zero();
  const int n = static_cast<int>(rotations.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Mat3 rij = project_so3(rotations[i] * rotations[j].transpose());
      const Mat3 d = rij - Mat3::Identity();
      a += d.transpose() * d;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(a);
  return {eig.eigenvectors().col(0), eig.eigenvalues(), a};
}

double quantile(std::vector<double> sorted, double q) {
  const double h = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

/// Signed-angle span of the inlier rotations about the least-squares axis,
/// with 1.5 IQR outlier rejection. Measures the full swept range; the
/// unsigned mean-relative formulation folds symmetric sweeps in half.
double rotation_span_deg(const std::vector<Mat3>& rotations, const Vec3& axis) {
  std::vector<double> theta;
  theta.reserve(rotations.size());
  for (const auto& r : rotations) theta.push_back(signed_angle_about(r, axis));
  std::vector<double> sorted = theta;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile(sorted, 0.25);
  const double q3 = quantile(sorted, 0.75);
  const double fence = 1.5 * (q3 - q1);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double t : theta) {
    if (t < q1 - fence || t > q3 + fence) continue;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!(hi >= lo)) return 0.0;
  return (hi - lo) * 180.0 / M_PI;
}

}  // namespace

std::pair<PoseSequence, PoseSequence> estimate_part_poses(
    const TrackSet& tracks, const std::vector<std::vector<char>>& masks,
    const JointEstimatorConfig& cfg) {
  const int n_frames = tracks.frame_count;
  const int n_pts = tracks.point_count();
  if (static_cast<int>(masks.size()) != n_frames)
    throw DataError("estimate_part_poses: mask frame count mismatch");

  // Per-point part labels by majority vote over the per-frame masks.
  std::vector<int> label(n_pts, 0);
  for (int p = 0; p < n_pts; ++p) {
    int ones = 0;
    for (int t = 0; t < n_frames; ++t) ones += masks[t][p] ? 1 : 0;
    label[p] = 2 * ones > n_frames ? 1 : (2 * ones < n_frames ? 0 : (masks[0][p] ? 1 : 0));
  }

  std::pair<PoseSequence, PoseSequence> out;
  for (int k = 0; k < 2; ++k) {
    PoseSequence& seq = k == 0 ? out.first : out.second;
    seq.part_index = k;
    seq.poses.assign(n_frames, RigidTransform::identity());
    seq.valid.assign(n_frames, 0);

    std::vector<int> members;
    for (int p = 0; p < n_pts; ++p)
      if (label[p] == k) members.push_back(p);

    for (int i = 0; i < n_frames; ++i) {
      std::vector<Vec3> x0, xi;
      for (int p : members) {
        if (tracks.points[p].valid[0] && tracks.points[p].valid[i]) {
          x0.push_back(tracks.points[p].positions[0]);
          xi.push_back(tracks.points[p].positions[i]);
        }
      }
      if (x0.size() < 3) continue;
      if (i == 0) {
        seq.valid[0] = 1;  // anchored at the identity by construction
        continue;
      }
      try {
        seq.poses[i] = robust_register(
            x0, xi, cfg.registration(sub_seed(cfg.seed, static_cast<std::uint64_t>(i), k)));
        seq.valid[i] = 1;
      } catch (const NumericError&) {
        // collinear or too-thin support this frame; leave invalid
      }
    }
  }
  return out;
}

Calibration calibrate(const PoseSequence& part0, const PoseSequence& part1) {
  if (part0.poses.empty() || part0.poses.size() != part1.poses.size())
    throw DataError("calibrate: pose sequences empty or mismatched");
  if (!part0.valid[0] || !part1.valid[0])
    throw DataError("calibrate: invalid frame-0 pose");

  const int n = static_cast<int>(part0.poses.size());
  PoseSequence cal[2];
  double motion[2] = {0, 0};
  for (int k = 0; k < 2; ++k) {
    const PoseSequence& src = k == 0 ? part0 : part1;
    const RigidTransform a = src.poses[0].inverse();
    cal[k].part_index = src.part_index;
    cal[k].valid = src.valid;
    cal[k].poses.resize(n);
    double sum = 0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
      cal[k].poses[i] = i == 0 ? RigidTransform::identity() : src.poses[i].compose(a);
      if (src.valid[i]) {
        sum += rotation_angle(cal[k].poses[i].rotation) + cal[k].poses[i].translation.norm();
        ++count;
      }
    }
    motion[k] = count > 0 ? sum / count : 0.0;
  }

  Calibration out;
  out.reference_part = motion[1] < motion[0] ? 1 : 0;  // ties keep part 0
  out.ref = cal[out.reference_part];
  out.rel = cal[1 - out.reference_part];
  return out;
}

RelativePoseSeq relative_pose_sequence(const PoseSequence& ref, const PoseSequence& rel) {
  const int n = static_cast<int>(ref.poses.size());
  RelativePoseSeq out;
  out.t.resize(n);
  out.inlier.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    out.t[i] = i == 0 ? RigidTransform::identity()
                      : ref.poses[i].inverse().compose(rel.poses[i]);
    out.inlier[i] = ref.valid[i] && rel.valid[i] ? 1 : 0;
  }
  return out;
}

RelativePoseSeq filter_pose_outliers(const RelativePoseSeq& seq) {
  const auto idx = inlier_indices(seq);
  if (idx.size() < 3) throw DataError("filter_pose_outliers: fewer than 3 inlier frames");

  // Pairwise steps between consecutive inlier frames.
  const int n_steps = static_cast<int>(idx.size()) - 1;
  std::vector<Vec3> delta(n_steps);
  for (int k = 0; k < n_steps; ++k)
    delta[k] = seq.t[idx[k + 1]].compose(seq.t[idx[k]].inverse()).translation;

  Vec3 mu = Vec3::Zero();
  for (const auto& d : delta) mu += d;
  mu /= static_cast<double>(n_steps);
  std::vector<double> dev(n_steps);
  double mean_dev = 0;
  for (int k = 0; k < n_steps; ++k) {
    dev[k] = (delta[k] - mu).norm();
    mean_dev += dev[k];
  }
  mean_dev /= n_steps;
  double var = 0;
  for (double d : dev) var += (d - mean_dev) * (d - mean_dev);
  const double sigma = std::sqrt(var / n_steps);

  RelativePoseSeq out = seq;
  for (int k = 0; k < n_steps; ++k) {
    if (dev[k] > 2.0 * sigma) {
      out.inlier[idx[k]] = 0;
      out.inlier[idx[k + 1]] = 0;
    }
  }
  if (inlier_indices(out).size() < 3)
    throw DataError("filter_pose_outliers: fewer than 3 frames survive the 2-sigma filter");
  return out;
}

std::pair<JointKind, JointTypeFeatures> classify_joint(const RelativePoseSeq& seq,
                                                       const JointEstimatorConfig& cfg) {
  const auto idx = inlier_indices(seq);
  if (idx.size() < 3) throw DataError("classify_joint: fewer than 3 inlier frames");

  std::vector<Mat3> rotations;
  rotations.reserve(idx.size());
  for (int i : idx) rotations.push_back(project_so3(seq.t[i].rotation));

  const AxisFit fit = fit_axis_matrix(rotations);
  JointTypeFeatures features;
  features.theta_th_deg = cfg.theta_th_deg;
  features.rho_th = cfg.rho_th;
  features.delta_theta_deg = rotation_span_deg(rotations, fit.axis);

  Vec3 mean_t = Vec3::Zero();
  for (int i : idx) mean_t += seq.t[i].translation;
  mean_t /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (int i : idx) {
    const Vec3 x = seq.t[i].translation - mean_t;
    cov += x * x.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 ev = eig.eigenvalues();  // ascending
  features.rho = (ev(1) + ev(0)) / (ev(2) + cfg.rho_epsilon);

  // A small rotation span together with near-line translations is prismatic.
  const bool prismatic =
      features.delta_theta_deg < cfg.theta_th_deg && features.rho < cfg.rho_th;
  return {prismatic ? JointKind::kPrismatic : JointKind::kRevolute, features};
}

JointModel fit_revolute(const RelativePoseSeq& seq, const JointEstimatorConfig& cfg) {
  const auto idx = inlier_indices(seq);
  if (idx.size() < 3) throw DataError("fit_revolute: fewer than 3 inlier frames");

  std::vector<Mat3> rotations;
  rotations.reserve(idx.size());
  for (int i : idx) rotations.push_back(project_so3(seq.t[i].rotation));

  const AxisFit fit = fit_axis_matrix(rotations);
  if (fit.eigenvalues(1) - fit.eigenvalues(0) <= 1e-9 * std::max(1.0, fit.eigenvalues(2)))
    throw NumericError("fit_revolute: ill-conditioned axis (smallest eigenvalue not unique)");
  Vec3 u = fit.axis;

  const double span = rotation_span_deg(rotations, u);
  if (span < cfg.theta_th_deg)
    throw NumericError("fit_revolute: ill-conditioned axis (rotation span below threshold)");

  // Pivot from P (t_i - t_j) ~ P (R_j - R_i) p over inlier pairs, solved in
  // the plane orthogonal to u.
  const Mat3 proj = Mat3::Identity() - u * u.transpose();
  Mat3 m = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t c = a + 1; c < idx.size(); ++c) {
      const Mat3 dr = seq.t[idx[c]].rotation - seq.t[idx[a]].rotation;
      m += dr.transpose() * proj * dr;
      b += dr.transpose() * proj * (seq.t[idx[a]].translation - seq.t[idx[c]].translation);
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  const Vec3 ev = eig.eigenvalues();
  if (ev(1) <= 1e-12 * std::max(1.0, ev(2)))
    throw NumericError("fit_revolute: ill-conditioned pivot system (rank < 2)");
  Vec3 pivot = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    if (ev(k) > 1e-12 * std::max(1.0, ev(2)))
      pivot += (eig.eigenvectors().col(k).dot(b) / ev(k)) * eig.eigenvectors().col(k);
  }
  pivot -= u.dot(pivot) * u;

  const int n = static_cast<int>(seq.t.size());
  const Mat3 r0t = seq.t[0].rotation.transpose();
  std::vector<double> states(n, 0.0);
  for (int i = 0; i < n; ++i)
    states[i] = signed_angle_about(project_so3(seq.t[i].rotation * r0t), u);

  double mean_angle = 0;
  for (int i : idx) mean_angle += states[i];
  mean_angle /= static_cast<double>(idx.size());
  if (mean_angle < 0) {
    u = -u;
    for (auto& s : states) s = -s;
  }

  for (int i = n - 1; i >= 0; --i) states[i] -= states[0];

  JointModel model;
  model.kind = JointKind::kRevolute;
  model.axis = UnitAxis::from(u);
  model.pivot = pivot - model.axis.direction.dot(pivot) * model.axis.direction;
  model.states = std::move(states);
  return model;
}

JointModel fit_prismatic(const RelativePoseSeq& seq) {
  const auto idx = inlier_indices(seq);
  if (idx.size() < 3) throw DataError("fit_prismatic: fewer than 3 inlier frames");

  Vec3 mean_t = Vec3::Zero();
  for (int i : idx) mean_t += seq.t[i].translation;
  mean_t /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (int i : idx) {
    const Vec3 x = seq.t[i].translation - mean_t;
    cov += x * x.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  if (eig.eigenvalues()(2) < 1e-12)
    throw NumericError("fit_prismatic: degenerate translations (no motion)");
  Vec3 w = eig.eigenvectors().col(2);

  const Vec3 p0 = mean_t - mean_t.dot(w) * w;
  const int n = static_cast<int>(seq.t.size());
  std::vector<double> states(n, 0.0);
  for (int i = 0; i < n; ++i) states[i] = (seq.t[i].translation - p0).dot(w);

  if (states[idx.back()] < states[0]) {
    w = -w;
    for (auto& s : states) s = -s;
  }
  for (int i = n - 1; i >= 0; --i) states[i] -= states[0];

  Mat3 sum_r = Mat3::Zero();
  for (int i : idx) sum_r += seq.t[i].rotation;

  JointModel model;
  model.kind = JointKind::kPrismatic;
  model.axis = UnitAxis::from(w);
  model.pivot = Vec3::Zero();
  model.states = std::move(states);
  model.const_rotation = project_so3(sum_r);
  return model;
}

namespace {

template <typename F>
auto staged(const char* stage, F&& fn) {
  try {
    return fn();
  } catch (const DataError& e) {
    throw DataError(std::string(stage) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(stage) + ": " + e.what());
  }
}

JointEstimate estimate_from_sequences(const PoseSequence& part0, const PoseSequence& part1,
                                      const JointEstimatorConfig& cfg) {
  JointEstimate out;
  out.calibration = staged("calibrate", [&] { return calibrate(part0, part1); });
  RelativePoseSeq rel = staged("relative-poses", [&] {
    return relative_pose_sequence(out.calibration.ref, out.calibration.rel);
  });
  if (cfg.apply_outlier_filter)
    rel = staged("noise-filter", [&] { return filter_pose_outliers(rel); });
  out.relative = std::move(rel);
  const auto [kind, features] =
      staged("classify", [&] { return classify_joint(out.relative, cfg); });
  out.features = features;
  if (kind == JointKind::kRevolute)
    out.model = staged("fit-revolute", [&] { return fit_revolute(out.relative, cfg); });
  else
    out.model = staged("fit-prismatic", [&] { return fit_prismatic(out.relative); });
  return out;
}

}  // namespace

JointEstimate estimate_joint(const TrackSet& tracks, const std::vector<std::vector<char>>& masks,
                             const JointEstimatorConfig& cfg) {
  const auto [p0, p1] =
      staged("part-poses", [&] { return estimate_part_poses(tracks, masks, cfg); });
  return estimate_from_sequences(p0, p1, cfg);
}

JointEstimate estimate_joint_from_poses(const PoseSequence& part0, const PoseSequence& part1,
                                        const JointEstimatorConfig& cfg) {
  return estimate_from_sequences(part0, part1, cfg);
}

}  // namespace artkin
