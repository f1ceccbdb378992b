#include "artkin/metrics.hpp"

#include <cmath>
#include <sstream>

#include "artkin/kernels.hpp"

namespace artkin {

double axis_error_deg(const UnitAxis& u, const UnitAxis& u_gt) {
  double c = std::abs(u.direction.dot(u_gt.direction));
  c = std::min(1.0, c);
  return std::acos(c) * 180.0 / M_PI;
}

double position_error_cm(const Vec3& pivot, const UnitAxis& axis, const Vec3& pivot_gt,
                         const UnitAxis& axis_gt) {
  (void)axis_gt;
  const Vec3 d = pivot_gt - pivot;
  const Vec3 perp = d - axis.direction.dot(d) * axis.direction;
  return perp.norm() * 100.0;
}

double state_error_mae(const std::vector<double>& states, const std::vector<double>& states_gt,
                       JointKind kind, const std::vector<char>& frames,
                       std::vector<double>* per_frame) {
  if (states.size() != states_gt.size() || states.size() != frames.size())
    throw DataError("state_error: length mismatch");
  const double unit = kind == JointKind::kRevolute ? 180.0 / M_PI : 100.0;
  double best = std::numeric_limits<double>::infinity();
  int best_sign = 1;
  for (int sign : {1, -1}) {
    double sum = 0;
    int count = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (!frames[i]) continue;
      sum += std::abs(sign * (states[i] - states[0]) - (states_gt[i] - states_gt[0]));
      ++count;
    }
    if (count == 0) throw DataError("state_error: no frames to compare");
    const double mae = sum / count * unit;
    if (mae < best) {
      best = mae;
      best_sign = sign;
    }
  }
  if (per_frame) {
    per_frame->clear();
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (!frames[i]) continue;
      per_frame->push_back(
          std::abs(best_sign * (states[i] - states[0]) - (states_gt[i] - states_gt[0])) * unit);
    }
  }
  return best;
}

double chamfer_cm(const std::vector<Vec3>& a, const std::vector<Vec3>& b, bool parallel) {
  return 50.0 * (chamfer_forward(a, b, parallel) + chamfer_forward(b, a, parallel));
}

double chamfer_cm_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  return 50.0 * (chamfer_forward_bruteforce(a, b) + chamfer_forward_bruteforce(b, a));
}

namespace {

struct IouCounts {
  long long inter[2] = {0, 0};
  long long uni[2] = {0, 0};
  double miou() const {
    double sum = 0;
    for (int k = 0; k < 2; ++k) sum += uni[k] == 0 ? 1.0 : static_cast<double>(inter[k]) / uni[k];
    return 0.5 * sum;
  }
};

}  // namespace

double segmentation_miou(const std::vector<std::vector<char>>& masks,
                         const std::vector<int>& labels) {
  double best = 0;
  for (int flip = 0; flip < 2; ++flip) {
    IouCounts c;
    for (const auto& frame : masks) {
      if (frame.size() != labels.size()) throw DataError("segmentation_miou: size mismatch");
      for (std::size_t p = 0; p < frame.size(); ++p) {
        const int pred = flip ? 1 - (frame[p] ? 1 : 0) : (frame[p] ? 1 : 0);
        const int gt = labels[p];
        for (int k = 0; k < 2; ++k) {
          const bool in_pred = pred == k, in_gt = gt == k;
          if (in_pred && in_gt) ++c.inter[k];
          if (in_pred || in_gt) ++c.uni[k];
        }
      }
    }
    best = std::max(best, c.miou());
  }
  return best;
}

namespace {

// Canonicalized clouds for the Chamfer metrics: every valid observation is
// mapped back to the canonical frame through the poses of its part, using
// the predicted kinematics on one side and the ground truth on the other.
struct CanonicalClouds {
  std::vector<Vec3> pred[2];  // [0] reference part, [1] moving part
  std::vector<Vec3> gt[2];    // by generator label
  int moving_gt = 1;          // generator label covered by the predicted moving part
};

CanonicalClouds build_clouds(const SceneDataset& scene,
                             const std::vector<std::vector<char>>& masks,
                             const JointEstimate& est) {
  const auto& tracks = scene.tracks;
  const auto& gt = *scene.ground_truth;
  const int n = tracks.frame_count;
  const int n_pts = tracks.point_count();
  const int stride = std::max(1, n / 12);

  // Per-point predicted labels (majority over frames), as used for poses.
  std::vector<int> pred_label(n_pts, 0);
  for (int p = 0; p < n_pts; ++p) {
    int ones = 0;
    for (int t = 0; t < n; ++t) ones += masks[t][p] ? 1 : 0;
    pred_label[p] = 2 * ones > n ? 1 : (2 * ones < n ? 0 : (masks[0][p] ? 1 : 0));
  }
  // Which solver label plays the reference role.
  const int ref_label = est.calibration.reference_part;

  CanonicalClouds out;
  {
    int votes = 0, total = 0;
    for (int p = 0; p < n_pts; ++p) {
      if (pred_label[p] == ref_label) continue;
      votes += gt.labels[p] == 1 ? 1 : 0;
      ++total;
    }
    out.moving_gt = (total == 0 || 2 * votes >= total) ? 1 : 0;
  }
  for (int i = 0; i < n; i += stride) {
    const bool pred_ok = est.calibration.ref.valid[i];
    for (int p = 0; p < n_pts; ++p) {
      if (!tracks.points[p].valid[i]) continue;
      const Vec3& x = tracks.points[p].positions[i];
      if (pred_ok) {
        const bool moving = pred_label[p] != ref_label;
        RigidTransform pose = est.calibration.ref.poses[i];
        if (moving) pose = pose.compose(joint_transform(est.model, i));
        out.pred[moving ? 1 : 0].push_back(pose.inverse().apply(x));
      }
      const int gl = gt.labels[p];  // generator: part 1 moves relative to part 0
      out.gt[gl].push_back(gt.poses[i][gl].inverse().apply(x));
    }
  }
  return out;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << *v;
  return os.str();
}

}  // namespace

MetricsReport evaluate_scene(const std::string& scene_id, const SceneDataset& scene,
                             const std::vector<std::vector<char>>& masks,
                             const JointEstimate& estimate, bool parallel) {
  if (!scene.ground_truth) throw DataError("evaluate_scene: bundle has no ground truth");
  const auto& gt = *scene.ground_truth;
  const auto& model = estimate.model;

  MetricsReport r;
  r.scene_id = scene_id;
  r.kind = model.kind == JointKind::kRevolute ? "revolute" : "prismatic";
  r.kind_match = model.kind == gt.joint.kind;
  r.axis_deg = axis_error_deg(model.axis, gt.joint.axis);
  if (model.kind == JointKind::kRevolute && gt.joint.kind == JointKind::kRevolute)
    r.position_cm = position_error_cm(model.pivot, model.axis, gt.joint.pivot, gt.joint.axis);
  if (r.kind_match) {
    r.state_unit = model.kind == JointKind::kRevolute ? "deg" : "cm";
    std::vector<char> frames(estimate.relative.inlier.begin(), estimate.relative.inlier.end());
    r.state_mae = state_error_mae(model.states, gt.joint.states, model.kind, frames,
                                  &r.per_frame_state_error);
  }

  if (!masks.empty()) {
    r.miou = segmentation_miou(masks, gt.labels);

    const CanonicalClouds clouds = build_clouds(scene, masks, estimate);
    // Match the predicted moving part with the ground-truth part it covers.
    std::vector<Vec3> pred_all, gt_all;
    for (int k = 0; k < 2; ++k) {
      pred_all.insert(pred_all.end(), clouds.pred[k].begin(), clouds.pred[k].end());
      gt_all.insert(gt_all.end(), clouds.gt[k].begin(), clouds.gt[k].end());
    }
    const int mg = clouds.moving_gt;
    if (!pred_all.empty() && !gt_all.empty())
      r.cd_w = chamfer_cm(pred_all, gt_all, parallel);
    if (!clouds.pred[1].empty() && !clouds.gt[mg].empty())
      r.cd_m = chamfer_cm(clouds.pred[1], clouds.gt[mg], parallel);
    if (!clouds.pred[0].empty() && !clouds.gt[1 - mg].empty())
      r.cd_s = chamfer_cm(clouds.pred[0], clouds.gt[1 - mg], parallel);
  }
  return r;
}

std::string metrics_csv_header() {
  return "scene_id,kind,axis_deg,position_cm,state_mae,cd_w,cd_m,cd_s,miou";
}

std::string metrics_csv_row(const MetricsReport& r) {
  std::ostringstream os;
  os << r.scene_id << "," << r.kind << "," << r.axis_deg << "," << fmt(r.position_cm) << ","
     << fmt(r.state_mae) << "," << fmt(r.cd_w) << "," << fmt(r.cd_m) << "," << fmt(r.cd_s) << ","
     << fmt(r.miou);
  return os.str();
}

}  // namespace artkin
