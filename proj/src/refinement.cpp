#include "artkin/refinement.hpp"

#include <cmath>
#include <limits>

#include "artkin/adam.hpp"

namespace artkin {

namespace {

struct Problem {
  std::vector<Vec3> canonical;
  std::vector<double> w_ref;
  std::vector<Vec3> obs;             // frame-major
  std::vector<unsigned char> valid;  // frame-major
  std::vector<unsigned char> frame_valid;
  std::vector<RigidTransform> poses;
  int frames = 0;

  RefineProblemView view(const RobustLoss& loss) const {
    RefineProblemView v;
    v.canonical = canonical.data();
    v.w_ref = w_ref.data();
    v.point_count = static_cast<int>(canonical.size());
    v.obs = obs.data();
    v.obs_valid = valid.data();
    v.frame_count = frames;
    v.ref_poses = poses.data();
    v.frame_valid = frame_valid.data();
    v.loss = loss;
    return v;
  }
};

// Points without a valid frame-0 sample have no canonical position and are
// left out of the residual.
Problem build_problem(const std::vector<RigidTransform>& ref_poses,
                      const std::vector<char>& frame_valid, const TrackSet& tracks,
                      const std::vector<double>& w_reference) {
  const int n_frames = tracks.frame_count;
  Problem pb;
  pb.frames = n_frames;
  pb.frame_valid.assign(frame_valid.begin(), frame_valid.end());
  pb.poses = ref_poses;

  std::vector<int> sel;
  for (int p = 0; p < tracks.point_count(); ++p)
    if (tracks.points[p].valid[0]) sel.push_back(p);
  if (sel.size() < 3) throw DataError("refine: fewer than 3 points valid at frame 0");

  for (int p : sel) {
    pb.canonical.push_back(tracks.points[p].positions[0]);
    pb.w_ref.push_back(w_reference[p]);
  }
  pb.obs.resize(static_cast<std::size_t>(n_frames) * sel.size());
  pb.valid.assign(pb.obs.size(), 0);
  for (int i = 0; i < n_frames; ++i) {
    for (std::size_t s = 0; s < sel.size(); ++s) {
      const auto& tp = tracks.points[sel[s]];
      pb.obs[i * sel.size() + s] = tp.positions[i];
      pb.valid[i * sel.size() + s] = tp.valid[i] ? 1 : 0;
    }
  }
  return pb;
}

}  // namespace

RefineResult refine(const JointModel& model, const std::vector<RigidTransform>& ref_poses,
                    const std::vector<char>& frame_valid, const TrackSet& tracks,
                    const std::vector<double>& w_reference, const RefineConfig& cfg) {
  const int n = tracks.frame_count;
  if (static_cast<int>(ref_poses.size()) != n || static_cast<int>(model.states.size()) != n)
    throw DataError("refine: pose or state count does not match the frame count");
  if (static_cast<int>(w_reference.size()) != tracks.point_count())
    throw DataError("refine: weight count does not match the point count");

  Problem pb = build_problem(ref_poses, frame_valid, tracks, w_reference);
  const bool revolute = model.kind == JointKind::kRevolute;

  JointModel cur = model;
  cur.pivot -= cur.axis.direction.dot(cur.pivot) * cur.axis.direction;

  Adam adam_axis(3, cfg.lr);
  Adam adam_pivot(3, cfg.lr);
  Adam adam_states(n, cfg.lr);
  Adam adam_poses(6 * n, cfg.lr);
  std::vector<double> pose_grad(6 * n, 0.0), pose_step(6 * n, 0.0);
  std::vector<double> state_step(n, 0.0);

  RefineResult out;
  out.model = cur;
  out.ref_poses = pb.poses;
  double best = std::numeric_limits<double>::infinity();

  for (int it = 0; it <= cfg.iters; ++it) {
    Problem* active = &pb;
    const auto grads = refine_objective_grad(active->view(cfg.loss), cur,
                                             cfg.refine_reference_poses, cfg.parallel);
    out.report.trace.push_back(grads.objective);
    if (it == 0) out.report.initial_objective = grads.objective;
    if (grads.objective < best) {
      best = grads.objective;
      out.model = cur;
      out.ref_poses = pb.poses;
    }
    if (it == cfg.iters) break;

    // Axis: project the gradient to the tangent plane, step, re-normalize.
    Vec3 gu = grads.g_axis;
    gu -= cur.axis.direction.dot(gu) * cur.axis.direction;
    double axis_step[3];
    adam_axis.step(gu.data(), axis_step);
    Vec3 u_new = cur.axis.direction + Vec3(axis_step[0], axis_step[1], axis_step[2]);
    cur.axis = UnitAxis::from(u_new);

    if (revolute) {
      double pivot_step[3];
      adam_pivot.step(grads.g_pivot.data(), pivot_step);
      cur.pivot += Vec3(pivot_step[0], pivot_step[1], pivot_step[2]);
      cur.pivot -= cur.axis.direction.dot(cur.pivot) * cur.axis.direction;
    }

    std::vector<double> gs = grads.g_states;
    gs[0] = 0.0;  // frame 0 is the reference state
    adam_states.step(gs.data(), state_step.data());
    for (int i = 1; i < n; ++i) cur.states[i] += state_step[i];

    if (cfg.refine_reference_poses) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < 6; ++j)
          pose_grad[6 * i + j] = i == 0 ? 0.0 : grads.g_poses[i](j);  // frame 0 stays calibrated
      adam_poses.step(pose_grad.data(), pose_step.data());
      for (int i = 1; i < n; ++i) {
        const Vec3 dw(pose_step[6 * i], pose_step[6 * i + 1], pose_step[6 * i + 2]);
        const Vec3 dt(pose_step[6 * i + 3], pose_step[6 * i + 4], pose_step[6 * i + 5]);
        pb.poses[i].rotation = project_so3(so3_exp(dw) * pb.poses[i].rotation);
        pb.poses[i].translation += dt;
      }
    }
  }

  out.report.final_objective = best;
  out.model.pivot -= out.model.axis.direction.dot(out.model.pivot) * out.model.axis.direction;
  if (!out.model.states.empty()) {
    const double s0 = out.model.states[0];
    for (auto& s : out.model.states) s -= s0;
  }
  return out;
}

}  // namespace artkin
