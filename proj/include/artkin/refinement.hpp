#pragma once

#include <vector>

#include "artkin/joint_model.hpp"
#include "artkin/kernels.hpp"
#include "artkin/trajectory.hpp"

namespace artkin {

struct RefineConfig {
  int iters = 500;
  double lr = 1e-3;
  RobustLoss loss = RobustLoss::huber(0.01);  // meters
  bool refine_reference_poses = false;
  bool parallel = true;
};

struct RefineReport {
  double initial_objective = 0;
  double final_objective = 0;
  std::vector<double> trace;  // objective per iteration
};

struct RefineResult {
  JointModel model;
  std::vector<RigidTransform> ref_poses;
  RefineReport report;
};

/// End-to-end refinement of the joint parameters (axis, pivot, states) and
/// optionally the reference poses, by adaptive-moment descent on the robust
/// trajectory residual. The axis stays unit-norm via tangent projection and
/// re-normalization, the pivot is re-projected onto the axis-orthogonal
/// plane each step, and states[0] stays pinned at zero. Returns the best
/// iterate, so the final objective never exceeds the initial one.
///
/// `w_reference` is the per-point probability of belonging to the reference
/// part; it gates the stationary motion hypothesis exactly as the part
/// weights gate the two hypotheses in the pair loss.
RefineResult refine(const JointModel& model, const std::vector<RigidTransform>& ref_poses,
                    const std::vector<char>& frame_valid, const TrackSet& tracks,
                    const std::vector<double>& w_reference, const RefineConfig& cfg);

}  // namespace artkin
