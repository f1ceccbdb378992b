#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "artkin/joint_model.hpp"
#include "artkin/registration.hpp"
#include "artkin/trajectory.hpp"

namespace artkin {

struct JointEstimatorConfig {
  double theta_th_deg = 10.0;  // rotation-amplitude threshold
  double rho_th = 0.05;        // translation-linearity threshold
  double rho_epsilon = 1e-12;
  int ransac_iters = 200;
  double ransac_inlier_threshold = 0.02;
  bool apply_outlier_filter = true;  // the noise-resistance stage; off for ablations
  std::uint64_t seed = 0;

  RegistrationConfig registration(std::uint64_t sub) const {
    return RegistrationConfig{ransac_iters, ransac_inlier_threshold, 10, sub};
  }
};

/// Part-to-camera pose per frame; invalid frames are flagged, not dropped.
struct PoseSequence {
  std::vector<RigidTransform> poses;
  std::vector<char> valid;
  int part_index = 0;
};

/// Relative pose of the moving part w.r.t. the reference part, calibrated so
/// that frame 0 is the identity.
struct RelativePoseSeq {
  std::vector<RigidTransform> t;
  std::vector<char> inlier;
};

struct JointTypeFeatures {
  double delta_theta_deg = 0;  // rotation amplitude (signed-angle span)
  double rho = 0;              // translation linearity ratio
  double theta_th_deg = 10.0;
  double rho_th = 0.05;
};

/// Per-part pose recovery by anchored robust registration: frame-0 points of
/// each part are registered to every other frame. Frames where a part has
/// fewer than 3 non-collinear valid points are flagged invalid.
std::pair<PoseSequence, PoseSequence> estimate_part_poses(
    const TrackSet& tracks, const std::vector<std::vector<char>>& masks,
    const JointEstimatorConfig& cfg);

struct Calibration {
  PoseSequence ref, rel;  // calibrated sequences (identity at frame 0)
  int reference_part = 0;
};

/// Canonicalizes both pose sequences with the inverse first-frame pose and
/// picks the part with the least average motion as the reference.
Calibration calibrate(const PoseSequence& part0, const PoseSequence& part1);

RelativePoseSeq relative_pose_sequence(const PoseSequence& ref, const PoseSequence& rel);

/// Noise resistance: pairwise steps between consecutive inlier frames are
/// screened by the 2-sigma rule on translation-deviation norms; frames
/// adjacent to an outlier step are removed from the inlier mask.
RelativePoseSeq filter_pose_outliers(const RelativePoseSeq& seq);

/// Joint-type decision from rotation amplitude and translation linearity.
std::pair<JointKind, JointTypeFeatures> classify_joint(const RelativePoseSeq& seq,
                                                       const JointEstimatorConfig& cfg);

/// Closed-form revolute fit: axis from the smallest eigenvector of
/// sum (R_ij - I)^T (R_ij - I), pivot from the stacked projected
/// least-squares system, signed per-frame angles about the axis.
JointModel fit_revolute(const RelativePoseSeq& seq, const JointEstimatorConfig& cfg);

/// Prismatic fit: axis from the principal component of the centered
/// translations, states as signed projections, mean rotation kept as metadata.
JointModel fit_prismatic(const RelativePoseSeq& seq);

struct JointEstimate {
  JointModel model;
  Calibration calibration;
  RelativePoseSeq relative;  // after outlier filtering
  JointTypeFeatures features;
};

JointEstimate estimate_joint(const TrackSet& tracks, const std::vector<std::vector<char>>& masks,
                             const JointEstimatorConfig& cfg);

/// Variant ingesting externally estimated raw part poses instead of running
/// the internal registration.
JointEstimate estimate_joint_from_poses(const PoseSequence& part0, const PoseSequence& part1,
                                        const JointEstimatorConfig& cfg);

}  // namespace artkin
