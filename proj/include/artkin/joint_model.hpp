#pragma once

#include <optional>
#include <vector>

#include "artkin/geometry.hpp"

namespace artkin {

enum class JointKind { kRevolute, kPrismatic };

/// Kinematic joint: revolute {axis, pivot, per-frame angles} or prismatic
/// {axis, per-frame displacements}. The pivot satisfies axis . pivot = 0
/// (a revolute pivot is only defined up to sliding along the axis), and
/// states[0] = 0 so the first frame is the reference configuration.
struct JointModel {
  JointKind kind = JointKind::kRevolute;
  UnitAxis axis;
  Vec3 pivot = Vec3::Zero();          // revolute only
  std::vector<double> states;         // radians (revolute) or meters (prismatic)
  std::optional<Mat3> const_rotation; // prismatic: mean rotation kept as metadata
};

/// Closed-form transform of the joint at frame i:
///   revolute:  [R(u,theta_i) | (I - R(u,theta_i)) o]
///   prismatic: [I | d_i u]
RigidTransform joint_transform(const JointModel& model, int frame);

/// Same closed form for an explicit state value.
RigidTransform joint_transform_at(const JointModel& model, double state);

}  // namespace artkin
