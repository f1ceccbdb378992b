#include "artkin/joint_model.hpp"

namespace artkin {

RigidTransform joint_transform_at(const JointModel& model, double state) {
  if (model.kind == JointKind::kRevolute) {
    const Mat3 r = axis_angle_rotation(model.axis, state);
    return {r, (Mat3::Identity() - r) * model.pivot};
  }
  return {Mat3::Identity(), state * model.axis.direction};
}

RigidTransform joint_transform(const JointModel& model, int frame) {
  if (frame < 0 || frame >= static_cast<int>(model.states.size()))
    throw DataError("joint_transform: frame index out of range");
  return joint_transform_at(model, model.states[frame]);
}

}  // namespace artkin
