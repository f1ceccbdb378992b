#pragma once

#include <nlohmann/json_fwd.hpp>

#include "artkin/joint_model.hpp"

namespace artkin {

/// Row-major 3x4 pose record, the wire format for all pose sequences.
nlohmann::json pose_to_json(const RigidTransform& t);
RigidTransform pose_from_json(const nlohmann::json& j, const std::string& context);

nlohmann::json joint_to_json(const JointModel& model);
JointModel joint_from_json(const nlohmann::json& j);

}  // namespace artkin
