#pragma once

// JSON documents for models, point clouds and closed-loop scenarios.
// Malformed documents raise Error(InvalidInput).

#include <string>

#include <json.hpp>

#include "se3kit/manipulator.hpp"
#include "se3kit/plant.hpp"
#include "se3kit/steerable.hpp"

namespace se3kit {

using Json = nlohmann::json;

/// Reads a whole file; throws InvalidInput if it cannot be opened.
std::string read_text_file(const std::string& path);
Json read_json_file(const std::string& path);

/// {"r": [[3x3]], "p": [x, y, z]}
Posed pose_from_json(const Json& j);
Json pose_to_json(const Posed& g);

/// {"joints": [{"type": "revolute", "axis": [..], "point": [..]} | {"type": "prismatic", "axis": [..]}],
///  "home": pose, "links": [{"mass", "com", "inertia", "armature"?}], "gravity"?: [..]}
ManipulatorModel model_from_json(const Json& j);
Json model_to_json(const ManipulatorModel& model);

/// {"points": [[x, y, z]], "layout": [l], "features": [[..]]}
FeaturedPointCloud point_cloud_from_json(const Json& j);
Json point_cloud_to_json(const FeaturedPointCloud& cloud);

/// Scalar, diagonal list or full matrix.
GicGains gains_from_json(const Json& j);

/// {"name", "q0", "qdot0"?, "desired", "gains"?, "variant"?, "horizon"?, "dt"?,
///  "record_every"?, "gravity"?}. "desired" is one of
///   {"type": "at-start"}                       g_d = g(q0)
///   {"type": "joint-pose", "q": [..]}           g_d = g(q)
///   {"type": "constant", "pose": pose}
///   {"type": "circle", "center": pose, "radius": r, "period": T}
///   {"type": "samples", "samples": [{"t", "pose", "twist"?, "acceleration"?}]}
GicScenario scenario_from_json(const Json& j, const ManipulatorModel& model);

}  // namespace se3kit
