#include "se3kit/io.hpp"

#include <fstream>
#include <sstream>

namespace se3kit {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidInput, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) bad(std::string(what) + " must be a number");
  return j.get<double>();
}

Eigen::VectorXd vector_of(const Json& j, const char* what, Eigen::Index size = -1) {
  if (!j.is_array()) bad(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  if (size >= 0 && v.size() != size) bad(std::string(what) + " has the wrong length");
  return v;
}

Eigen::Vector3d vec3(const Json& j, const char* what) { return vector_of(j, what, 3); }

Eigen::MatrixXd matrix_of(const Json& j, const char* what, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) bad(std::string(what) + " must be square");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) = vector_of(j[static_cast<std::size_t>(i)], what, n).transpose();
  return m;
}

// Scalar, diagonal or full.
Eigen::MatrixXd gain_of(const Json& j, const char* what, Eigen::Index n) {
  if (j.is_number()) return number(j, what) * Eigen::MatrixXd::Identity(n, n);
  if (j.is_array() && !j.empty() && j[0].is_number()) return vector_of(j, what, n).asDiagonal();
  return matrix_of(j, what, n);
}

Json array_of(const Eigen::VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Json rows_of(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) j.push_back(array_of(m.row(i).transpose()));
  return j;
}

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    bad(e.what());
  }
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  return guarded([&] { return Json::parse(text); });
}

Posed pose_from_json(const Json& j) {
  return Posed(Rotationd(Eigen::Matrix3d(matrix_of(field(j, "r"), "r", 3))), vec3(field(j, "p"), "p"));
}

Json pose_to_json(const Posed& g) { return Json{{"r", rows_of(g.R())}, {"p", array_of(g.p())}}; }

ManipulatorModel model_from_json(const Json& j) {
  return guarded([&] {
    std::vector<Joint> joints;
    for (const Json& jj : field(j, "joints")) {
      const std::string type = field(jj, "type").get<std::string>();
      if (type == "revolute")
        joints.push_back(Joint::revolute(vec3(field(jj, "axis"), "axis"), vec3(field(jj, "point"), "point")));
      else if (type == "prismatic")
        joints.push_back(Joint::prismatic(vec3(field(jj, "axis"), "axis")));
      else
        bad("unknown joint type '" + type + "'");
    }
    std::vector<LinkInertia> links;
    if (j.contains("links")) {
      for (const Json& lj : j.at("links")) {
        LinkInertia link;
        link.mass = number(field(lj, "mass"), "mass");
        link.com = vec3(field(lj, "com"), "com");
        link.inertia = matrix_of(field(lj, "inertia"), "inertia", 3);
        if (lj.contains("armature")) link.armature = number(lj.at("armature"), "armature");
        links.push_back(link);
      }
    }
    const Eigen::Vector3d gravity =
        j.contains("gravity") ? vec3(j.at("gravity"), "gravity") : Eigen::Vector3d(0.0, 0.0, -9.81);
    return ManipulatorModel(std::move(joints), pose_from_json(field(j, "home")), std::move(links), gravity);
  });
}

Json model_to_json(const ManipulatorModel& model) {
  Json joints = Json::array();
  for (const Joint& jt : model.joints()) {
    const Eigen::Vector3d v = jt.twist.head<3>(), w = jt.twist.tail<3>();
    if (jt.type == JointType::Revolute)
      joints.push_back({{"type", "revolute"}, {"axis", array_of(w)}, {"point", array_of(w.cross(v))}});
    else
      joints.push_back({{"type", "prismatic"}, {"axis", array_of(v)}});
  }
  Json links = Json::array();
  for (const LinkInertia& l : model.links())
    links.push_back({{"mass", l.mass}, {"com", array_of(l.com)}, {"inertia", rows_of(l.inertia)}, {"armature", l.armature}});
  return Json{{"joints", joints}, {"home", pose_to_json(model.home())}, {"links", links},
              {"gravity", array_of(model.gravity())}};
}

FeaturedPointCloud point_cloud_from_json(const Json& j) {
  return guarded([&] {
    FeaturedPointCloud cloud;
    std::vector<int> degrees;
    for (const Json& l : field(j, "layout")) degrees.push_back(l.get<int>());
    cloud.layout = IrrepLayout(degrees);
    for (const Json& p : field(j, "points")) cloud.points.push_back(vec3(p, "point"));
    for (const Json& f : field(j, "features"))
      cloud.features.emplace_back(cloud.layout, vector_of(f, "feature", cloud.layout.dim()));
    if (cloud.features.size() != cloud.points.size()) bad("point and feature counts differ");
    return cloud;
  });
}

Json point_cloud_to_json(const FeaturedPointCloud& cloud) {
  Json points = Json::array(), features = Json::array();
  for (const auto& p : cloud.points) points.push_back(array_of(p));
  for (const auto& f : cloud.features) features.push_back(array_of(f.data));
  return Json{{"points", points}, {"layout", cloud.layout.degrees()}, {"features", features}};
}

GicGains gains_from_json(const Json& j) {
  return guarded([&] {
    GicGains g;
    if (j.contains("Kp")) g.Kp = gain_of(j.at("Kp"), "Kp", 3);
    if (j.contains("KR")) g.KR = gain_of(j.at("KR"), "KR", 3);
    if (j.contains("Kxi")) g.Kxi = gain_of(j.at("Kxi"), "Kxi", 6);
    if (j.contains("Kd")) g.Kd = gain_of(j.at("Kd"), "Kd", 6);
    g.validate();
    return g;
  });
}

namespace {

DesiredTrajectory desired_from_json(const Json& d, const ManipulatorModel& model, const Eigen::VectorXd& q0) {
  const std::string type = field(d, "type").get<std::string>();
  if (type == "at-start") return constant_pose(forward_kinematics(model, q0));
  if (type == "joint-pose") return constant_pose(forward_kinematics(model, vector_of(field(d, "q"), "q", model.dof())));
  if (type == "constant") return constant_pose(pose_from_json(field(d, "pose")));
  if (type == "circle")
    return circle_trajectory(pose_from_json(field(d, "center")), number(field(d, "radius"), "radius"),
                             number(field(d, "period"), "period"));
  if (type == "samples") {
    std::vector<double> times;
    std::vector<DesiredSample> samples;
    for (const Json& s : field(d, "samples")) {
      times.push_back(number(field(s, "t"), "t"));
      DesiredSample x;
      x.g_d = pose_from_json(field(s, "pose"));
      if (s.contains("twist")) x.V_d = vector_of(s.at("twist"), "twist", 6);
      if (s.contains("acceleration")) x.Vdot_d = vector_of(s.at("acceleration"), "acceleration", 6);
      samples.push_back(x);
    }
    return sampled_trajectory(std::move(times), std::move(samples));
  }
  bad("unknown desired trajectory type '" + type + "'");
}

}  // namespace

GicScenario scenario_from_json(const Json& j, const ManipulatorModel& model) {
  return guarded([&] {
    GicScenario sc;
    if (j.contains("name")) sc.name = j.at("name").get<std::string>();
    sc.q0 = vector_of(field(j, "q0"), "q0", model.dof());
    sc.qdot0 = j.contains("qdot0") ? vector_of(j.at("qdot0"), "qdot0", model.dof()) : Eigen::VectorXd::Zero(model.dof());
    sc.desired = desired_from_json(field(j, "desired"), model, sc.q0);
    if (j.contains("gains")) sc.gains = gains_from_json(j.at("gains"));
    if (j.contains("variant")) {
      const int v = j.at("variant").get<int>();
      if (v != 1 && v != 2) bad("variant must be 1 or 2");
      sc.variant = static_cast<GicVariant>(v);
    }
    if (j.contains("horizon")) sc.horizon = number(j.at("horizon"), "horizon");
    if (j.contains("dt")) sc.dt = number(j.at("dt"), "dt");
    if (j.contains("record_every")) sc.record_every = j.at("record_every").get<int>();
    if (j.contains("gravity")) sc.gravity = vec3(j.at("gravity"), "gravity");
    if (!(sc.horizon > 0.0) || !(sc.dt > 0.0) || sc.record_every < 1) bad("horizon, dt and record_every must be positive");
    return sc;
  });
}

}  // namespace se3kit
