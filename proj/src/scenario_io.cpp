#include "tcoord/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace tcoord {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw SchemaError(path + ": " + what);
}

const json& require(const json& node, const char* key,
                    const std::string& path) {
  const auto it = node.find(key);
  if (it == node.end()) {
    fail(path + "." + key, "missing");
  }
  return *it;
}

double as_number(const json& node, const std::string& path) {
  if (!node.is_number()) {
    fail(path, "expected a number");
  }
  return node.get<double>();
}

int as_int(const json& node, const std::string& path) {
  if (!node.is_number_integer()) {
    fail(path, "expected an integer");
  }
  return node.get<int>();
}

bool as_bool(const json& node, const std::string& path) {
  if (!node.is_boolean()) {
    fail(path, "expected a boolean");
  }
  return node.get<bool>();
}

std::string as_string(const json& node, const std::string& path) {
  if (!node.is_string()) {
    fail(path, "expected a string");
  }
  return node.get<std::string>();
}

Eigen::Vector3d as_vec3(const json& node, const std::string& path) {
  if (!node.is_array() || node.size() != 3) {
    fail(path, "expected an array of 3 numbers");
  }
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    v(i) = as_number(node[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Eigen::VectorXd as_vector(const json& node, const std::string& path) {
  if (!node.is_array()) {
    fail(path, "expected an array of numbers");
  }
  Eigen::VectorXd v(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) {
    v(static_cast<int>(i)) =
        as_number(node[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

template <typename T>
T opt(const json& node, const char* key, const std::string& path, T fallback,
      T (*reader)(const json&, const std::string&)) {
  const auto it = node.find(key);
  if (it == node.end()) {
    return fallback;
  }
  return reader(*it, path + "." + key);
}

Topology parse_topology(const json& node, std::string* kind_out) {
  const std::string kind = as_string(require(node, "kind", "topology"),
                                     "topology.kind");
  const int n = as_int(require(node, "n", "topology"), "topology.n");
  *kind_out = kind;
  if (kind == "complete") return Topology::complete(n);
  if (kind == "path") return Topology::path(n);
  if (kind == "ring") return Topology::ring(n);
  if (kind == "custom") {
    const json& edges = require(node, "edges", "topology");
    if (!edges.is_array()) {
      fail("topology.edges", "expected an array of [i, j] pairs");
    }
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::string path = "topology.edges[" + std::to_string(e) + "]";
      if (!edges[e].is_array() || edges[e].size() != 2) {
        fail(path, "expected an [i, j] pair");
      }
      pairs.emplace_back(as_int(edges[e][0], path + "[0]"),
                         as_int(edges[e][1], path + "[1]"));
    }
    return Topology::custom(n, pairs);
  }
  fail("topology.kind", "unknown kind '" + kind +
                            "' (complete, path, ring, custom)");
}

DesiredTrajectory parse_trajectory(const json& node, const std::string& path) {
  const std::string kind = as_string(require(node, "kind", path),
                                     path + ".kind");
  if (kind == "circle") {
    return DesiredTrajectory::circle(
        as_vec3(require(node, "center", path), path + ".center"),
        as_number(require(node, "radius", path), path + ".radius"),
        as_number(require(node, "angular_rate", path), path + ".angular_rate"),
        opt(node, "phase", path, 0.0, as_number),
        as_number(require(node, "duration", path), path + ".duration"));
  }
  if (kind == "line") {
    return DesiredTrajectory::line(
        as_vec3(require(node, "start", path), path + ".start"),
        as_vec3(require(node, "end", path), path + ".end"),
        as_number(require(node, "duration", path), path + ".duration"));
  }
  if (kind == "composite") {
    const json& segments = require(node, "segments", path);
    if (!segments.is_array() || segments.empty()) {
      fail(path + ".segments", "expected a non-empty array");
    }
    std::vector<DesiredTrajectory::Segment> parsed;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const std::string seg_path =
          path + ".segments[" + std::to_string(s) + "]";
      DesiredTrajectory::Segment seg;
      seg.gamma_start = as_number(require(segments[s], "gamma_start", seg_path),
                                  seg_path + ".gamma_start");
      seg.gamma_end = as_number(require(segments[s], "gamma_end", seg_path),
                                seg_path + ".gamma_end");
      seg.start = as_vec3(require(segments[s], "start", seg_path),
                          seg_path + ".start");
      seg.end = as_vec3(require(segments[s], "end", seg_path),
                        seg_path + ".end");
      parsed.push_back(seg);
    }
    return DesiredTrajectory::composite(std::move(parsed));
  }
  fail(path + ".kind",
       "unknown kind '" + kind + "' (circle, line, composite)");
}

CostParams parse_cost(const json& node) {
  CostParams cost;
  const std::string variant = opt(node, "variant", "mpc.cost",
                                  std::string("consensus"), as_string);
  if (variant == "consensus") {
    cost.variant = CostVariant::kConsensus;
  } else if (variant == "ordered") {
    cost.variant = CostVariant::kOrderedSeparation;
  } else if (variant == "race") {
    cost.variant = CostVariant::kRace;
  } else {
    fail("mpc.cost.variant",
         "unknown variant '" + variant + "' (consensus, ordered, race)");
  }
  cost.separation_delta = opt(node, "separation_delta", "mpc.cost", 0.0,
                              as_number);
  cost.gate_lo = opt(node, "gate_lo", "mpc.cost", 0.0, as_number);
  cost.gate_hi = opt(node, "gate_hi", "mpc.cost", 0.0, as_number);
  if (node.contains("psi")) {
    cost.psi = as_vector(node["psi"], "mpc.cost.psi");
  }
  cost.normalize = opt(node, "normalize", "mpc.cost", false, as_bool);
  cost.tie_tolerance = opt(node, "tie_tolerance", "mpc.cost", 0.0, as_number);
  return cost;
}

DisturbanceModel parse_disturbance(const json& node) {
  DisturbanceModel model;
  const std::string kind = as_string(require(node, "kind", "disturbance"),
                                     "disturbance.kind");
  if (kind == "none") {
    model.kind = DisturbanceModel::Kind::kNone;
  } else if (kind == "synthetic") {
    model.kind = DisturbanceModel::Kind::kSynthetic;
  } else if (kind == "tracker") {
    model.kind = DisturbanceModel::Kind::kTracker;
  } else {
    fail("disturbance.kind",
         "unknown kind '" + kind + "' (none, synthetic, tracker)");
  }
  model.magnitude = opt(node, "magnitude", "disturbance", 0.0, as_number);
  model.nu = opt(node, "nu", "disturbance", 1.0, as_number);
  if (node.contains("initial_error")) {
    const Eigen::VectorXd e =
        as_vector(node["initial_error"], "disturbance.initial_error");
    model.initial_error.assign(e.data(), e.data() + e.size());
  }
  if (node.contains("impulses")) {
    const json& impulses = node["impulses"];
    if (!impulses.is_array()) {
      fail("disturbance.impulses", "expected an array");
    }
    for (std::size_t i = 0; i < impulses.size(); ++i) {
      const std::string path =
          "disturbance.impulses[" + std::to_string(i) + "]";
      DisturbanceModel::Impulse impulse;
      impulse.step =
          as_int(require(impulses[i], "step", path), path + ".step");
      impulse.agent =
          as_int(require(impulses[i], "agent", path), path + ".agent");
      impulse.along_track = as_number(
          require(impulses[i], "along_track", path), path + ".along_track");
      model.impulses.push_back(impulse);
    }
  }
  return model;
}

Scenario parse_scenario(const json& root) {
  if (!root.is_object()) {
    fail("(document)", "expected a JSON object");
  }
  const int schema = as_int(require(root, "schema", "(document)"), "schema");
  if (schema != 1) {
    fail("schema", "unsupported version " + std::to_string(schema));
  }

  Scenario scenario;
  scenario.name = opt(root, "name", "(document)", std::string(), as_string);
  scenario.topology = parse_topology(require(root, "topology", "(document)"),
                                     &scenario.topology_kind);

  const json& trajectories = require(root, "trajectories", "(document)");
  if (!trajectories.is_array()) {
    fail("trajectories", "expected an array");
  }
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    scenario.trajectories.push_back(parse_trajectory(
        trajectories[i], "trajectories[" + std::to_string(i) + "]"));
  }

  const json& bounds = require(root, "bounds", "(document)");
  scenario.bounds.v_min = as_number(require(bounds, "v_min", "bounds"),
                                    "bounds.v_min");
  scenario.bounds.v_max = as_number(require(bounds, "v_max", "bounds"),
                                    "bounds.v_max");
  scenario.bounds.v_d_min = as_number(require(bounds, "v_d_min", "bounds"),
                                      "bounds.v_d_min");
  scenario.bounds.v_d_max = as_number(require(bounds, "v_d_max", "bounds"),
                                      "bounds.v_d_max");
  scenario.bounds.a_max = as_number(require(bounds, "a_max", "bounds"),
                                    "bounds.a_max");
  scenario.bounds.a_d_max = as_number(require(bounds, "a_d_max", "bounds"),
                                      "bounds.a_d_max");

  const json& mpc = require(root, "mpc", "(document)");
  scenario.mpc.weight_sync = as_number(require(mpc, "weight_sync", "mpc"),
                                       "mpc.weight_sync");
  scenario.mpc.weight_rate = as_number(require(mpc, "weight_rate", "mpc"),
                                       "mpc.weight_rate");
  scenario.mpc.weight_effort = as_number(require(mpc, "weight_effort", "mpc"),
                                         "mpc.weight_effort");
  scenario.mpc.horizon = as_int(require(mpc, "horizon", "mpc"), "mpc.horizon");
  scenario.mpc.step = as_number(require(mpc, "step", "mpc"), "mpc.step");
  scenario.mpc.beta = opt(mpc, "beta", "mpc", 1.0, as_number);
  scenario.mpc.delta_reg = opt(mpc, "delta_reg", "mpc", 1e-6, as_number);
  scenario.mpc.closed_form_k1 = opt(mpc, "closed_form_k1", "mpc", false,
                                    as_bool);
  if (mpc.contains("cost")) {
    if (!mpc["cost"].is_object()) {
      fail("mpc.cost", "expected an object");
    }
    scenario.mpc.cost = parse_cost(mpc["cost"]);
  }

  const json& initial = require(root, "initial", "(document)");
  scenario.gamma0 = as_vector(require(initial, "gamma", "initial"),
                              "initial.gamma");
  if (initial.contains("gamma_rate")) {
    scenario.gamma_rate0 = as_vector(initial["gamma_rate"],
                                     "initial.gamma_rate");
  } else {
    scenario.gamma_rate0 = Eigen::VectorXd::Ones(scenario.gamma0.size());
  }

  scenario.duration = as_number(require(root, "duration", "(document)"),
                                "duration");
  if (root.contains("disturbance")) {
    if (!root["disturbance"].is_object()) {
      fail("disturbance", "expected an object");
    }
    scenario.disturbance = parse_disturbance(root["disturbance"]);
  }
  scenario.link_drop_probability =
      opt(root, "link_drop_probability", "(document)", 0.0, as_number);
  if (root.contains("seed")) {
    const json& seed = root["seed"];
    if (!seed.is_number_integer() && !seed.is_number_unsigned()) {
      fail("seed", "expected an integer");
    }
    scenario.seed = seed.get<std::uint64_t>();
  }
  scenario.consensus_epsilon =
      opt(root, "consensus_epsilon", "(document)", 0.01, as_number);
  scenario.collision_threshold =
      opt(root, "collision_threshold", "(document)", 1.0, as_number);
  return scenario;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text,
                                 const std::vector<std::string>& overrides) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("(document): not valid JSON: ") + e.what());
  }
  for (const std::string& assignment : overrides) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw SchemaError("override '" + assignment +
                        "': expected dotted.path=value");
    }
    std::string pointer = "/" + assignment.substr(0, eq);
    for (auto& c : pointer) {
      if (c == '.') c = '/';
    }
    const std::string value = assignment.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::parse_error&) {
      parsed = value;  // bare strings stay strings
    }
    try {
      root[json::json_pointer(pointer)] = parsed;
    } catch (const json::exception& e) {
      throw SchemaError("override '" + assignment + "': " + e.what());
    }
  }
  return parse_scenario(root);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Scenario load_scenario(const std::string& path,
                       const std::vector<std::string>& overrides) {
  return scenario_from_json_text(read_text_file(path), overrides);
}

std::string scenario_digest(const std::string& text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx",
                static_cast<unsigned long long>(hash));
  return out;
}

}  // namespace tcoord
