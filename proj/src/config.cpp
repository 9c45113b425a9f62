#include "fescycle/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fescycle/errors.hpp"
#include "fescycle/search.hpp"

namespace fescycle {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail("unknown key \"" + prefix + item.key() + "\"");
  }
}

const json* section(const json& obj, const std::string& prefix,
                    const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) return nullptr;
  if (!it->is_object()) fail(prefix + key + ": expected an object");
  return &*it;
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where + ": expected a number");
  return v.get<double>();
}

void load_num(const json& obj, const std::string& prefix, const char* key,
              double& target) {
  const auto it = obj.find(key);
  if (it != obj.end()) target = as_number(*it, prefix + key);
}

void load_bool(const json& obj, const std::string& prefix, const char* key,
               bool& target) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_boolean()) fail(prefix + std::string(key) + ": expected a bool");
  target = it->get<bool>();
}

Scenario scenario_from_json(const json& root) {
  if (!root.is_object()) fail("top level: expected an object");
  check_keys(root, "",
             {"geometry", "dynamics", "gains", "trajectory", "initial",
              "step_size", "duration", "max_revolutions", "analysis"});

  Scenario s;
  if (const json* g = section(root, "", "geometry")) {
    check_keys(*g, "geometry.",
               {"thigh_length", "shank_length", "crank_length", "hip_offset_x",
                "hip_offset_y"});
    load_num(*g, "geometry.", "thigh_length", s.geometry.thigh_length);
    load_num(*g, "geometry.", "shank_length", s.geometry.shank_length);
    load_num(*g, "geometry.", "crank_length", s.geometry.crank_length);
    load_num(*g, "geometry.", "hip_offset_x", s.geometry.hip_offset_x);
    load_num(*g, "geometry.", "hip_offset_y", s.geometry.hip_offset_y);
  }
  if (const json* d = section(root, "", "dynamics")) {
    check_keys(*d, "dynamics.",
               {"flywheel_inertia", "thigh_mass", "shank_mass",
                "thigh_com_ratio", "shank_com_ratio", "thigh_inertia",
                "shank_inertia", "gravity", "crank_damping", "passive_tanh",
                "passive_linear", "muscle_gain_nominal", "muscle_gain_min",
                "muscle_gain_max", "muscle_gain_angle_scaled",
                "disturbance_amplitude", "disturbance_frequency",
                "disturbance_phase"});
    load_num(*d, "dynamics.", "flywheel_inertia", s.dynamics.flywheel_inertia);
    load_num(*d, "dynamics.", "thigh_mass", s.dynamics.thigh_mass);
    load_num(*d, "dynamics.", "shank_mass", s.dynamics.shank_mass);
    load_num(*d, "dynamics.", "thigh_com_ratio", s.dynamics.thigh_com_ratio);
    load_num(*d, "dynamics.", "shank_com_ratio", s.dynamics.shank_com_ratio);
    load_num(*d, "dynamics.", "thigh_inertia", s.dynamics.thigh_inertia);
    load_num(*d, "dynamics.", "shank_inertia", s.dynamics.shank_inertia);
    load_num(*d, "dynamics.", "gravity", s.dynamics.gravity);
    load_num(*d, "dynamics.", "crank_damping", s.dynamics.crank_damping);
    load_num(*d, "dynamics.", "passive_tanh", s.dynamics.passive_tanh);
    load_num(*d, "dynamics.", "passive_linear", s.dynamics.passive_linear);
    load_num(*d, "dynamics.", "muscle_gain_nominal",
             s.dynamics.muscle_gain_nominal);
    load_num(*d, "dynamics.", "muscle_gain_min", s.dynamics.muscle_gain_min);
    load_num(*d, "dynamics.", "muscle_gain_max", s.dynamics.muscle_gain_max);
    load_bool(*d, "dynamics.", "muscle_gain_angle_scaled",
              s.dynamics.muscle_gain_angle_scaled);
    load_num(*d, "dynamics.", "disturbance_amplitude",
             s.dynamics.disturbance_amplitude);
    load_num(*d, "dynamics.", "disturbance_frequency",
             s.dynamics.disturbance_frequency);
    load_num(*d, "dynamics.", "disturbance_phase",
             s.dynamics.disturbance_phase);
  }
  if (const json* g = section(root, "", "gains")) {
    check_keys(*g, "gains.",
               {"alpha", "k1", "k2", "k3", "k4", "epsilon", "boundary_layer"});
    load_num(*g, "gains.", "alpha", s.gains.alpha);
    load_num(*g, "gains.", "k1", s.gains.k1);
    load_num(*g, "gains.", "k2", s.gains.k2);
    load_num(*g, "gains.", "k3", s.gains.k3);
    load_num(*g, "gains.", "k4", s.gains.k4);
    load_num(*g, "gains.", "boundary_layer", s.gains.boundary_layer);
    if (const auto it = g->find("epsilon"); it != g->end()) {
      if (it->is_string()) {
        if (it->get<std::string>() != "half-max")
          fail("gains.epsilon: expected a number or \"half-max\"");
        try {
          s.gains.epsilon = 0.5 * max_abs_torque_ratio(s.geometry);
        } catch (const Error& e) {
          fail(std::string("gains.epsilon: cannot resolve \"half-max\": ") +
               e.what());
        }
      } else {
        s.gains.epsilon = as_number(*it, "gains.epsilon");
      }
    }
  }
  if (const json* t = section(root, "", "trajectory")) {
    check_keys(*t, "trajectory.",
               {"cadence_target", "ramp_rate", "start_time", "start_angle"});
    load_num(*t, "trajectory.", "cadence_target", s.trajectory.cadence_target);
    load_num(*t, "trajectory.", "ramp_rate", s.trajectory.ramp_rate);
    load_num(*t, "trajectory.", "start_time", s.trajectory.start_time);
    load_num(*t, "trajectory.", "start_angle", s.trajectory.start_angle);
  }
  if (const json* i = section(root, "", "initial")) {
    check_keys(*i, "initial.", {"angle", "speed"});
    load_num(*i, "initial.", "angle", s.initial.angle);
    load_num(*i, "initial.", "speed", s.initial.speed);
  }
  load_num(root, "", "step_size", s.step_size);
  load_num(root, "", "duration", s.duration);
  load_num(root, "", "max_revolutions", s.max_revolutions);
  if (const json* a = section(root, "", "analysis")) {
    check_keys(*a, "analysis.",
               {"speed_domain", "z_domain", "z_reference", "dt_max_off",
                "settle_periods", "sat_voltage"});
    load_num(*a, "analysis.", "speed_domain", s.analysis.speed_domain);
    load_num(*a, "analysis.", "z_domain", s.analysis.z_domain);
    load_num(*a, "analysis.", "z_reference", s.analysis.z_reference);
    load_num(*a, "analysis.", "dt_max_off", s.analysis.dt_max_off);
    load_num(*a, "analysis.", "settle_periods", s.analysis.settle_periods);
    load_num(*a, "analysis.", "sat_voltage", s.analysis.sat_voltage);
  }
  return s;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop =
        e.byte > 0 ? std::min(text.size(), static_cast<std::size_t>(e.byte) - 1)
                   : 0;
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
         e.what());
  }

  Scenario s = scenario_from_json(root);
  validate_scenario(s);
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  json root;
  root["geometry"] = {{"thigh_length", s.geometry.thigh_length},
                      {"shank_length", s.geometry.shank_length},
                      {"crank_length", s.geometry.crank_length},
                      {"hip_offset_x", s.geometry.hip_offset_x},
                      {"hip_offset_y", s.geometry.hip_offset_y}};
  root["dynamics"] = {
      {"flywheel_inertia", s.dynamics.flywheel_inertia},
      {"thigh_mass", s.dynamics.thigh_mass},
      {"shank_mass", s.dynamics.shank_mass},
      {"thigh_com_ratio", s.dynamics.thigh_com_ratio},
      {"shank_com_ratio", s.dynamics.shank_com_ratio},
      {"thigh_inertia", s.dynamics.thigh_inertia},
      {"shank_inertia", s.dynamics.shank_inertia},
      {"gravity", s.dynamics.gravity},
      {"crank_damping", s.dynamics.crank_damping},
      {"passive_tanh", s.dynamics.passive_tanh},
      {"passive_linear", s.dynamics.passive_linear},
      {"muscle_gain_nominal", s.dynamics.muscle_gain_nominal},
      {"muscle_gain_min", s.dynamics.muscle_gain_min},
      {"muscle_gain_max", s.dynamics.muscle_gain_max},
      {"muscle_gain_angle_scaled", s.dynamics.muscle_gain_angle_scaled},
      {"disturbance_amplitude", s.dynamics.disturbance_amplitude},
      {"disturbance_frequency", s.dynamics.disturbance_frequency},
      {"disturbance_phase", s.dynamics.disturbance_phase}};
  root["gains"] = {{"alpha", s.gains.alpha},   {"k1", s.gains.k1},
                   {"k2", s.gains.k2},         {"k3", s.gains.k3},
                   {"k4", s.gains.k4},         {"epsilon", s.gains.epsilon},
                   {"boundary_layer", s.gains.boundary_layer}};
  root["trajectory"] = {{"cadence_target", s.trajectory.cadence_target},
                        {"ramp_rate", s.trajectory.ramp_rate},
                        {"start_time", s.trajectory.start_time},
                        {"start_angle", s.trajectory.start_angle}};
  root["initial"] = {{"angle", s.initial.angle}, {"speed", s.initial.speed}};
  root["step_size"] = s.step_size;
  root["duration"] = s.duration;
  root["max_revolutions"] = s.max_revolutions;
  root["analysis"] = {{"speed_domain", s.analysis.speed_domain},
                      {"z_domain", s.analysis.z_domain},
                      {"z_reference", s.analysis.z_reference},
                      {"dt_max_off", s.analysis.dt_max_off},
                      {"settle_periods", s.analysis.settle_periods},
                      {"sat_voltage", s.analysis.sat_voltage}};
  return root.dump(2) + "\n";
}

Scenario default_scenario() {
  Scenario s;
  s.geometry.thigh_length = 0.40;
  s.geometry.shank_length = 0.43;
  s.geometry.crank_length = 0.17;
  s.geometry.hip_offset_x = 0.60;
  s.geometry.hip_offset_y = 0.12;

  s.dynamics.flywheel_inertia = 0.8;
  s.dynamics.thigh_mass = 8.0;
  s.dynamics.shank_mass = 4.5;
  s.dynamics.thigh_com_ratio = 0.433;
  s.dynamics.shank_com_ratio = 0.45;
  s.dynamics.thigh_inertia = 0.15;
  s.dynamics.shank_inertia = 0.07;
  s.dynamics.crank_damping = 0.3;
  s.dynamics.passive_tanh = 1.0;
  s.dynamics.passive_linear = 0.15;
  s.dynamics.muscle_gain_nominal = 1.0;
  s.dynamics.muscle_gain_min = 0.5;
  s.dynamics.muscle_gain_max = 2.0;
  s.dynamics.disturbance_amplitude = 0.5;
  s.dynamics.disturbance_frequency = 1.0;

  // Certified gain set for this model, from suggest_certified_gains with 5%
  // headroom (regenerate whenever the model numbers change).
  s.gains.alpha = 7.0;
  s.gains.k1 = 47.463446497259604;
  s.gains.k2 = 3771.798803705613;
  s.gains.k3 = 0.1101360413891061;
  s.gains.k4 = 0.0013983498831858822;
  s.gains.epsilon = 0.5 * max_abs_torque_ratio(s.geometry);

  s.trajectory.cadence_target = 3.665;
  s.trajectory.ramp_rate = 1.0;

  // Start at the deepest point of the right stimulation region, at rest, with
  // the desired angle aligned so the initial error is zero.
  const double q0 = grid_golden_max(
      [&](double q) { return -torque_transfer_ratio(s.geometry, q, Side::Right); },
      0.0, 6.283185307179586, 4096, 1e-10);
  s.initial.angle = q0;
  s.initial.speed = 0.0;
  s.trajectory.start_angle = q0;

  s.step_size = 1e-4;
  s.duration = 0.0;
  s.max_revolutions = 90.0;

  s.analysis.speed_domain = 8.0;
  s.analysis.z_domain = 4.0;
  s.analysis.z_reference = 0.1;
  s.analysis.dt_max_off = 0.5;
  return s;
}

}  // namespace fescycle
