#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "fescycle/config.hpp"
#include "fescycle/errors.hpp"
#include "fescycle/kinematics.hpp"

using namespace fescycle;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("scenario survives a serialization round trip unchanged") {
  const Scenario a = default_scenario();
  const fs::path p = write_temp("fescycle_roundtrip.json",
                                scenario_to_json(a));
  const Scenario b = load_scenario(p.string());

  CHECK(b.geometry.thigh_length == a.geometry.thigh_length);
  CHECK(b.geometry.shank_length == a.geometry.shank_length);
  CHECK(b.geometry.crank_length == a.geometry.crank_length);
  CHECK(b.geometry.hip_offset_x == a.geometry.hip_offset_x);
  CHECK(b.geometry.hip_offset_y == a.geometry.hip_offset_y);

  CHECK(b.dynamics.flywheel_inertia == a.dynamics.flywheel_inertia);
  CHECK(b.dynamics.thigh_mass == a.dynamics.thigh_mass);
  CHECK(b.dynamics.shank_mass == a.dynamics.shank_mass);
  CHECK(b.dynamics.thigh_com_ratio == a.dynamics.thigh_com_ratio);
  CHECK(b.dynamics.shank_com_ratio == a.dynamics.shank_com_ratio);
  CHECK(b.dynamics.thigh_inertia == a.dynamics.thigh_inertia);
  CHECK(b.dynamics.shank_inertia == a.dynamics.shank_inertia);
  CHECK(b.dynamics.gravity == a.dynamics.gravity);
  CHECK(b.dynamics.crank_damping == a.dynamics.crank_damping);
  CHECK(b.dynamics.passive_tanh == a.dynamics.passive_tanh);
  CHECK(b.dynamics.passive_linear == a.dynamics.passive_linear);
  CHECK(b.dynamics.muscle_gain_nominal == a.dynamics.muscle_gain_nominal);
  CHECK(b.dynamics.muscle_gain_min == a.dynamics.muscle_gain_min);
  CHECK(b.dynamics.muscle_gain_max == a.dynamics.muscle_gain_max);
  CHECK(b.dynamics.muscle_gain_angle_scaled ==
        a.dynamics.muscle_gain_angle_scaled);
  CHECK(b.dynamics.disturbance_amplitude == a.dynamics.disturbance_amplitude);
  CHECK(b.dynamics.disturbance_frequency == a.dynamics.disturbance_frequency);
  CHECK(b.dynamics.disturbance_phase == a.dynamics.disturbance_phase);

  CHECK(b.gains.alpha == a.gains.alpha);
  CHECK(b.gains.k1 == a.gains.k1);
  CHECK(b.gains.k2 == a.gains.k2);
  CHECK(b.gains.k3 == a.gains.k3);
  CHECK(b.gains.k4 == a.gains.k4);
  CHECK(b.gains.epsilon == a.gains.epsilon);
  CHECK(b.gains.boundary_layer == a.gains.boundary_layer);

  CHECK(b.trajectory.cadence_target == a.trajectory.cadence_target);
  CHECK(b.trajectory.ramp_rate == a.trajectory.ramp_rate);
  CHECK(b.trajectory.start_time == a.trajectory.start_time);
  CHECK(b.trajectory.start_angle == a.trajectory.start_angle);

  CHECK(b.initial.angle == a.initial.angle);
  CHECK(b.initial.speed == a.initial.speed);
  CHECK(b.step_size == a.step_size);
  CHECK(b.duration == a.duration);
  CHECK(b.max_revolutions == a.max_revolutions);

  CHECK(b.analysis.speed_domain == a.analysis.speed_domain);
  CHECK(b.analysis.z_domain == a.analysis.z_domain);
  CHECK(b.analysis.z_reference == a.analysis.z_reference);
  CHECK(b.analysis.dt_max_off == a.analysis.dt_max_off);
  CHECK(b.analysis.settle_periods == a.analysis.settle_periods);
  CHECK(b.analysis.sat_voltage == a.analysis.sat_voltage);
}

TEST_CASE("unknown keys are rejected with their full path") {
  const fs::path p = write_temp("fescycle_unknown.json",
                                R"({"geometry": {"thigh_len": 0.4}})");
  const std::string msg =
      error_text([&] { (void)load_scenario(p.string()); });
  CHECK(msg.find("geometry.thigh_len") != std::string::npos);
  CHECK_THROWS_AS((void)load_scenario(p.string()), ConfigError);
}

TEST_CASE("malformed JSON reports file, line and column") {
  const fs::path p = write_temp("fescycle_broken.json", "{\"geometry\": {\n");
  const std::string msg =
      error_text([&] { (void)load_scenario(p.string()); });
  CHECK(msg.find(p.string()) != std::string::npos);
  CHECK(msg.find(":2:") != std::string::npos);
  CHECK_THROWS_AS((void)load_scenario(p.string()), ConfigError);
}

TEST_CASE("missing file is a configuration error") {
  CHECK_THROWS_AS((void)load_scenario("/nonexistent/fescycle.json"),
                  ConfigError);
}

TEST_CASE("epsilon accepts the half-max shorthand") {
  const Scenario base = default_scenario();
  nlohmann::json j = nlohmann::json::parse(scenario_to_json(base));
  j["gains"]["epsilon"] = "half-max";
  const fs::path p = write_temp("fescycle_halfmax.json", j.dump());
  const Scenario s = load_scenario(p.string());
  CHECK(s.gains.epsilon ==
        doctest::Approx(0.5 * max_abs_torque_ratio(base.geometry))
            .epsilon(1e-15));

  j["gains"]["epsilon"] = "most";
  const fs::path bad = write_temp("fescycle_badeps.json", j.dump());
  CHECK_THROWS_AS((void)load_scenario(bad.string()), ConfigError);
}

TEST_CASE("type errors name the offending key") {
  nlohmann::json j = nlohmann::json::parse(scenario_to_json(default_scenario()));
  j["gains"]["k1"] = "big";
  const fs::path p = write_temp("fescycle_badtype.json", j.dump());
  const std::string msg =
      error_text([&] { (void)load_scenario(p.string()); });
  CHECK(msg.find("gains.k1") != std::string::npos);
  CHECK(msg.find("expected a number") != std::string::npos);
}

TEST_CASE("loaded scenarios pass through validation") {
  nlohmann::json base =
      nlohmann::json::parse(scenario_to_json(default_scenario()));

  SUBCASE("oversized step") {
    nlohmann::json j = base;
    j["step_size"] = 0.1;
    const fs::path p = write_temp("fescycle_badstep.json", j.dump());
    const std::string msg =
        error_text([&] { (void)load_scenario(p.string()); });
    CHECK(msg.find("step_size") != std::string::npos);
  }

  SUBCASE("start angle in the uncontrolled gap") {
    nlohmann::json j = base;
    const double dead = dead_points(default_scenario().geometry)[0];
    j["initial"]["angle"] = dead;
    const fs::path p = write_temp("fescycle_badangle.json", j.dump());
    const std::string msg =
        error_text([&] { (void)load_scenario(p.string()); });
    CHECK(msg.find("stimulation region") != std::string::npos);
  }

  SUBCASE("no stopping rule") {
    nlohmann::json j = base;
    j["duration"] = 0.0;
    j["max_revolutions"] = 0.0;
    const fs::path p = write_temp("fescycle_nostop.json", j.dump());
    const std::string msg =
        error_text([&] { (void)load_scenario(p.string()); });
    CHECK(msg.find("stopping") != std::string::npos);
  }
}
