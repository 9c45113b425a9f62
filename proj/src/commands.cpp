#include "fescycle/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <numbers>
#include <sstream>

#include "fescycle/analysis.hpp"
#include "fescycle/config.hpp"
#include "fescycle/errors.hpp"
#include "fescycle/simulator.hpp"

namespace fescycle {
namespace {

int classify(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const ClosureViolation*>(&e) ||
      dynamic_cast<const EpsilonTooLarge*>(&e) ||
      dynamic_cast<const SingularConfiguration*>(&e))
    return 2;
  if (dynamic_cast<const EscapeDetected*>(&e) ||
      dynamic_cast<const NonForwardProgress*>(&e))
    return 3;
  return 4;
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& body) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name,
                    std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write to output directory " + dir);
  out << body;
}

Scenario load_with_overrides(const CommandOptions& opt) {
  Scenario s = load_scenario(opt.config_path);
  if (opt.steps > 0) {
    s.duration = static_cast<double>(opt.steps) * s.step_size;
    s.max_revolutions = 0.0;
  }
  return s;
}

}  // namespace

std::vector<PatternRow> pattern_rows(const RiderGeometry& geom,
                                     const RegionMap& regions,
                                     int grid_points) {
  const auto dp = dead_points(geom);
  std::vector<double> qs(grid_points);
  for (int i = 0; i < grid_points; ++i)
    qs[i] = wrap_angle(dp[0] + 2.0 * std::numbers::pi * i / grid_points);
  std::sort(qs.begin(), qs.end());
  std::vector<PatternRow> rows;
  rows.reserve(qs.size());
  for (double q : qs) {
    PatternRow r;
    r.q = q;
    r.transfer_right = torque_transfer_ratio(geom, q, Side::Right);
    r.transfer_left = torque_transfer_ratio(geom, q, Side::Left);
    r.region = regions.tag_at(q);
    rows.push_back(r);
  }
  return rows;
}

int cmd_simulate(const CommandOptions& opt, std::ostream& diag) {
  try {
    const Scenario s = load_with_overrides(opt);
    const SimulationTrace trace = simulate(s);

    std::ostringstream tr, sch;
    write_trace_csv(tr, trace);
    write_schedule_csv(sch, trace.schedule);
    write_file(opt.out_dir, "trace.csv", tr.str());
    write_file(opt.out_dir, "schedule.csv", sch.str());

    // Cadence error band over the last tenth of the run.
    double lo = 0.0, hi = 0.0;
    if (trace.size() > 0) {
      const std::size_t first = trace.size() - 1 - (trace.size() - 1) / 10;
      lo = hi = trace.qdot[first] - trace.qdot_des[first];
      for (std::size_t i = first; i < trace.size(); ++i) {
        const double err = trace.qdot[i] - trace.qdot_des[i];
        lo = std::min(lo, err);
        hi = std::max(hi, err);
      }
    }
    std::ostringstream sum;
    sum << "revolutions: " << format_float(trace.revolutions) << "\n"
        << "switch cycles: " << trace.schedule.size() << "\n"
        << "cadence error band (last tenth): [" << format_float(lo) << ", "
        << format_float(hi) << "] rad/s\n"
        << "saturation events: " << trace.saturation_events.size() << "\n";
    write_file(opt.out_dir, "summary.txt", sum.str());
    diag << sum.str();
    return 0;
  } catch (const Error& e) {
    diag << "error: " << e.what() << "\n";
    return classify(e);
  }
}

int cmd_certify(const CommandOptions& opt, std::ostream& diag) {
  try {
    const Scenario s = load_scenario(opt.config_path);
    const Certificate cert = certify_scenario(s);
    const std::string report = render_certificate(cert);
    write_file(opt.out_dir, "certificate.txt", report);
    diag << report;
    if (cert.certified_ok) return 0;
    std::string first = "no condition evaluated";
    for (const GainCheck& c : cert.gain_checks)
      if (!c.pass) {
        first = c.name;
        break;
      }
    if (first == "no condition evaluated")
      for (const CertificateCheck& c : cert.checks)
        if (!c.pass) {
          first = c.name;
          break;
        }
    diag << "first failed condition: " << first << "\n";
    return 4;
  } catch (const Error& e) {
    diag << "error: " << e.what() << "\n";
    return classify(e);
  }
}

int cmd_pattern(const CommandOptions& opt, std::ostream& diag) {
  try {
    const Scenario s = load_scenario(opt.config_path);
    const RegionMap regions = scenario_regions(s);
    const std::vector<PatternRow> rows = pattern_rows(s.geometry, regions, 2048);
    std::ostringstream body;
    write_pattern_csv(body, rows);
    write_file(opt.out_dir, "pattern.csv", body.str());
    diag << "pattern rows: " << rows.size() << "\n"
         << "controlled measure: "
         << format_float(regions.measure(RegionTag::RightStim) +
                         regions.measure(RegionTag::LeftStim))
         << " rad\n";
    return 0;
  } catch (const Error& e) {
    diag << "error: " << e.what() << "\n";
    return classify(e);
  }
}

namespace {

SweepRow sweep_point(const Scenario& base, const std::string& param,
                     double value) {
  SweepRow row;
  row.value = value;
  try {
    Scenario s = base;
    if (param == "epsilon")
      s.gains.epsilon = value;
    else if (param == "cadence")
      s.trajectory.cadence_target = value;
    else {  // gain: common multiplier on the robust terms
      s.gains.k1 = base.gains.k1 * value;
      s.gains.k2 = base.gains.k2 * value;
      s.gains.k3 = base.gains.k3 * value;
      s.gains.k4 = base.gains.k4 * value;
    }
    const Certificate cert = certify_scenario(s);
    row.certified = cert.certified_ok;
    row.d_radius = cert.ultimate.d_radius;
    row.q_dot_crit = cert.q_dot_crit;
    row.controlled_measure = cert.regions.measure(RegionTag::RightStim) +
                             cert.regions.measure(RegionTag::LeftStim);

    Scenario sim = s;
    sim.duration = 30.0;
    sim.max_revolutions = 0.0;
    const SimulationTrace trace = simulate(sim);
    double z_max = 0.0;
    for (std::size_t i = trace.size() / 3 * 2; i < trace.size(); ++i)
      z_max = std::max(z_max, std::hypot(trace.e1[i], trace.e2[i]));
    row.steady_max_z = z_max;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

int cmd_sweep(const CommandOptions& opt, std::ostream& diag) {
  try {
    if (opt.param != "epsilon" && opt.param != "cadence" &&
        opt.param != "gain")
      throw ConfigError("sweep parameter must be epsilon, cadence or gain");
    if (opt.grid.empty()) throw ConfigError("sweep grid is empty");
    const Scenario base = load_scenario(opt.config_path);

    std::vector<std::future<SweepRow>> pendings;
    pendings.reserve(opt.grid.size());
    for (double v : opt.grid)
      pendings.push_back(std::async(std::launch::async, sweep_point,
                                    std::cref(base), std::cref(opt.param), v));
    std::vector<SweepRow> rows;
    rows.reserve(pendings.size());
    for (auto& f : pendings) rows.push_back(f.get());

    std::ostringstream body;
    write_sweep_csv(body, opt.param, rows);
    write_file(opt.out_dir, "sweep.csv", body.str());
    diag << body.str();
    return 0;
  } catch (const Error& e) {
    diag << "error: " << e.what() << "\n";
    return classify(e);
  }
}

}  // namespace fescycle
