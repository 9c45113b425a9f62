#include "fescycle/csvio.hpp"

#include <cstdio>

namespace fescycle {

std::string region_name(RegionTag tag) {
  switch (tag) {
    case RegionTag::RightStim:
      return "right_stim";
    case RegionTag::LeftStim:
      return "left_stim";
    default:
      return "uncontrolled";
  }
}

std::string format_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const SimulationTrace& trace) {
  out << "t,q,qdot,q_des,qdot_des,e1,e1dot,e2,energy,u_right,u_left,region\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << format_float(trace.t[i]) << ',' << format_float(trace.q[i]) << ','
        << format_float(trace.qdot[i]) << ',' << format_float(trace.q_des[i])
        << ',' << format_float(trace.qdot_des[i]) << ','
        << format_float(trace.e1[i]) << ',' << format_float(trace.e1dot[i])
        << ',' << format_float(trace.e2[i]) << ','
        << format_float(trace.energy[i]) << ','
        << format_float(trace.u_right[i]) << ','
        << format_float(trace.u_left[i]) << ',' << region_name(trace.region[i])
        << '\n';
  }
}

void write_schedule_csv(std::ostream& out,
                        const std::vector<SwitchCycle>& schedule) {
  out << "n,t_on,q_on,t_off,q_off\n";
  for (const SwitchCycle& c : schedule) {
    out << c.index << ',' << format_float(c.t_on) << ','
        << format_float(c.q_on) << ',' << format_float(c.t_off) << ','
        << format_float(c.q_off) << '\n';
  }
}

void write_pattern_csv(std::ostream& out, const std::vector<PatternRow>& rows) {
  out << "q,transfer_right,transfer_left,region\n";
  for (const PatternRow& r : rows) {
    out << format_float(r.q) << ',' << format_float(r.transfer_right) << ','
        << format_float(r.transfer_left) << ',' << region_name(r.region)
        << '\n';
  }
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::string& param,
                     const std::vector<SweepRow>& rows) {
  out << param << ",certified,d,q_dot_crit,steady_max_z,controlled_measure,"
         "error\n";
  for (const SweepRow& r : rows) {
    out << format_float(r.value) << ',' << (r.certified ? "yes" : "no") << ','
        << format_float(r.d_radius) << ',' << format_float(r.q_dot_crit) << ','
        << format_float(r.steady_max_z) << ','
        << format_float(r.controlled_measure) << ',' << quoted(r.error)
        << '\n';
  }
}

}  // namespace fescycle
