#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fescycle/simulator.hpp"

namespace fescycle {

// Tag spelling used in every CSV: right_stim / left_stim / uncontrolled.
std::string region_name(RegionTag tag);

// 17 significant digits, locale-independent.
std::string format_float(double v);

// One row per accepted step, header naming every trace channel.
void write_trace_csv(std::ostream& out, const SimulationTrace& trace);

// Columns n, t_on, q_on, t_off, q_off.
void write_schedule_csv(std::ostream& out,
                        const std::vector<SwitchCycle>& schedule);

struct PatternRow {
  double q = 0.0;
  double transfer_right = 0.0;
  double transfer_left = 0.0;
  RegionTag region = RegionTag::Uncontrolled;
};

void write_pattern_csv(std::ostream& out, const std::vector<PatternRow>& rows);

struct SweepRow {
  double value = 0.0;
  bool certified = false;
  double d_radius = 0.0;
  double q_dot_crit = 0.0;
  double steady_max_z = 0.0;
  double controlled_measure = 0.0;
  std::string error;  // empty on success
};

// First column is named after the swept parameter.
void write_sweep_csv(std::ostream& out, const std::string& param,
                     const std::vector<SweepRow>& rows);

}  // namespace fescycle
