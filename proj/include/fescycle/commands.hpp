#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fescycle/csvio.hpp"
#include "fescycle/scenario.hpp"

namespace fescycle {

struct CommandOptions {
  std::string config_path;
  std::string out_dir;        // empty writes no files
  std::string param;          // sweep: epsilon | cadence | gain
  std::vector<double> grid;   // sweep values
  long steps = 0;             // > 0 overrides the stop rule with N fixed steps
};

// Exit codes shared by all commands: 0 success, 2 configuration or geometry
// error, 3 run abandoned (escape / no forward progress), 4 any other failure
// including an uncertifiable scenario.
int cmd_simulate(const CommandOptions& opt, std::ostream& diag);
int cmd_certify(const CommandOptions& opt, std::ostream& diag);
int cmd_sweep(const CommandOptions& opt, std::ostream& diag);
int cmd_pattern(const CommandOptions& opt, std::ostream& diag);

// Transfer-ratio curves and region tags on a grid anchored at the first dead
// point (so dead points land exactly on grid rows), sorted by angle.
std::vector<PatternRow> pattern_rows(const RiderGeometry& geom,
                                     const RegionMap& regions,
                                     int grid_points);

}  // namespace fescycle
