#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fescycle/commands.hpp"

namespace {

bool parse_grid(const std::string& list, std::vector<double>& out) {
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    const std::string item = list.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) return false;
      out.push_back(v);
    } catch (const std::exception&) {
      return false;
    }
    pos = comma + 1;
  }
  return !out.empty();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"switched-stimulation cycling: simulation and certification"};
  app.require_subcommand(1);

  fescycle::CommandOptions opt;
  std::string grid_list;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "scenario JSON file")
        ->required();
    sub->add_option("--out", opt.out_dir, "output directory");
  };

  CLI::App* sim =
      app.add_subcommand("simulate", "run the closed loop, write trace CSVs");
  add_common(sim);
  sim->add_option("--steps", opt.steps,
                  "stop after exactly N integrator steps");

  CLI::App* cert =
      app.add_subcommand("certify", "evaluate every stability condition");
  add_common(cert);

  CLI::App* sweep =
      app.add_subcommand("sweep", "re-certify and re-run across a grid");
  add_common(sweep);
  sweep->add_option("--param", opt.param, "epsilon | cadence | gain")
      ->required();
  sweep->add_option("--grid", grid_list, "comma-separated values")->required();

  CLI::App* pattern = app.add_subcommand(
      "pattern", "transfer ratios and stimulation regions vs crank angle");
  add_common(pattern);

  CLI11_PARSE(app, argc, argv);

  if (sweep->parsed() && !parse_grid(grid_list, opt.grid)) {
    std::cerr << "error: --grid expects comma-separated numbers, got \""
              << grid_list << "\"\n";
    return 2;
  }

  try {
    if (sim->parsed()) return fescycle::cmd_simulate(opt, std::cout);
    if (cert->parsed()) return fescycle::cmd_certify(opt, std::cout);
    if (sweep->parsed()) return fescycle::cmd_sweep(opt, std::cout);
    return fescycle::cmd_pattern(opt, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
