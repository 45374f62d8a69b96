#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "popmfg/commands.hpp"

namespace {

struct Invocation {
  std::string config;
  std::string out = ".";
};

void add_command(CLI::App& app, const std::string& name, const std::string& help,
                 Invocation& inv) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--config", inv.config, "experiment JSON")->required();
  sub->add_option("--out", inv.out, "output directory (created if missing)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal strategy revision in population games via finite-state mean field games"};
  app.require_subcommand(1);
  Invocation inv;
  add_command(app, "solve", "run the damped fixed-point solver; writes trajectory and error CSVs", inv);
  add_command(app, "compare", "optimal protocol vs Smith dynamics from the same start", inv);
  add_command(app, "agents", "finite-population simulation vs the mean-field ODE", inv);
  add_command(app, "analyze", "equilibrium, contractiveness, correlation and horizon diagnostics", inv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : popmfg::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const popmfg::ExperimentConfig cfg = popmfg::load_config(inv.config);
    const std::filesystem::path out(inv.out);
    if (command == "solve") {
      popmfg::run_solve(cfg, out, std::cout);
    } else if (command == "compare") {
      popmfg::run_compare(cfg, out, std::cout);
    } else if (command == "agents") {
      popmfg::run_agents(cfg, out, std::cout);
    } else {
      popmfg::run_analyze(cfg, out, std::cout, popmfg::threads_from_env());
    }
  } catch (const std::exception& e) {
    std::cerr << "popmfg " << command << ": " << e.what() << '\n';
    return popmfg::exit_code_for(e);
  }
  return popmfg::kExitOk;
}
