// Command-line driver: run a configured or built-in problem, or list the
// built-in problems.
//
//   mfoc run <config>
//   mfoc run --case {1|2|3|4} [--algorithm {1|2}] [--output DIR] [--horizon T] [--max-iterations N]
//   mfoc list-cases
//
// Exit status: 0 on success, 2 on configuration errors, 3 on numeric errors.

#include <iostream>

#include <CLI11.hpp>

#include "mfoc/app.hpp"

int main(int argc, char** argv) {
  using namespace mfoc;

  CLI::App cli{"Mean-field optimal control solver for controlled 1-D diffusions"};
  cli.require_subcommand(1);

  auto* run = cli.add_subcommand("run", "solve a problem and write CSV outputs");
  std::string config_path;
  int case_number = 0;
  int algorithm = 1;
  std::string output;
  double horizon = 0;
  int max_iterations = -1;
  run->add_option("config", config_path, "problem configuration file");
  run->add_option("--case", case_number, "built-in case")->check(CLI::Range(1, 4));
  run->add_option("--algorithm", algorithm, "1 = gradient method, 2 = penalized feedback method")
      ->check(CLI::IsMember({1, 2}));
  run->add_option("--output", output, "output directory (overrides the configuration)");
  run->add_option("--horizon", horizon, "time horizon T (built-in cases only)");
  run->add_option("--max-iterations", max_iterations, "iteration budget (overrides the configuration)");

  auto* list = cli.add_subcommand("list-cases", "print the built-in problems");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    std::cout << app::list_cases();
    return 0;
  }

  app::ProblemConfig config;
  try {
    if (case_number != 0 && !config_path.empty()) throw ConfigError("give either a config file or --case");
    if (case_number != 0) {
      config = app::builtin_case(case_number, algorithm == 1 ? Algorithm::Gradient : Algorithm::Penalized);
      if (horizon > 0) config.horizon = horizon;
    } else if (!config_path.empty()) {
      config = app::load_config(config_path);
      if (run->count("--algorithm"))
        config.solver.algorithm = algorithm == 1 ? Algorithm::Gradient : Algorithm::Penalized;
      if (horizon > 0) throw ConfigError("--horizon applies to built-in cases; set dynamics.horizon instead");
    } else {
      throw ConfigError("run needs a config file or --case");
    }
    if (!output.empty()) config.output_dir = output;
    if (max_iterations >= 0) config.solver.max_iterations = max_iterations;
    config.solver.validate();
    (void)TimeGrid<double>::with_step(config.horizon, config.dt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    app::run_problem(config, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
