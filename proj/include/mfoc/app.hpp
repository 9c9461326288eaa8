#ifndef MFOC_APP_HPP
#define MFOC_APP_HPP

// Problem configuration, built-in test problems and CSV output used by the
// command-line driver.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mfoc/mfoc.hpp"

namespace mfoc::app {

struct FunctionalSpec {
  std::string name = "mean_plus_beta_std";
  double beta = -2.0;                  // mean_plus_beta_std weight or CVaR level
  double slope = 1.0;                  // linear: chi(m) = slope * E[X]
  std::vector<Atom<double>> target;    // wasserstein2
  bool wasserstein_root = true;        // d_2 (root) or d_2^2 (power)
};

struct ProblemConfig {
  std::string dynamics = "drift_control";
  double horizon = 1.0;
  double dt = 0.01;
  double x_min = -5.0, x_max = 5.0, dx = 0.01;
  double u_min = -1.0, u_max = 1.0, du = 0.05;
  InitialLaw<double> initial = PointMass<double>{0.0};
  FunctionalSpec functional;
  SolverConfig solver;
  std::filesystem::path output_dir = "out";
  double regularize_dy = 0.2;
};

/// Parses the sectioned key = value format. Errors are ConfigError with a
/// "source:line: message" prefix.
ProblemConfig parse_config(std::istream& in, const std::string& source = "<config>");
ProblemConfig load_config(const std::filesystem::path& path);

/// Writes a config in the format accepted by parse_config.
void write_config(std::ostream& out, const ProblemConfig& config);

/// Built-in test problems 1-4.
ProblemConfig builtin_case(int number, Algorithm algorithm);
std::string list_cases();

Dynamics1D<double> make_dynamics(const ProblemConfig& config);
std::shared_ptr<const CostFunctional<double>> make_functional(const FunctionalSpec& spec,
                                                              const Grid1D<double>& grid);
Problem<double> build_problem(const ProblemConfig& config);

/// CSV emission; all numbers use 17 significant digits.
void write_convergence_csv(std::ostream& out, const std::vector<IterationRecord<double>>& history);
void write_distribution_csv(std::ostream& out, const Grid1D<double>& grid,
                            const DiscreteDistribution<double>& m, const char* index_name,
                            const char* point_name);
void write_value_csv(std::ostream& out, const Grid1D<double>& grid, const ValueTable<double>& v);
void write_control_csv(std::ostream& out, const Grid1D<double>& grid, const FeedbackPolicy<double>& u);

/// Reads back a distribution CSV written by write_distribution_csv.
std::vector<double> read_distribution_csv(std::istream& in);

/// Convergence table in human-readable form.
void print_convergence_table(std::ostream& out, const std::vector<IterationRecord<double>>& history,
                             Algorithm algorithm);

struct RunOutcome {
  SolveResult<double> result;
  std::filesystem::path output_dir;
};

/// Solves the configured problem and writes every output file.
RunOutcome run_problem(const ProblemConfig& config, std::ostream& log);

}  // namespace mfoc::app

#endif  // MFOC_APP_HPP
