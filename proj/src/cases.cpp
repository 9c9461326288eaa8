#include <sstream>

#include "mfoc/app.hpp"

namespace mfoc::app {

ProblemConfig builtin_case(int number, Algorithm algorithm) {
  ProblemConfig c;
  c.solver.algorithm = algorithm;
  const bool gradient = algorithm == Algorithm::Gradient;
  switch (number) {
    case 1:
      c.functional.name = "wasserstein2";
      c.functional.target = {{-2.0, 1.0 / 3}, {0.0, 1.0 / 3}, {2.0, 1.0 / 3}};
      c.functional.wasserstein_root = true;
      c.solver.max_iterations = 70;
      break;
    case 2:
      c.functional.name = "mean_plus_beta_std";
      c.functional.beta = -2.0;
      c.solver.max_iterations = gradient ? 10 : 14;
      break;
    case 3:
      c.functional.name = "mean_plus_beta_std";
      c.functional.beta = 2.0;
      c.solver.max_iterations = gradient ? 10 : 14;
      break;
    case 4:
      c.dynamics = "risk_control";
      c.functional.name = "cvar";
      c.functional.beta = 0.95;
      c.solver.max_iterations = 30;
      break;
    default:
      throw ConfigError("unknown built-in case " + std::to_string(number) + " (expected 1-4)");
  }
  c.output_dir = "out/case" + std::to_string(number) + (gradient ? "_gradient" : "_penalized");
  return c;
}

std::string list_cases() {
  std::ostringstream os;
  os << "case1: wasserstein2 target (-2,0,2)/3, chi = d_2(m, target), dynamics drift_control, X0=0\n"
     << "case2: mean_plus_beta_std beta=-2 (convex), dynamics drift_control, X0=0\n"
     << "case3: mean_plus_beta_std beta=2 (concave), dynamics drift_control, X0=0\n"
     << "case4: cvar beta=0.95, dynamics risk_control, X0=0\n"
     << "common: T=1, dt=0.01, x in [-5,5] with dx=0.01, u in [-1,1] with du=0.05, display dy=0.2\n";
  return os.str();
}

Dynamics1D<double> make_dynamics(const ProblemConfig& c) {
  auto controls = ControlGrid<double>::with_step(c.u_min, c.u_max, c.du);
  if (c.dynamics == "drift_control") return drift_control_dynamics(std::move(controls));
  if (c.dynamics == "risk_control") return risk_control_dynamics(std::move(controls));
  throw ConfigError("unknown dynamics '" + c.dynamics + "'");
}

std::shared_ptr<const CostFunctional<double>> make_functional(const FunctionalSpec& f,
                                                              const Grid1D<double>& grid) {
  if (f.name == "mean_plus_beta_std") return mean_plus_beta_std<double>(f.beta);
  if (f.name == "variance") return variance_cost<double>();
  if (f.name == "cvar") return std::make_shared<CVaRCost<double>>(f.beta);
  if (f.name == "interaction_quadratic") return interaction_quadratic<double>();
  if (f.name == "linear") {
    const double slope = f.slope;
    return linear_cost<double>([slope](double x) { return slope * x; });
  }
  if (f.name == "wasserstein2") {
    // Target atoms are snapped onto the grid like any other law.
    const auto target = discretize_initial(grid, InitialLaw<double>{f.target});
    return std::make_shared<Wasserstein1D<double>>(
        grid, target, 2.0, f.wasserstein_root ? Wasserstein1D<double>::Mode::Root : Wasserstein1D<double>::Mode::Power);
  }
  throw ConfigError("unknown functional '" + f.name + "'");
}

Problem<double> build_problem(const ProblemConfig& c) {
  auto grid = Grid1D<double>::with_spacing(c.x_min, c.x_max, c.dx);
  auto time = TimeGrid<double>::with_step(c.horizon, c.dt);
  auto chain = std::make_shared<const ControlledChain<double>>(grid, make_dynamics(c), time);
  auto m0 = discretize_initial(grid, c.initial);
  return {chain, std::move(m0), make_functional(c.functional, grid), std::nullopt};
}

}  // namespace mfoc::app
