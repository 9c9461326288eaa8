#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "mfoc/app.hpp"

namespace mfoc::app {

namespace {

// %.17g: round-trips every double and is locale independent for '.'.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_convergence_csv(std::ostream& out, const std::vector<IterationRecord<double>>& history) {
  out << "iteration,cost,gap,theta_or_alpha,q,wall_time_s\n";
  for (const auto& r : history) {
    out << r.iteration << ',' << num(r.cost) << ',' << num(r.gap) << ',';
    if (r.theta) out << num(*r.theta);
    else if (r.alpha) out << num(*r.alpha);
    out << ',' << r.passes << ',' << num(r.wall_time) << '\n';
  }
}

void write_distribution_csv(std::ostream& out, const Grid1D<double>& grid, const DiscreteDistribution<double>& m,
                            const char* index_name, const char* point_name) {
  out << index_name << ',' << point_name << ",m\n";
  for (Index k = 0; k < grid.size(); ++k) out << k << ',' << num(grid.point(k)) << ',' << num(m[k]) << '\n';
}

void write_value_csv(std::ostream& out, const Grid1D<double>& grid, const ValueTable<double>& v) {
  out << "j,k,x,V\n";
  for (Index j = 0; j < v.values.rows(); ++j)
    for (Index k = 0; k < grid.size(); ++k)
      out << j << ',' << k << ',' << num(grid.point(k)) << ',' << num(v.values(j, k)) << '\n';
}

void write_control_csv(std::ostream& out, const Grid1D<double>& grid, const FeedbackPolicy<double>& u) {
  out << "j,k,x,u\n";
  for (Index j = 0; j < u.n_steps(); ++j)
    for (Index k = 0; k < grid.size(); ++k)
      out << j << ',' << k << ',' << num(grid.point(k)) << ',' << num(u(j, k)) << '\n';
}

std::vector<double> read_distribution_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("distribution csv: missing header");
  std::vector<double> m;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto last = line.rfind(',');
    if (last == std::string::npos) throw std::runtime_error("distribution csv: malformed row");
    m.push_back(std::strtod(line.c_str() + last + 1, nullptr));
  }
  return m;
}

void print_convergence_table(std::ostream& out, const std::vector<IterationRecord<double>>& history,
                             Algorithm algorithm) {
  const bool gradient = algorithm == Algorithm::Gradient;
  out << std::setw(5) << "l" << std::setw(16) << "cost" << std::setw(14) << "gap" << std::setw(12)
      << (gradient ? "theta" : "alpha") << std::setw(6) << "q" << std::setw(10) << "time_s" << '\n';
  for (const auto& r : history) {
    const auto step = gradient ? r.theta : r.alpha;
    std::ostringstream s;
    if (step) s << std::setprecision(4) << *step;
    else s << '-';
    out << std::setw(5) << r.iteration << std::setw(16) << std::fixed << std::setprecision(6) << r.cost
        << std::setw(14) << std::scientific << std::setprecision(3) << r.gap << std::setw(12) << s.str()
        << std::setw(6) << r.passes << std::setw(10) << std::fixed << std::setprecision(2) << r.wall_time
        << std::defaultfloat << '\n';
  }
}

RunOutcome run_problem(const ProblemConfig& config, std::ostream& log) {
  auto problem = build_problem(config);
  const auto chain = problem.chain;
  Solver<double> solver(std::move(problem), config.solver);
  solver.set_warning_sink([&log](const std::string& w) { log << "warning: " << w << '\n'; });
  auto result = solver.solve();

  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  const auto& grid = chain->grid();
  {
    auto out = open_csv(dir / "convergence.csv");
    write_convergence_csv(out, result.history);
  }
  {
    auto out = open_csv(dir / "final_distribution.csv");
    write_distribution_csv(out, grid, result.distribution, "k", "x");
  }
  {
    const auto [coarse, smooth] = regularize(grid, result.distribution, config.regularize_dy);
    auto out = open_csv(dir / "regularized_distribution.csv");
    write_distribution_csv(out, coarse, smooth, "i", "y");
  }
  {
    auto out = open_csv(dir / "value_function.csv");
    write_value_csv(out, grid, result.value);
  }
  {
    auto out = open_csv(dir / "control.csv");
    write_control_csv(out, grid, result.policy ? *result.policy : result.greedy_policy);
  }

  print_convergence_table(log, result.history, config.solver.algorithm);
  const auto& t = result.timing;
  log << "status: " << to_string(result.status) << '\n';
  if (t.backward_count > 0 && t.forward_count > 0)
    log << "mean backward pass: " << std::fixed << std::setprecision(3) << t.backward_seconds / t.backward_count
        << " s over " << t.backward_count << ", mean forward pass: " << t.forward_seconds / t.forward_count
        << " s over " << t.forward_count << std::defaultfloat << '\n';
  log << "outputs written to " << dir.string() << '\n';
  return {std::move(result), dir};
}

}  // namespace mfoc::app
