#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "mfoc/app.hpp"

namespace mfoc::app {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  int line;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    fail(it == entries_.end() ? 0 : it->second.line, key + ": " + msg);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string text(const std::string& key, std::string fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    return it->second.value;
  }

  double number(const std::string& key, double fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    return parse_number(it->second.value, it->second.line, key);
  }

  int integer(const std::string& key, int fallback) {
    const double v = number(key, fallback);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(key, "expected an integer");
    return static_cast<int>(v);
  }

  std::vector<Atom<double>> atoms(const std::string& key) {
    auto it = entries_.find(key);
    used_.insert(key);
    std::vector<Atom<double>> out;
    std::stringstream ss(it->second.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) fail(it->second.line, key + ": atoms are written value:mass");
      out.push_back({parse_number(item.substr(0, colon), it->second.line, key),
                     parse_number(item.substr(colon + 1), it->second.line, key)});
    }
    if (out.empty()) fail(it->second.line, key + ": empty atom list");
    return out;
  }

  std::vector<double> list(const std::string& key) {
    auto it = entries_.find(key);
    used_.insert(key);
    std::vector<double> out;
    std::stringstream ss(it->second.value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item, it->second.line, key));
    if (out.empty()) fail(it->second.line, key + ": empty list");
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_)
      if (!used_.count(key)) fail(entry.line, "unknown or unused key '" + key + "'");
  }

  // Accepts decimal numbers and fractions a/b.
  double parse_number(std::string_view raw, int line, const std::string& key) const {
    const std::string s = trim(raw);
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      const double num = parse_number(s.substr(0, slash), line, key);
      const double den = parse_number(s.substr(slash + 1), line, key);
      if (den == 0) fail(line, key + ": zero denominator");
      return num / den;
    }
    double v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
      fail(line, key + ": '" + s + "' is not a number");
    return v;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
  std::string source_;
};

const std::set<std::string> kSections = {"dynamics", "state", "control", "initial", "cost", "solver", "output"};

}  // namespace

ProblemConfig parse_config(std::istream& in, const std::string& source) {
  std::map<std::string, Entry> entries;
  std::string section, raw;
  int line = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') fail("unterminated section header");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (!kSections.count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    if (section.empty()) fail("key outside of any section");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (value.empty()) fail("empty value for '" + key + "'");
    const std::string full = section + "." + key;
    if (entries.count(full)) fail("duplicate key '" + full + "'");
    entries[full] = {value, line};
  }

  Reader r(std::move(entries), source);
  ProblemConfig c;

  c.dynamics = r.text("dynamics.model", c.dynamics);
  if (c.dynamics != "drift_control" && c.dynamics != "risk_control")
    r.fail("dynamics.model", "expected drift_control or risk_control");
  c.horizon = r.number("dynamics.horizon", c.horizon);
  c.dt = r.number("dynamics.dt", c.dt);
  if (!(c.horizon > 0)) r.fail("dynamics.horizon", "must be positive");
  if (!(c.dt > 0)) r.fail("dynamics.dt", "must be positive");
  {
    const double steps = c.horizon / c.dt;
    if (std::round(steps) < 1 || std::abs(steps - std::round(steps)) > 1e-9 * std::round(steps))
      r.fail("dynamics.dt", "does not divide the horizon");
  }

  c.x_min = r.number("state.x_min", c.x_min);
  c.x_max = r.number("state.x_max", c.x_max);
  c.dx = r.number("state.dx", c.dx);
  if (!(c.x_max > c.x_min)) r.fail("state.x_max", "must exceed x_min");
  if (!(c.dx > 0)) r.fail("state.dx", "must be positive");
  try {
    (void)Grid1D<double>::with_spacing(c.x_min, c.x_max, c.dx);
  } catch (const DomainError& e) {
    r.fail("state.dx", e.what());
  }

  c.u_min = r.number("control.u_min", c.u_min);
  c.u_max = r.number("control.u_max", c.u_max);
  c.du = r.number("control.du", c.du);
  if (!(c.du > 0)) r.fail("control.du", "must be positive");
  if (c.u_max < c.u_min) r.fail("control.u_max", "must not be below u_min");
  try {
    (void)ControlGrid<double>::with_step(c.u_min, c.u_max, c.du);
  } catch (const DomainError& e) {
    r.fail("control.du", e.what());
  }

  const int laws = int(r.has("initial.point")) + int(r.has("initial.atoms")) + int(r.has("initial.samples"));
  if (laws > 1) r.fail("initial.point", "give exactly one of point, atoms, samples");
  if (r.has("initial.atoms")) {
    auto atoms = r.atoms("initial.atoms");
    double total = 0;
    for (const auto& a : atoms) total += a.mass;
    if (std::abs(total - 1) > 1e-9) r.fail("initial.atoms", "masses must sum to 1");
    c.initial = atoms;
  } else if (r.has("initial.samples")) {
    c.initial = Samples<double>{r.list("initial.samples")};
  } else {
    c.initial = PointMass<double>{r.number("initial.point", 0.0)};
  }

  auto& f = c.functional;
  f.name = r.text("cost.name", f.name);
  if (f.name == "mean_plus_beta_std") {
    f.beta = r.number("cost.beta", f.beta);
  } else if (f.name == "cvar") {
    f.beta = r.number("cost.beta", 0.95);
    if (!(f.beta > 0 && f.beta < 1)) r.fail("cost.beta", "CVaR level must lie in (0, 1)");
  } else if (f.name == "wasserstein2") {
    if (!r.has("cost.target")) r.fail("cost.name", "wasserstein2 needs cost.target");
    f.target = r.atoms("cost.target");
    const std::string mode = r.text("cost.mode", "root");
    if (mode != "root" && mode != "power") r.fail("cost.mode", "expected root or power");
    f.wasserstein_root = mode == "root";
  } else if (f.name == "linear") {
    f.slope = r.number("cost.slope", f.slope);
  } else if (f.name != "variance" && f.name != "interaction_quadratic") {
    r.fail("cost.name", "unknown functional '" + f.name + "'");
  }

  auto& s = c.solver;
  const std::string algo = r.text("solver.algorithm", "gradient");
  if (algo == "gradient" || algo == "1") s.algorithm = Algorithm::Gradient;
  else if (algo == "penalized" || algo == "2") s.algorithm = Algorithm::Penalized;
  else r.fail("solver.algorithm", "expected gradient or penalized");
  s.max_iterations = r.integer("solver.max_iterations", s.max_iterations);
  s.epsilon_tol = r.number("solver.epsilon_tol", s.epsilon_tol);
  const std::string ls = r.text("solver.line_search", "enumerate");
  if (ls == "enumerate") s.line_search.kind = LineSearchConfig::Kind::Enumerate;
  else if (ls == "bisection") s.line_search.kind = LineSearchConfig::Kind::Bisection;
  else r.fail("solver.line_search", "expected enumerate or bisection");
  s.line_search.n_intervals = r.integer("solver.line_search_points", s.line_search.n_intervals);
  s.line_search.max_iterations = r.integer("solver.line_search_iterations", s.line_search.max_iterations);
  s.penalty_alpha0 = r.number("solver.penalty_alpha0", s.penalty_alpha0);
  s.penalty_h_minus_factor = r.number("solver.penalty_h_minus_factor", s.penalty_h_minus_factor);
  s.penalty_h_plus_factor = r.number("solver.penalty_h_plus_factor", s.penalty_h_plus_factor);
  s.penalty_max_inner = r.integer("solver.penalty_max_inner", s.penalty_max_inner);
  const std::string frozen = r.text("solver.penalty_shrink_when_frozen", s.penalty_shrink_when_frozen ? "true" : "false");
  if (frozen == "true") s.penalty_shrink_when_frozen = true;
  else if (frozen == "false") s.penalty_shrink_when_frozen = false;
  else r.fail("solver.penalty_shrink_when_frozen", "expected true or false");
  try {
    s.validate();
  } catch (const ConfigError& e) {
    r.fail(0, e.what());
  }

  c.output_dir = r.text("output.directory", c.output_dir.string());
  c.regularize_dy = r.number("output.regularize_dy", c.regularize_dy);
  if (!(c.regularize_dy > 0)) r.fail("output.regularize_dy", "must be positive");
  {
    const double ratio = c.regularize_dy / c.dx;
    if (std::round(ratio) < 1 || std::abs(ratio - std::round(ratio)) > 1e-9 * std::round(ratio))
      r.fail("output.regularize_dy", "must be a multiple of state.dx");
    const double cells = (c.x_max - c.x_min) / c.regularize_dy;
    if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, std::round(cells)))
      r.fail("output.regularize_dy", "must divide the state interval");
  }

  r.reject_unused();
  return c;
}

ProblemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ":0: cannot open file");
  return parse_config(in, path.string());
}

void write_config(std::ostream& out, const ProblemConfig& c) {
  out << std::setprecision(17);
  out << "[dynamics]\nmodel = " << c.dynamics << "\nhorizon = " << c.horizon << "\ndt = " << c.dt << "\n\n";
  out << "[state]\nx_min = " << c.x_min << "\nx_max = " << c.x_max << "\ndx = " << c.dx << "\n\n";
  out << "[control]\nu_min = " << c.u_min << "\nu_max = " << c.u_max << "\ndu = " << c.du << "\n\n";
  out << "[initial]\n";
  std::visit(
      [&](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, PointMass<double>>) {
          out << "point = " << law.value << "\n";
        } else if constexpr (std::is_same_v<T, Samples<double>>) {
          out << "samples = ";
          for (std::size_t i = 0; i < law.values.size(); ++i) out << (i ? ", " : "") << law.values[i];
          out << "\n";
        } else {
          out << "atoms = ";
          for (std::size_t i = 0; i < law.size(); ++i) out << (i ? ", " : "") << law[i].value << ":" << law[i].mass;
          out << "\n";
        }
      },
      c.initial);
  const auto& f = c.functional;
  out << "\n[cost]\nname = " << f.name << "\n";
  if (f.name == "mean_plus_beta_std" || f.name == "cvar") out << "beta = " << f.beta << "\n";
  if (f.name == "linear") out << "slope = " << f.slope << "\n";
  if (f.name == "wasserstein2") {
    out << "target = ";
    for (std::size_t i = 0; i < f.target.size(); ++i)
      out << (i ? ", " : "") << f.target[i].value << ":" << f.target[i].mass;
    out << "\nmode = " << (f.wasserstein_root ? "root" : "power") << "\n";
  }
  const auto& s = c.solver;
  out << "\n[solver]\nalgorithm = " << (s.algorithm == Algorithm::Gradient ? "gradient" : "penalized")
      << "\nmax_iterations = " << s.max_iterations << "\nepsilon_tol = " << s.epsilon_tol
      << "\nline_search = " << (s.line_search.kind == LineSearchConfig::Kind::Enumerate ? "enumerate" : "bisection")
      << "\nline_search_points = " << s.line_search.n_intervals
      << "\nline_search_iterations = " << s.line_search.max_iterations
      << "\npenalty_alpha0 = " << s.penalty_alpha0 << "\npenalty_h_minus_factor = " << s.penalty_h_minus_factor
      << "\npenalty_h_plus_factor = " << s.penalty_h_plus_factor << "\npenalty_max_inner = " << s.penalty_max_inner
      << "\npenalty_shrink_when_frozen = " << (s.penalty_shrink_when_frozen ? "true" : "false") << "\n\n";
  out << "[output]\ndirectory = " << c.output_dir.string() << "\nregularize_dy = " << c.regularize_dy << "\n";
}

}  // namespace mfoc::app
