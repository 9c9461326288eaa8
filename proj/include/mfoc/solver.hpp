#ifndef MFOC_SOLVER_HPP
#define MFOC_SOLVER_HPP

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfoc/costs.hpp"
#include "mfoc/fp.hpp"

namespace mfoc {

enum class Algorithm { Gradient, Penalized };

enum class Status { Converged, MaxIterations, Stalled };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIterations: return "max_iter";
    case Status::Stalled: return "stalled";
  }
  return "unknown";
}

struct LineSearchConfig {
  enum class Kind { Enumerate, Bisection };
  Kind kind = Kind::Enumerate;
  int n_intervals = 64;    // enumeration over {0, 1/n, ..., 1}
  int max_iterations = 60; // bisection steps or golden-section refinements
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::Gradient;
  int max_iterations = 10;
  double epsilon_tol = 0.0;
  LineSearchConfig line_search{};
  double penalty_alpha0 = 1.0;
  double penalty_h_minus_factor = 0.5;  // h-(alpha) = factor * alpha
  double penalty_h_plus_factor = 2.0;   // h+(alpha) = factor * alpha
  int penalty_max_inner = 60;
  // When the penalized solve returns the anchor policy unchanged, alpha is
  // too large for the control grid to move at all; shrink it with h- instead
  // of growing it with h+.
  bool penalty_shrink_when_frozen = true;

  void validate() const {
    if (max_iterations < 0) throw ConfigError("solver: max_iterations must be nonnegative");
    if (!(epsilon_tol >= 0)) throw ConfigError("solver: epsilon_tol must be nonnegative");
    if (line_search.n_intervals < 1) throw ConfigError("solver: line search needs at least one interval");
    if (line_search.max_iterations < 0) throw ConfigError("solver: line search iterations must be nonnegative");
    if (!(penalty_alpha0 > 0)) throw ConfigError("solver: penalty_alpha0 must be positive");
    if (!(penalty_h_minus_factor > 0 && penalty_h_minus_factor <= 1))
      throw ConfigError("solver: penalty_h_minus_factor must lie in (0, 1]");
    if (!(penalty_h_plus_factor >= 1)) throw ConfigError("solver: penalty_h_plus_factor must be >= 1");
    if (penalty_max_inner < 1) throw ConfigError("solver: penalty_max_inner must be positive");
  }
};

template <typename Scalar>
struct IterationRecord {
  int iteration = 0;
  Scalar cost = 0;
  Scalar gap = 0;
  std::optional<Scalar> theta;
  std::optional<Scalar> alpha;
  int passes = 0;
  double wall_time = 0;
};

/// A mean-field control problem: minimize cost(m_{N_T}) over feedback
/// policies of the chain started from m0.
template <typename Scalar>
struct Problem {
  std::shared_ptr<const ControlledChain<Scalar>> chain;
  DiscreteDistribution<Scalar> m0;
  std::shared_ptr<const CostFunctional<Scalar>> cost;
  /// Starting policy; constant 0 (or the control closest to it) when empty.
  std::optional<FeedbackPolicy<Scalar>> initial_policy;
};

struct PassTiming {
  double backward_seconds = 0;
  int backward_count = 0;
  double forward_seconds = 0;
  int forward_count = 0;
};

template <typename Scalar>
struct SolveResult {
  DiscreteDistribution<Scalar> distribution;
  /// Feedback policy whose terminal law is `distribution` (penalized method only).
  std::optional<FeedbackPolicy<Scalar>> policy;
  /// Value function and greedy policy of the last linearized problem.
  ValueTable<Scalar> value;
  FeedbackPolicy<Scalar> greedy_policy;
  std::vector<IterationRecord<Scalar>> history;
  Status status = Status::MaxIterations;
  PassTiming timing;
  /// Descent directions m~^i (with m~^0 = m^0), kept when requested.
  std::vector<DiscreteDistribution<Scalar>> directions;
};

/// epsilon = sum_k D chi(m, x_k) m(k) - sum_k m0(k) V0(k).
template <typename Scalar, typename D1, typename D2>
Scalar epsilon_gap(const Eigen::MatrixBase<D1>& derivative, const DiscreteDistribution<Scalar>& m,
                   const Eigen::MatrixBase<D2>& v0, const DiscreteDistribution<Scalar>& m0) {
  if (derivative.size() != m.size() || v0.size() != m0.size() || m.size() != m0.size())
    throw ContractError("epsilon_gap: dimension mismatch");
  return expectation(m, derivative) - expectation(m0, v0);
}

/// Approximate minimizer of theta -> cost((1 - theta) m + theta m~) on [0, 1].
///
/// Enumeration takes the best grid value (largest theta on ties, up to
/// rounding) and refines
/// it by golden-section search inside the neighbouring bracket; the refined
/// point is kept only if it is strictly better. Bisection drives the
/// directional derivative to zero and assumes a convex cost.
template <typename Scalar>
std::pair<Scalar, Scalar> line_search(const CostFunctional<Scalar>& cost, const Grid1D<Scalar>& g,
                                      const DiscreteDistribution<Scalar>& m,
                                      const DiscreteDistribution<Scalar>& direction,
                                      const LineSearchConfig& cfg) {
  auto f = [&](Scalar theta) { return cost.evaluate(g, mix(m, direction, theta)); };

  if (cfg.kind == LineSearchConfig::Kind::Bisection) {
    const VectorX<Scalar> step = direction.weights() - m.weights();
    auto slope = [&](Scalar theta) { return cost.derivative(g, mix(m, direction, theta)).dot(step); };
    if (slope(Scalar(1)) <= 0) return {Scalar(1), f(Scalar(1))};
    if (slope(Scalar(0)) >= 0) return {Scalar(0), f(Scalar(0))};
    Scalar lo = 0, hi = 1;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      const Scalar mid = Scalar(0.5) * (lo + hi);
      (slope(mid) > 0 ? hi : lo) = mid;
    }
    const Scalar theta = Scalar(0.5) * (lo + hi);
    const Scalar f0 = f(Scalar(0)), ft = f(theta);
    return ft <= f0 ? std::pair{theta, ft} : std::pair{Scalar(0), f0};
  }

  const int n = cfg.n_intervals;
  int best = 0;
  Scalar best_value = f(Scalar(0));
  for (int i = 1; i <= n; ++i) {
    const Scalar v = f(Scalar(i) / Scalar(n));
    // Values within rounding count as ties, and ties go to the larger step.
    if (v <= best_value + Scalar(1e-14) * (Scalar(1) + std::abs(best_value))) {
      best_value = v;
      best = i;
    }
  }
  Scalar theta = Scalar(best) / Scalar(n);
  Scalar a = Scalar(std::max(best - 1, 0)) / Scalar(n);
  Scalar b = Scalar(std::min(best + 1, n)) / Scalar(n);
  const Scalar ratio = (std::sqrt(Scalar(5)) - 1) / 2;
  Scalar c = b - ratio * (b - a), d = a + ratio * (b - a);
  Scalar fc = f(c), fd = f(d);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - ratio * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + ratio * (b - a); fd = f(d);
    }
  }
  const Scalar refined = fc < fd ? c : d;
  const Scalar refined_value = std::min(fc, fd);
  const Scalar margin = Scalar(1e-14) * (Scalar(1) + std::abs(best_value));
  if (refined_value < best_value - margin) {
    theta = refined;
    best_value = refined_value;
  }
  return {theta, best_value};
}

/// Outer iterations for the mean-field problem.
///
/// Gradient method: linearize the cost at m^l, solve the standard problem
/// with terminal cost D chi(m^l) by dynamic programming, push m0 forward
/// under the optimal policy to get m~^{l+1}, then move along the segment
/// [m^l, m~^{l+1}] by line search.
///
/// Penalized method: keep a feedback policy u^l and solve the linearized
/// problem with a proximal term alpha |u - u^l|^2, shrinking alpha after a
/// decrease and growing it until a decrease is found otherwise.
template <typename Scalar>
class Solver {
 public:
  using Warning = std::function<void(const std::string&)>;

  Solver(Problem<Scalar> problem, SolverConfig config)
      : problem_(std::move(problem)), config_(config), start_(Clock::now()) {
    config_.validate();
    if (!problem_.chain || !problem_.cost) throw ContractError("Solver: problem is incomplete");
    if (problem_.m0.size() != chain().n_states()) throw ContractError("Solver: m0 does not match the grid");
    policy_ = problem_.initial_policy ? *problem_.initial_policy : default_policy();
    alpha_ = Scalar(config_.penalty_alpha0);
  }

  void set_warning_sink(Warning w) { warn_ = std::move(w); }
  void keep_directions(bool keep) { keep_directions_ = keep; }

  /// Runs until epsilon <= tol, max_iterations, or a stall of the penalty loop.
  SolveResult<Scalar> solve() {
    initialize();
    while (status_ == Status::MaxIterations && !converged() && iteration_ < config_.max_iterations) {
      if (config_.algorithm == Algorithm::Gradient) gradient_iteration();
      else penalized_iteration();
    }
    if (status_ != Status::Stalled && converged()) status_ = Status::Converged;
    return result();
  }

  /// Computes m^0 and its linearization; produces record 0.
  const IterationRecord<Scalar>& initialize() {
    guarded(0, [&] {
      m_ = timed_forward(policy_);
      if (keep_directions_) directions_.push_back(m_);
      linearize();
    });
    push_record(std::nullopt, std::nullopt);
    return history_.back();
  }

  /// One gradient-method step from m^l to m^{l+1}.
  const IterationRecord<Scalar>& gradient_iteration() {
    std::optional<Scalar> theta;
    guarded(iteration_ + 1, [&] {
      const auto direction = timed_forward(greedy_.policy);
      if (keep_directions_) directions_.push_back(direction);
      const auto [t, value] = line_search(*problem_.cost, grid(), m_, direction, config_.line_search);
      (void)value;
      theta = t;
      m_ = mix(m_, direction, t);
      ++passes_;
      ++iteration_;
      linearize();
    });
    push_record(theta, std::nullopt);
    return history_.back();
  }

  /// One penalized-method step from (u^l, m^l) to (u^{l+1}, m^{l+1}).
  const IterationRecord<Scalar>& penalized_iteration() {
    std::optional<Scalar> used_alpha;
    bool accepted = false;
    guarded(iteration_ + 1, [&] {
      const Scalar current = cost_;
      for (int attempt = 0; attempt <= config_.penalty_max_inner; ++attempt) {
        auto solved = timed_backward(derivative_, Penalty<Scalar>{alpha_, policy_});
        auto candidate = timed_forward(solved.policy);
        ++passes_;
        const Scalar candidate_cost = problem_.cost->evaluate(grid(), candidate);
        if (candidate_cost < current - Scalar(1e-12)) {
          used_alpha = alpha_;
          alpha_ *= Scalar(config_.penalty_h_minus_factor);
          policy_ = std::move(solved.policy);
          m_ = std::move(candidate);
          accepted = true;
          break;
        }
        const bool frozen = solved.policy == policy_;
        alpha_ *= Scalar(frozen && config_.penalty_shrink_when_frozen ? config_.penalty_h_minus_factor
                                                                      : config_.penalty_h_plus_factor);
      }
      if (!accepted) return;
      ++iteration_;
      linearize();
    });
    if (!accepted) {
      status_ = Status::Stalled;
      history_.back().passes = passes_;
      return history_.back();
    }
    push_record(std::nullopt, used_alpha);
    return history_.back();
  }

  SolveResult<Scalar> result() const {
    SolveResult<Scalar> r{m_, std::nullopt, greedy_.value, greedy_.policy, history_, status_, timing_, directions_};
    if (config_.algorithm == Algorithm::Penalized) r.policy = policy_;
    return r;
  }

  const DiscreteDistribution<Scalar>& distribution() const { return m_; }
  const FeedbackPolicy<Scalar>& policy() const { return policy_; }
  const std::vector<IterationRecord<Scalar>>& history() const { return history_; }
  Status status() const { return status_; }
  Scalar alpha() const { return alpha_; }

 private:
  using Clock = std::chrono::steady_clock;

  const ControlledChain<Scalar>& chain() const { return *problem_.chain; }
  const Grid1D<Scalar>& grid() const { return chain().grid(); }

  bool converged() const { return !history_.empty() && history_.back().gap <= Scalar(config_.epsilon_tol); }

  FeedbackPolicy<Scalar> default_policy() const {
    const auto& u = chain().controls();
    Index best = 0;
    for (Index v = 1; v < u.size(); ++v)
      if (std::abs(u[v]) < std::abs(u[best])) best = v;
    return FeedbackPolicy<Scalar>::constant(chain().n_steps(), chain().n_states(), u[best]);
  }

  // Cost, derivative, standard-problem solution and gap at the current m.
  void linearize() {
    cost_ = problem_.cost->evaluate(grid(), m_);
    derivative_ = problem_.cost->derivative(grid(), m_);
    greedy_ = timed_backward(derivative_, std::nullopt);
    gap_ = epsilon_gap(derivative_, m_, greedy_.value.initial(), problem_.m0);
  }

  BackwardResult<Scalar> timed_backward(const VectorX<Scalar>& terminal, std::optional<Penalty<Scalar>> p) {
    const auto t0 = Clock::now();
    auto r = backward_pass(chain(), terminal, p);
    timing_.backward_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
    ++timing_.backward_count;
    return r;
  }

  DiscreteDistribution<Scalar> timed_forward(const FeedbackPolicy<Scalar>& policy) {
    const auto t0 = Clock::now();
    auto m = terminal_distribution(chain(), problem_.m0, policy);
    timing_.forward_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
    ++timing_.forward_count;
    if (boundary_mass(m) > Scalar(1e-8) && !boundary_warned_) {
      boundary_warned_ = true;
      std::ostringstream os;
      os << "boundary mass " << boundary_mass(m) << " exceeds 1e-8; the state grid may be too narrow";
      if (warn_) warn_(os.str());
      else std::cerr << "warning: " << os.str() << '\n';
    }
    return m;
  }

  void push_record(std::optional<Scalar> theta, std::optional<Scalar> alpha) {
    IterationRecord<Scalar> r;
    r.iteration = iteration_;
    r.cost = cost_;
    r.gap = gap_;
    r.theta = theta;
    r.alpha = alpha;
    r.passes = passes_;
    r.wall_time = std::chrono::duration<double>(Clock::now() - start_).count();
    history_.push_back(r);
  }

  template <typename F>
  void guarded(int iteration, F&& f) {
    try {
      f();
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(iteration) + ": " + e.what());
    } catch (const DomainError& e) {
      throw NumericError("iteration " + std::to_string(iteration) + ": " + e.what());
    }
  }

  Problem<Scalar> problem_;
  SolverConfig config_;
  Clock::time_point start_;
  Warning warn_;
  bool keep_directions_ = false;
  bool boundary_warned_ = false;

  DiscreteDistribution<Scalar> m_;
  FeedbackPolicy<Scalar> policy_;
  BackwardResult<Scalar> greedy_;
  VectorX<Scalar> derivative_;
  Scalar cost_ = 0;
  Scalar gap_ = 0;
  Scalar alpha_ = 1;
  int iteration_ = 0;
  int passes_ = 0;
  Status status_ = Status::MaxIterations;
  PassTiming timing_;
  std::vector<IterationRecord<Scalar>> history_;
  std::vector<DiscreteDistribution<Scalar>> directions_;
};

template <typename Scalar>
SolveResult<Scalar> solve(const SolverConfig& config, Problem<Scalar> problem) {
  return Solver<Scalar>(std::move(problem), config).solve();
}

}  // namespace mfoc

#endif  // MFOC_SOLVER_HPP
