#ifndef MFOC_MARKOV_HPP
#define MFOC_MARKOV_HPP

#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

#include "mfoc/distribution.hpp"
#include "mfoc/grid.hpp"

namespace mfoc {

/// Uniform finite control set {u_min, u_min + du, ..., u_max}.
template <typename Scalar>
class ControlGrid {
 public:
  ControlGrid(Scalar u_min, Scalar u_max, Index n_controls) : u_min_(u_min), u_max_(u_max) {
    if (n_controls < 1) throw DomainError("ControlGrid: need at least one control");
    if (!std::isfinite(u_min) || !std::isfinite(u_max) || u_max < u_min ||
        (n_controls == 1 && u_max != u_min) || (n_controls > 1 && !(u_max > u_min)))
      throw DomainError("ControlGrid: malformed bounds");
    values_.resize(n_controls);
    const Scalar du = n_controls > 1 ? (u_max - u_min) / Scalar(n_controls - 1) : Scalar(0);
    for (Index i = 0; i < n_controls; ++i) values_[i] = u_min + Scalar(i) * du;
    values_[n_controls - 1] = u_max;
    step_ = du;
  }

  static ControlGrid with_step(Scalar u_min, Scalar u_max, Scalar du) {
    if (u_min == u_max) return ControlGrid(u_min, u_max, 1);
    if (!(du > 0)) throw DomainError("ControlGrid: step must be positive");
    const Scalar cells = (u_max - u_min) / du;
    const Scalar rounded = std::round(cells);
    if (rounded < 1 || std::abs(cells - rounded) > Scalar(1e-9) * rounded)
      throw DomainError("ControlGrid: step does not divide [u_min, u_max]");
    return ControlGrid(u_min, u_max, static_cast<Index>(rounded) + 1);
  }

  Scalar u_min() const { return u_min_; }
  Scalar u_max() const { return u_max_; }
  Index size() const { return values_.size(); }
  Scalar operator[](Index i) const { return values_[i]; }
  const VectorX<Scalar>& values() const { return values_; }

  /// Position of u in the grid, or -1 if u is not a member.
  Index index_of(Scalar u) const {
    if (size() == 1) return u == u_min_ ? 0 : -1;
    const Scalar t = (u - u_min_) / step_;
    const Scalar r = std::round(t);
    if (r < 0 || r > Scalar(size() - 1)) return -1;
    const Index i = static_cast<Index>(r);
    return values_[i] == u ? i : -1;
  }

  bool contains_in_hull(Scalar u) const { return u >= u_min_ && u <= u_max_; }

 private:
  Scalar u_min_;
  Scalar u_max_;
  Scalar step_ = 0;
  VectorX<Scalar> values_;
};

/// Uniform time discretization of [0, horizon] into n_steps steps.
template <typename Scalar>
struct TimeGrid {
  TimeGrid(Scalar horizon_, Index n_steps_) : horizon(horizon_), n_steps(n_steps_) {
    if (!(horizon_ > 0) || n_steps_ < 1) throw DomainError("TimeGrid: need T > 0 and N_T >= 1");
    dt = horizon_ / Scalar(n_steps_);
  }

  /// Time grid with step dt; horizon / dt must be an integer to 1e-9.
  static TimeGrid with_step(Scalar horizon, Scalar dt) {
    if (!(dt > 0)) throw DomainError("TimeGrid: dt must be positive");
    const Scalar steps = horizon / dt;
    const Scalar rounded = std::round(steps);
    if (rounded < 1 || std::abs(steps - rounded) > Scalar(1e-9) * rounded)
      throw DomainError("TimeGrid: dt does not divide the horizon");
    return TimeGrid(horizon, static_cast<Index>(rounded));
  }

  Scalar horizon;
  Index n_steps;
  Scalar dt;
};

/// Controlled scalar SDE dX = b(X, u) dt + sigma(X, u) dW with a finite
/// control set. Lipschitz continuity of b and sigma is assumed, not checked.
template <typename Scalar>
struct Dynamics1D {
  std::function<Scalar(Scalar, Scalar)> drift;
  std::function<Scalar(Scalar, Scalar)> volatility;
  ControlGrid<Scalar> controls;
};

/// b = u, sigma = 1.
template <typename Scalar>
Dynamics1D<Scalar> drift_control_dynamics(ControlGrid<Scalar> controls) {
  return {[](Scalar, Scalar u) { return u; }, [](Scalar, Scalar) { return Scalar(1); },
          std::move(controls)};
}

/// b = u, sigma = 1 - u.
template <typename Scalar>
Dynamics1D<Scalar> risk_control_dynamics(ControlGrid<Scalar> controls) {
  return {[](Scalar, Scalar u) { return u; }, [](Scalar, Scalar u) { return Scalar(1) - u; },
          std::move(controls)};
}

/// The two equally likely one-step destinations x + b dt +/- sigma sqrt(dt).
template <typename Scalar>
std::pair<Scalar, Scalar> destinations(const Dynamics1D<Scalar>& dyn, const TimeGrid<Scalar>& tg,
                                       Scalar x, Scalar u) {
  const Scalar shift = x + dyn.drift(x, u) * tg.dt;
  const Scalar spread = dyn.volatility(x, u) * std::sqrt(tg.dt);
  const std::pair<Scalar, Scalar> out{shift + spread, shift - spread};
  if (!std::isfinite(out.first) || !std::isfinite(out.second)) {
    std::ostringstream os;
    os << "destinations: non-finite destination at (x=" << x << ", u=" << u << ")";
    throw DomainError(os.str());
  }
  return out;
}

/// One row P_u(k, .) of the controlled kernel; at most four nonzeros
/// sorted by destination index.
template <typename Scalar>
struct TransitionRow {
  struct Entry {
    Index index;
    Scalar probability;
  };

  std::array<Entry, 4> entries{};
  int count = 0;

  const Entry* begin() const { return entries.data(); }
  const Entry* end() const { return entries.data() + count; }

  void add(Index index, Scalar p) {
    if (p <= 0) return;
    for (int i = 0; i < count; ++i) {
      if (entries[i].index == index) {
        entries[i].probability += p;
        return;
      }
    }
    int pos = count++;
    while (pos > 0 && entries[pos - 1].index > index) {
      entries[pos] = entries[pos - 1];
      --pos;
    }
    entries[pos] = {index, p};
  }

  template <typename Derived>
  Scalar dot(const Eigen::MatrixBase<Derived>& v) const {
    Scalar s = 0;
    for (int i = 0; i < count; ++i) s += entries[i].probability * v[entries[i].index];
    return s;
  }
};

template <typename Scalar>
TransitionRow<Scalar> transition_row(const Grid1D<Scalar>& g, const Dynamics1D<Scalar>& dyn,
                                     const TimeGrid<Scalar>& tg, Index k, Scalar u) {
  if (k < 0 || k >= g.size()) throw ContractError("transition_row: state index out of range");
  const auto [up, down] = destinations(dyn, tg, g.point(k), u);
  TransitionRow<Scalar> row;
  for (const Scalar y : {up, down}) {
    const auto bc = locate(g, y);
    row.add(bc.left_index, Scalar(0.5) * bc.left_weight);
    row.add(bc.left_index + 1, Scalar(0.5) * bc.right_weight());
  }
  Scalar total = 0;
  for (const auto& e : row) total += e.probability;
  if (std::abs(total - Scalar(1)) > Scalar(1e-12)) {
    std::ostringstream os;
    os << "transition_row: row (k=" << k << ", u=" << u << ") has mass " << total;
    throw NumericError(os.str());
  }
  for (int i = 0; i < row.count; ++i) row.entries[i].probability /= total;
  return row;
}

/// Row-stochastic matrix P_{u_j} for one time slice of a feedback policy.
template <typename Scalar, typename Derived>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> build_kernel(const Grid1D<Scalar>& g,
                                                          const Dynamics1D<Scalar>& dyn,
                                                          const TimeGrid<Scalar>& tg,
                                                          const Eigen::MatrixBase<Derived>& slice) {
  if (slice.size() != g.size()) throw ContractError("build_kernel: policy slice has wrong length");
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(static_cast<std::size_t>(4 * g.size()));
  for (Index k = 0; k < g.size(); ++k) {
    for (const auto& e : transition_row(g, dyn, tg, k, Scalar(slice[k])))
      triplets.emplace_back(k, e.index, e.probability);
  }
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> p(g.size(), g.size());
  p.setFromTriplets(triplets.begin(), triplets.end());
  return p;
}

// Initial laws of Y_0.
template <typename Scalar>
struct PointMass {
  Scalar value;
};

template <typename Scalar>
struct Atom {
  Scalar value;
  Scalar mass;
};

template <typename Scalar>
struct Samples {
  std::vector<Scalar> values;
};

template <typename Scalar>
using InitialLaw = std::variant<PointMass<Scalar>, std::vector<Atom<Scalar>>, Samples<Scalar>>;

/// m_0(k) = E[alpha_k(project(Y_0))].
template <typename Scalar>
DiscreteDistribution<Scalar> discretize_initial(const Grid1D<Scalar>& g,
                                                const InitialLaw<Scalar>& law) {
  VectorX<Scalar> w = VectorX<Scalar>::Zero(g.size());
  auto deposit = [&](Scalar x, Scalar mass) {
    const auto bc = locate(g, x);
    w[bc.left_index] += mass * bc.left_weight;
    if (bc.right_weight() > 0) w[bc.left_index + 1] += mass * bc.right_weight();
  };
  std::visit(
      [&](const auto& y0) {
        using T = std::decay_t<decltype(y0)>;
        if constexpr (std::is_same_v<T, PointMass<Scalar>>) {
          deposit(y0.value, Scalar(1));
        } else if constexpr (std::is_same_v<T, Samples<Scalar>>) {
          if (y0.values.empty()) throw DomainError("discretize_initial: empty sample list");
          const Scalar each = Scalar(1) / Scalar(y0.values.size());
          for (const Scalar x : y0.values) deposit(x, each);
        } else {
          if (y0.empty()) throw DomainError("discretize_initial: empty atom list");
          Scalar total = 0;
          for (const auto& a : y0) {
            if (!(a.mass >= 0)) throw DomainError("discretize_initial: negative atom mass");
            total += a.mass;
          }
          if (std::abs(total - Scalar(1)) > Scalar(1e-9)) {
            std::ostringstream os;
            os << "discretize_initial: atom masses sum to " << total;
            throw DomainError(os.str());
          }
          for (const auto& a : y0) deposit(a.value, a.mass / total);
        }
      },
      law);
  return DiscreteDistribution<Scalar>(std::move(w), Scalar(1e-9));
}

/// The discretized controlled chain: grid, dynamics and time step, with the
/// transition row of every (state, control) pair precomputed. The kernel does
/// not depend on time, so one table serves every pass of a solve.
template <typename Scalar>
class ControlledChain {
 public:
  ControlledChain(Grid1D<Scalar> grid, Dynamics1D<Scalar> dynamics, TimeGrid<Scalar> time)
      : grid_(std::move(grid)), dynamics_(std::move(dynamics)), time_(time) {
    const Index nu = dynamics_.controls.size();
    rows_.reserve(static_cast<std::size_t>(grid_.size() * nu));
    for (Index k = 0; k < grid_.size(); ++k) {
      for (Index v = 0; v < nu; ++v) {
        const Scalar x = grid_.point(k), u = dynamics_.controls[v];
        if (!std::isfinite(dynamics_.drift(x, u)) || !std::isfinite(dynamics_.volatility(x, u))) {
          std::ostringstream os;
          os << "ControlledChain: non-finite coefficients at (x=" << x << ", u=" << u << ")";
          throw DomainError(os.str());
        }
        rows_.push_back(transition_row(grid_, dynamics_, time_, k, u));
      }
    }
  }

  const Grid1D<Scalar>& grid() const { return grid_; }
  const Dynamics1D<Scalar>& dynamics() const { return dynamics_; }
  const ControlGrid<Scalar>& controls() const { return dynamics_.controls; }
  const TimeGrid<Scalar>& time() const { return time_; }
  Index n_states() const { return grid_.size(); }
  Index n_steps() const { return time_.n_steps; }

  const TransitionRow<Scalar>& row(Index k, Index control_index) const {
    return rows_[static_cast<std::size_t>(k * dynamics_.controls.size() + control_index)];
  }

  /// Row for an arbitrary feasible control value; cached when u is a grid control.
  TransitionRow<Scalar> row_for(Index k, Scalar u) const {
    const Index v = dynamics_.controls.index_of(u);
    if (v >= 0) return row(k, v);
    if (!dynamics_.controls.contains_in_hull(u)) {
      std::ostringstream os;
      os << "ControlledChain: control " << u << " is infeasible";
      throw DomainError(os.str());
    }
    return transition_row(grid_, dynamics_, time_, k, u);
  }

 private:
  Grid1D<Scalar> grid_;
  Dynamics1D<Scalar> dynamics_;
  TimeGrid<Scalar> time_;
  std::vector<TransitionRow<Scalar>> rows_;
};

}  // namespace mfoc

#endif  // MFOC_MARKOV_HPP
