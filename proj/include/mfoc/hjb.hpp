#ifndef MFOC_HJB_HPP
#define MFOC_HJB_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <type_traits>

#include "mfoc/markov.hpp"

namespace mfoc {

/// Feedback control u_j(k): row j is the control used at time step j,
/// column k the state. Entries are members of the control grid.
template <typename Scalar>
struct FeedbackPolicy {
  TimeTable<Scalar> controls;

  static FeedbackPolicy constant(Index n_steps, Index n_states, Scalar u) {
    return {TimeTable<Scalar>::Constant(n_steps, n_states, u)};
  }

  Index n_steps() const { return controls.rows(); }
  Index n_states() const { return controls.cols(); }
  Scalar operator()(Index j, Index k) const { return controls(j, k); }

  bool operator==(const FeedbackPolicy& o) const { return controls == o.controls; }
};

/// V_j(k) for j = 0..N_T; row N_T is the terminal condition.
template <typename Scalar>
struct ValueTable {
  TimeTable<Scalar> values;

  auto initial() const { return values.row(0); }
  Index n_steps() const { return values.rows() - 1; }
};

/// Proximal term alpha * |u - anchor_j(k)|^2 added to every stage.
template <typename Scalar>
struct Penalty {
  Scalar alpha;
  const FeedbackPolicy<Scalar>& anchor;
};

template <typename Scalar>
struct BackwardResult {
  ValueTable<Scalar> value;
  FeedbackPolicy<Scalar> policy;
};

/// Discrete dynamic programming by enumeration over the control grid:
///
///   V_{N_T}(k) = terminal(k)
///   V_j(k)     = min_u { sum_k' P_u(k,k') V_{j+1}(k') + alpha |u - anchor_j(k)|^2 }
///
/// The returned policy holds the minimizing control; ties go to the
/// smallest control value.
template <typename Scalar, typename Derived>
BackwardResult<Scalar> backward_pass(const ControlledChain<Scalar>& chain,
                                     const Eigen::MatrixBase<Derived>& terminal,
                                     std::optional<Penalty<std::type_identity_t<Scalar>>> penalty = std::nullopt) {
  const Index nx = chain.n_states(), nt = chain.n_steps();
  const auto& controls = chain.controls();
  const Index nu = controls.size();
  if (terminal.size() != nx) throw ContractError("backward_pass: terminal vector has wrong length");
  for (Index k = 0; k < nx; ++k)
    if (!std::isfinite(terminal[k])) throw DomainError("backward_pass: non-finite terminal value");
  if (penalty) {
    if (!(penalty->alpha >= 0)) throw DomainError("backward_pass: penalty must be nonnegative");
    if (penalty->anchor.n_steps() != nt || penalty->anchor.n_states() != nx)
      throw ContractError("backward_pass: anchor policy has wrong shape");
  }

  BackwardResult<Scalar> out{{TimeTable<Scalar>(nt + 1, nx)},
                             {TimeTable<Scalar>(nt, nx)}};
  auto& V = out.value.values;
  auto& U = out.policy.controls;
  V.row(nt) = terminal.transpose();

  for (Index j = nt - 1; j >= 0; --j) {
    const auto next = V.row(j + 1);
    for (Index k = 0; k < nx; ++k) {
      Scalar best = std::numeric_limits<Scalar>::infinity();
      Index best_v = 0;
      for (Index v = 0; v < nu; ++v) {
        Scalar value = chain.row(k, v).dot(next);
        if (penalty) {
          const Scalar d = controls[v] - penalty->anchor(j, k);
          value += penalty->alpha * d * d;
        }
        if (value < best) {
          best = value;
          best_v = v;
        }
      }
      if (!std::isfinite(best)) {
        std::ostringstream os;
        os << "backward_pass: non-finite value at (j=" << j << ", k=" << k << ")";
        throw NumericError(os.str());
      }
      V(j, k) = best;
      U(j, k) = controls[best_v];
    }
  }
  return out;
}

/// sum_k m_0(k) V_0(k): the optimal value of the standard problem.
template <typename Scalar>
Scalar value_at_initial(const ValueTable<Scalar>& v, const DiscreteDistribution<Scalar>& m0) {
  if (v.values.cols() != m0.size()) throw ContractError("value_at_initial: dimension mismatch");
  return m0.weights().dot(v.initial().transpose());
}

}  // namespace mfoc

#endif  // MFOC_HJB_HPP
