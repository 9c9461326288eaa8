#ifndef MFOC_FP_HPP
#define MFOC_FP_HPP

#include <vector>

#include "mfoc/hjb.hpp"

namespace mfoc {

/// One Chapman-Kolmogorov step m' = P_{u_j}^T m, renormalized to unit mass.
template <typename Scalar>
DiscreteDistribution<Scalar> forward_step(const ControlledChain<Scalar>& chain,
                                          const DiscreteDistribution<Scalar>& m,
                                          const FeedbackPolicy<Scalar>& policy, Index j) {
  const Index nx = chain.n_states();
  VectorX<Scalar> next = VectorX<Scalar>::Zero(nx);
  for (Index k = 0; k < nx; ++k) {
    const Scalar mass = m[k];
    if (mass == 0) continue;
    for (const auto& e : chain.row_for(k, policy(j, k))) next[e.index] += e.probability * mass;
  }
  Scalar clamped = 0;
  for (Index k = 0; k < nx; ++k) {
    if (next[k] < 0) {
      clamped = std::max(clamped, -next[k]);
      next[k] = 0;
    }
  }
  if (clamped >= Scalar(1e-14)) throw NumericError("forward_step: negative mass produced");
  return DiscreteDistribution<Scalar>(std::move(next));
}

/// Full trajectory (m_0, ..., m_{N_T}) of the chain driven by a feedback policy.
template <typename Scalar>
std::vector<DiscreteDistribution<Scalar>> forward_pass(const ControlledChain<Scalar>& chain,
                                                       const DiscreteDistribution<Scalar>& m0,
                                                       const FeedbackPolicy<Scalar>& policy) {
  if (m0.size() != chain.n_states()) throw ContractError("forward_pass: m0 has wrong length");
  if (policy.n_steps() != chain.n_steps() || policy.n_states() != chain.n_states())
    throw ContractError("forward_pass: policy has wrong shape");
  std::vector<DiscreteDistribution<Scalar>> trajectory;
  trajectory.reserve(static_cast<std::size_t>(chain.n_steps() + 1));
  trajectory.push_back(m0);
  for (Index j = 0; j < chain.n_steps(); ++j)
    trajectory.push_back(forward_step(chain, trajectory.back(), policy, j));
  return trajectory;
}

/// Terminal law m_{N_T} only.
template <typename Scalar>
DiscreteDistribution<Scalar> terminal_distribution(const ControlledChain<Scalar>& chain,
                                                   const DiscreteDistribution<Scalar>& m0,
                                                   const FeedbackPolicy<Scalar>& policy) {
  if (m0.size() != chain.n_states()) throw ContractError("terminal_distribution: m0 has wrong length");
  if (policy.n_steps() != chain.n_steps() || policy.n_states() != chain.n_states())
    throw ContractError("terminal_distribution: policy has wrong shape");
  DiscreteDistribution<Scalar> m = m0;
  for (Index j = 0; j < chain.n_steps(); ++j) m = forward_step(chain, m, policy, j);
  return m;
}

/// Mass sitting on the two end nodes of the grid.
template <typename Scalar>
Scalar boundary_mass(const DiscreteDistribution<Scalar>& m) {
  return m[0] + m[m.size() - 1];
}

}  // namespace mfoc

#endif  // MFOC_FP_HPP
