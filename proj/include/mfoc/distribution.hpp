#ifndef MFOC_DISTRIBUTION_HPP
#define MFOC_DISTRIBUTION_HPP

#include <cmath>
#include <sstream>

#include "mfoc/types.hpp"

namespace mfoc {

/// Probability weights on the nodes of a grid.
///
/// Construction checks nonnegativity and unit mass (to 1e-12); the stored
/// weights are renormalized so the mass is one up to the final rounding.
template <typename Scalar>
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;

  explicit DiscreteDistribution(VectorX<Scalar> weights, Scalar mass_tolerance = Scalar(1e-12))
      : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw DomainError("DiscreteDistribution: empty weight vector");
    for (Index k = 0; k < weights_.size(); ++k) {
      if (!std::isfinite(weights_[k]) || weights_[k] < 0) {
        std::ostringstream os;
        os << "DiscreteDistribution: invalid weight " << weights_[k] << " at index " << k;
        throw DomainError(os.str());
      }
    }
    const Scalar mass = weights_.sum();
    if (std::abs(mass - Scalar(1)) > mass_tolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "DiscreteDistribution: total mass " << mass << " differs from 1";
      throw DomainError(os.str());
    }
    weights_ /= mass;
  }

  static DiscreteDistribution unit_mass(Index size, Index at) {
    if (at < 0 || at >= size) throw ContractError("unit_mass: index out of range");
    VectorX<Scalar> w = VectorX<Scalar>::Zero(size);
    w[at] = Scalar(1);
    return DiscreteDistribution(std::move(w));
  }

  static DiscreteDistribution uniform(Index size) {
    return DiscreteDistribution(VectorX<Scalar>::Constant(size, Scalar(1) / Scalar(size)));
  }

  const VectorX<Scalar>& weights() const { return weights_; }
  Index size() const { return weights_.size(); }
  Scalar operator[](Index k) const { return weights_[k]; }

  /// (1 - theta) * a + theta * b for theta in [0, 1].
  friend DiscreteDistribution mix(const DiscreteDistribution& a, const DiscreteDistribution& b,
                                  Scalar theta) {
    if (a.size() != b.size()) throw ContractError("mix: size mismatch");
    if (!(theta >= 0 && theta <= 1)) throw DomainError("mix: theta outside [0, 1]");
    DiscreteDistribution out;
    out.weights_ = (Scalar(1) - theta) * a.weights_ + theta * b.weights_;
    out.weights_ /= out.weights_.sum();
    return out;
  }

  bool operator==(const DiscreteDistribution& o) const { return weights_ == o.weights_; }

 private:
  VectorX<Scalar> weights_;
};

/// Pairing of a grid function with a distribution: sum_k m(k) phi(k).
template <typename Scalar, typename Derived>
Scalar expectation(const DiscreteDistribution<Scalar>& m, const Eigen::MatrixBase<Derived>& phi) {
  if (phi.size() != m.size()) throw ContractError("expectation: dimension mismatch");
  return m.weights().dot(phi.derived().template cast<Scalar>());
}

}  // namespace mfoc

#endif  // MFOC_DISTRIBUTION_HPP
