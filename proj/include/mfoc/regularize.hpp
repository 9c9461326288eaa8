#ifndef MFOC_REGULARIZE_HPP
#define MFOC_REGULARIZE_HPP

#include <cmath>
#include <utility>

#include "mfoc/distribution.hpp"
#include "mfoc/grid.hpp"

namespace mfoc {

/// Hat-function aggregation of a fine-grid distribution onto the coarse grid
/// {x_min, x_min + dy, ..., x_max}:
///
///   m~(y) = sum_{|y - x| <= dy} (dy - |y - x|) / dy * m(x).
///
/// dy must be a positive multiple of the fine spacing that also divides the
/// interval, so the hats form an exact partition of unity on the fine nodes.
template <typename Scalar>
std::pair<Grid1D<Scalar>, DiscreteDistribution<Scalar>> regularize(const Grid1D<Scalar>& fine,
                                                                   const DiscreteDistribution<Scalar>& m,
                                                                   Scalar dy) {
  if (m.size() != fine.size()) throw ContractError("regularize: distribution does not match grid");
  if (!(dy > 0)) throw ConfigError("regularize: dy must be positive");
  const Scalar ratio = dy / fine.spacing();
  const Scalar r_round = std::round(ratio);
  if (r_round < 1 || std::abs(ratio - r_round) > Scalar(1e-9) * r_round)
    throw ConfigError("regularize: dy is not a multiple of the grid spacing");
  const Index r = static_cast<Index>(r_round);
  if ((fine.size() - 1) % r != 0) throw ConfigError("regularize: dy does not divide the state interval");

  Grid1D<Scalar> coarse(fine.x_min(), fine.x_max(), (fine.size() - 1) / r + 1);
  VectorX<Scalar> w = VectorX<Scalar>::Zero(coarse.size());
  for (Index k = 0; k < fine.size(); ++k) {
    if (m[k] == 0) continue;
    const Index i = k / r, offset = k % r;
    if (offset == 0) {
      w[i] += m[k];
    } else {
      w[i] += m[k] * Scalar(r - offset) / Scalar(r);
      w[i + 1] += m[k] * Scalar(offset) / Scalar(r);
    }
  }
  return {coarse, DiscreteDistribution<Scalar>(std::move(w))};
}

}  // namespace mfoc

#endif  // MFOC_REGULARIZE_HPP
