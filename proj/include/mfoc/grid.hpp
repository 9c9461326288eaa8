#ifndef MFOC_GRID_HPP
#define MFOC_GRID_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfoc/types.hpp"

namespace mfoc {

/// Hat-function coordinates of a point inside the grid hull: the point is
/// left_weight * x[left_index] + (1 - left_weight) * x[left_index + 1].
/// A point sitting on a node carries left_weight == 1 on that node.
template <typename Scalar>
struct BarycentricPair {
  Index left_index = 0;
  Scalar left_weight = Scalar(1);

  Scalar right_weight() const { return Scalar(1) - left_weight; }
};

/// Uniform one-dimensional state grid {x_min, x_min + dx, ..., x_max}.
template <typename Scalar>
class Grid1D {
 public:
  Grid1D(Scalar x_min, Scalar x_max, Index n_points)
      : x_min_(x_min), x_max_(x_max), n_points_(n_points) {
    if (n_points < 2)
      throw DomainError("Grid1D: need at least two points");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
      throw DomainError("Grid1D: bounds must be finite with x_max > x_min");
    spacing_ = (x_max - x_min) / Scalar(n_points - 1);
  }

  /// Grid with the given spacing; (x_max - x_min) / spacing must be an
  /// integer up to 1e-9 relative error.
  static Grid1D with_spacing(Scalar x_min, Scalar x_max, Scalar spacing) {
    if (!(spacing > 0) || !std::isfinite(spacing))
      throw DomainError("Grid1D: spacing must be positive");
    const Scalar cells = (x_max - x_min) / spacing;
    const Scalar rounded = std::round(cells);
    if (rounded < 1 || std::abs(cells - rounded) > Scalar(1e-9) * std::max(Scalar(1), rounded))
      throw DomainError("Grid1D: spacing does not divide [x_min, x_max]");
    return Grid1D(x_min, x_max, static_cast<Index>(rounded) + 1);
  }

  Scalar x_min() const { return x_min_; }
  Scalar x_max() const { return x_max_; }
  Index size() const { return n_points_; }
  Scalar spacing() const { return spacing_; }

  Scalar point(Index k) const {
    return k == n_points_ - 1 ? x_max_ : x_min_ + Scalar(k) * spacing_;
  }

  VectorX<Scalar> points() const {
    VectorX<Scalar> xs(n_points_);
    for (Index k = 0; k < n_points_; ++k) xs[k] = point(k);
    return xs;
  }

  /// Grid-sampled function.
  template <typename F>
  VectorX<Scalar> sample(F&& f) const {
    VectorX<Scalar> v(n_points_);
    for (Index k = 0; k < n_points_; ++k) v[k] = f(point(k));
    return v;
  }

  /// Index of the node equal to x (up to rounding), or -1.
  Index node_index(Scalar x) const {
    const Scalar t = (x - x_min_) / spacing_;
    const Scalar r = std::round(t);
    if (r < 0 || r > Scalar(n_points_ - 1)) return -1;
    return std::abs(t - r) <= snap_tolerance(t) ? static_cast<Index>(r) : -1;
  }

  bool operator==(const Grid1D& o) const {
    return x_min_ == o.x_min_ && x_max_ == o.x_max_ && n_points_ == o.n_points_;
  }

  // Rounding slack, in index units, under which a fractional coordinate is
  // treated as landing on a node.
  static Scalar snap_tolerance(Scalar t) {
    return Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
           std::max(Scalar(1), std::abs(t));
  }

 private:
  Scalar x_min_;
  Scalar x_max_;
  Index n_points_;
  Scalar spacing_;
};

/// Orthogonal projection onto [x_min, x_max].
template <typename Scalar>
Scalar project(const Grid1D<Scalar>& g, Scalar x) {
  if (!std::isfinite(x)) {
    std::ostringstream os;
    os << "project: non-finite state " << x;
    throw DomainError(os.str());
  }
  return std::clamp(x, g.x_min(), g.x_max());
}

template <typename Scalar>
BarycentricPair<Scalar> barycentric(const Grid1D<Scalar>& g, Scalar x) {
  if (!std::isfinite(x) || x < g.x_min() || x > g.x_max()) {
    std::ostringstream os;
    os << "barycentric: " << x << " outside [" << g.x_min() << ", " << g.x_max() << "]";
    throw DomainError(os.str());
  }
  const Scalar t = (x - g.x_min()) / g.spacing();
  const Scalar nearest = std::round(t);
  if (std::abs(t - nearest) <= Grid1D<Scalar>::snap_tolerance(t))
    return {static_cast<Index>(nearest), Scalar(1)};

  const Index left = std::clamp<Index>(static_cast<Index>(std::floor(t)), 0, g.size() - 2);
  Scalar right_weight = std::clamp(t - Scalar(left), Scalar(0), Scalar(1));
  return {left, Scalar(1) - right_weight};
}

/// barycentric(project(x)); total on finite reals.
template <typename Scalar>
BarycentricPair<Scalar> locate(const Grid1D<Scalar>& g, Scalar x) {
  return barycentric(g, project(g, x));
}

}  // namespace mfoc

#endif  // MFOC_GRID_HPP
