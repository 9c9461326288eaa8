#ifndef MFOC_COSTS_HPP
#define MFOC_COSTS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mfoc/hjb.hpp"

namespace mfoc {

enum class Curvature { Linear, Convex, Concave, General };

/// A cost chi on distributions over the grid together with its derivative
/// D chi(m, x_k) sampled on the grid nodes. For nonsmooth costs the
/// derivative is a sub- (convex) or super- (concave) gradient selection.
/// Derivatives are defined up to an additive constant.
template <typename Scalar>
class CostFunctional {
 public:
  virtual ~CostFunctional() = default;

  virtual Scalar evaluate(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const = 0;
  virtual VectorX<Scalar> derivative(const Grid1D<Scalar>& g,
                                     const DiscreteDistribution<Scalar>& m) const = 0;
  virtual std::string name() const = 0;
  virtual Curvature curvature() const { return Curvature::General; }
};

/// Raised when a cost is evaluated at a singular point; carries the
/// moment vector at which it happened.
template <typename Scalar>
class EvaluationError : public NumericError {
 public:
  EvaluationError(const std::string& what, VectorX<Scalar> moments)
      : NumericError(what), moments_(std::move(moments)) {}
  const VectorX<Scalar>& moments() const { return moments_; }

 private:
  VectorX<Scalar> moments_;
};

// ---------------------------------------------------------------------------
// Compositions of linear costs: chi(m) = Psi(int phi_1 dm, ..., int phi_N dm)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct OuterFunction {
  std::function<Scalar(const VectorX<Scalar>&)> value;
  std::function<VectorX<Scalar>(const VectorX<Scalar>&)> gradient;
};

template <typename Scalar>
class MomentComposition final : public CostFunctional<Scalar> {
 public:
  using Basis = std::function<Scalar(Scalar)>;

  MomentComposition(std::string name, std::vector<Basis> basis, OuterFunction<Scalar> outer,
                    Curvature curvature = Curvature::General)
      : name_(std::move(name)),
        basis_(std::move(basis)),
        outer_(std::move(outer)),
        curvature_(curvature) {
    if (basis_.empty()) throw ContractError("MomentComposition: empty basis");
  }

  /// y_i = sum_k phi_i(x_k) m(k).
  VectorX<Scalar> moments(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const {
    check(g, m);
    VectorX<Scalar> y = VectorX<Scalar>::Zero(static_cast<Index>(basis_.size()));
    for (std::size_t i = 0; i < basis_.size(); ++i)
      for (Index k = 0; k < g.size(); ++k)
        if (m[k] != 0) y[static_cast<Index>(i)] += basis_[i](g.point(k)) * m[k];
    return y;
  }

  Scalar evaluate(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const override {
    const VectorX<Scalar> y = moments(g, m);
    const Scalar v = outer_.value(y);
    if (!std::isfinite(v)) throw EvaluationError<Scalar>(name_ + ": outer function is not finite", y);
    return v;
  }

  /// D chi(m, x_k) = sum_i dPsi/dy_i (y) phi_i(x_k).
  VectorX<Scalar> derivative(const Grid1D<Scalar>& g,
                             const DiscreteDistribution<Scalar>& m) const override {
    const VectorX<Scalar> y = moments(g, m);
    const VectorX<Scalar> dpsi = outer_.gradient(y);
    if (dpsi.size() != y.size() || !dpsi.allFinite())
      throw EvaluationError<Scalar>(name_ + ": outer gradient is not finite", y);
    VectorX<Scalar> d = VectorX<Scalar>::Zero(g.size());
    for (std::size_t i = 0; i < basis_.size(); ++i)
      for (Index k = 0; k < g.size(); ++k)
        d[k] += dpsi[static_cast<Index>(i)] * basis_[i](g.point(k));
    return d;
  }

  std::string name() const override { return name_; }
  Curvature curvature() const override { return curvature_; }
  const OuterFunction<Scalar>& outer() const { return outer_; }
  const std::vector<Basis>& basis() const { return basis_; }

 private:
  void check(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const {
    if (m.size() != g.size()) throw ContractError(name_ + ": distribution does not match grid");
  }

  std::string name_;
  std::vector<Basis> basis_;
  OuterFunction<Scalar> outer_;
  Curvature curvature_;
};

template <typename Scalar>
std::function<Scalar(Scalar)> monomial(int power) {
  return [power](Scalar x) {
    Scalar r = 1;
    for (int i = 0; i < power; ++i) r *= x;
    return r;
  };
}

/// chi(m) = int f dm.
template <typename Scalar>
std::shared_ptr<MomentComposition<Scalar>> linear_cost(std::function<Scalar(Scalar)> f,
                                                       std::string name = "linear") {
  OuterFunction<Scalar> outer{[](const VectorX<Scalar>& y) { return y[0]; },
                              [](const VectorX<Scalar>&) { return VectorX<Scalar>::Ones(1); }};
  return std::make_shared<MomentComposition<Scalar>>(
      std::move(name), std::vector<std::function<Scalar(Scalar)>>{std::move(f)}, std::move(outer),
      Curvature::Linear);
}

template <typename Scalar>
std::shared_ptr<MomentComposition<Scalar>> mean_cost() {
  return linear_cost<Scalar>(monomial<Scalar>(1), "mean");
}

/// Var(m) = y2 - y1^2 (concave in m).
template <typename Scalar>
std::shared_ptr<MomentComposition<Scalar>> variance_cost() {
  OuterFunction<Scalar> outer{
      [](const VectorX<Scalar>& y) { return y[1] - y[0] * y[0]; },
      [](const VectorX<Scalar>& y) {
        VectorX<Scalar> d(2);
        d << -Scalar(2) * y[0], Scalar(1);
        return d;
      }};
  return std::make_shared<MomentComposition<Scalar>>(
      "variance", std::vector<std::function<Scalar(Scalar)>>{monomial<Scalar>(1), monomial<Scalar>(2)},
      std::move(outer), Curvature::Concave);
}

/// Variances below this are treated as zero by the guarded mean/std cost.
template <typename Scalar>
inline constexpr Scalar kZeroVariance = Scalar(1e-14);

/// chi(m) = E[X] + beta * sqrt(Var[X]); convex for beta <= 0, concave for
/// beta >= 0. With the guard on, a variance below kZeroVariance contributes
/// zero to both value and gradient; with it off such a point is an
/// evaluation error.
template <typename Scalar>
std::shared_ptr<MomentComposition<Scalar>> mean_plus_beta_std(Scalar beta, bool zero_variance_guard = true) {
  auto value = [beta, zero_variance_guard](const VectorX<Scalar>& y) {
    const Scalar var = y[1] - y[0] * y[0];
    if (var < kZeroVariance<Scalar>)
      return zero_variance_guard ? y[0] : std::numeric_limits<Scalar>::quiet_NaN();
    return y[0] + beta * std::sqrt(var);
  };
  auto gradient = [beta, zero_variance_guard](const VectorX<Scalar>& y) {
    const Scalar var = y[1] - y[0] * y[0];
    VectorX<Scalar> d(2);
    if (var < kZeroVariance<Scalar>) {
      if (!zero_variance_guard) d.setConstant(std::numeric_limits<Scalar>::quiet_NaN());
      else d << Scalar(1), Scalar(0);
      return d;
    }
    const Scalar s = beta / (Scalar(2) * std::sqrt(var));
    d << Scalar(1) - Scalar(2) * y[0] * s, s;
    return d;
  };
  const Curvature c = beta == 0 ? Curvature::Linear : (beta < 0 ? Curvature::Convex : Curvature::Concave);
  return std::make_shared<MomentComposition<Scalar>>(
      "mean_plus_beta_std",
      std::vector<std::function<Scalar(Scalar)>>{monomial<Scalar>(1), monomial<Scalar>(2)},
      OuterFunction<Scalar>{value, gradient}, c);
}

/// Central moment of order r through the binomial expansion
///   mu_r = (-y1)^r + sum_{i=1}^r C(r,i) y_i (-y1)^{r-i},  y_i = int x^i dm.
template <typename Scalar>
OuterFunction<Scalar> central_moment_outer(int r) {
  if (r < 1) throw ContractError("central_moment_outer: order must be >= 1");
  auto binom = [](int n, int k) {
    Scalar c = 1;
    for (int i = 1; i <= k; ++i) c = c * Scalar(n - k + i) / Scalar(i);
    return c;
  };
  auto ipow = [](Scalar b, int e) {
    Scalar p = 1;
    for (int i = 0; i < e; ++i) p *= b;
    return p;
  };
  auto value = [=](const VectorX<Scalar>& y) {
    const Scalar a = -y[0];
    Scalar v = ipow(a, r);
    for (int i = 1; i <= r; ++i) v += binom(r, i) * y[i - 1] * ipow(a, r - i);
    return v;
  };
  auto gradient = [=](const VectorX<Scalar>& y) {
    const Scalar a = -y[0];
    VectorX<Scalar> d = VectorX<Scalar>::Zero(r);
    d[0] = -Scalar(r) * ipow(a, r - 1);
    for (int i = 1; i <= r; ++i) {
      d[i - 1] += binom(r, i) * ipow(a, r - i);
      if (r - i >= 1) d[0] -= binom(r, i) * y[i - 1] * Scalar(r - i) * ipow(a, r - i - 1);
    }
    return d;
  };
  return {value, gradient};
}

template <typename Scalar>
std::shared_ptr<MomentComposition<Scalar>> central_moment_cost(int r) {
  std::vector<std::function<Scalar(Scalar)>> basis;
  for (int i = 1; i <= r; ++i) basis.push_back(monomial<Scalar>(i));
  return std::make_shared<MomentComposition<Scalar>>("central_moment_" + std::to_string(r),
                                                     std::move(basis), central_moment_outer<Scalar>(r));
}

// ---------------------------------------------------------------------------
// One-dimensional optimal transport with cost |x - y|^q
// ---------------------------------------------------------------------------

template <typename Scalar>
struct AtomicMeasure {
  std::vector<Scalar> values;  // sorted ascending
  std::vector<Scalar> masses;

  static AtomicMeasure from_grid(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) {
    AtomicMeasure a;
    for (Index k = 0; k < g.size(); ++k) {
      if (m[k] > 0) {
        a.values.push_back(g.point(k));
        a.masses.push_back(m[k]);
      }
    }
    return a;
  }
};

namespace detail {

template <typename Scalar>
std::vector<Scalar> cumulative(const std::vector<Scalar>& masses) {
  std::vector<Scalar> c(masses.size());
  Scalar s = 0;
  for (std::size_t i = 0; i < masses.size(); ++i) c[i] = s += masses[i];
  if (!c.empty()) {
    const Scalar total = c.back();
    for (auto& v : c) v /= total;
    c.back() = 1;
  }
  return c;
}

template <typename Scalar>
Scalar power_cost(Scalar x, Scalar y, Scalar q) {
  const Scalar d = std::abs(x - y);
  return q == Scalar(1) ? d : (q == Scalar(2) ? d * d : std::pow(d, q));
}

}  // namespace detail

/// min over couplings of sum |x - y|^q pi(x, y) for two atomic measures on
/// the line, via the monotone (quantile) coupling.
template <typename Scalar>
Scalar transport_cost_1d(const AtomicMeasure<Scalar>& a, const AtomicMeasure<Scalar>& b, Scalar q) {
  const auto fa = detail::cumulative(a.masses);
  const auto fb = detail::cumulative(b.masses);
  std::size_t i = 0, j = 0;
  Scalar level = 0, cost = 0;
  while (i < fa.size() && j < fb.size()) {
    const Scalar next = std::min(fa[i], fb[j]);
    cost += (next - level) * detail::power_cost(a.values[i], b.values[j], q);
    level = next;
    if (fa[i] <= next) ++i;
    if (fb[j] <= next) ++j;
  }
  return cost;
}

/// Kantorovich potential psi on the target atoms for the transport from
/// `source` to `target`, normalized by psi[0] = 0. Consecutive target atoms
/// are chained through the source atom where the coupling switches from one
/// to the other (the leftmost such atom when the switch falls between atoms).
template <typename Scalar>
std::vector<Scalar> target_potential_1d(const AtomicMeasure<Scalar>& source,
                                        const AtomicMeasure<Scalar>& target, Scalar q) {
  const auto fa = detail::cumulative(source.masses);
  const auto fb = detail::cumulative(target.masses);
  std::vector<Scalar> psi(target.values.size(), Scalar(0));
  std::size_t i = 0;
  for (std::size_t j = 0; j + 1 < target.values.size(); ++j) {
    while (i + 1 < fa.size() && fa[i] < fb[j]) ++i;
    const Scalar x = source.values[i];
    psi[j + 1] = psi[j] + detail::power_cost(x, target.values[j + 1], q) -
                 detail::power_cost(x, target.values[j], q);
  }
  return psi;
}

template <typename Scalar>
class Wasserstein1D final : public CostFunctional<Scalar> {
 public:
  enum class Mode { Root, Power };

  Wasserstein1D(AtomicMeasure<Scalar> target, Scalar q, Mode mode)
      : target_(std::move(target)), q_(q), mode_(mode) {
    if (!(q >= 1)) throw DomainError("Wasserstein1D: exponent must be >= 1");
    if (target_.values.empty()) throw DomainError("Wasserstein1D: empty target");
    Scalar total = 0;
    for (std::size_t i = 0; i < target_.values.size(); ++i) {
      if (i > 0 && !(target_.values[i] > target_.values[i - 1]))
        throw DomainError("Wasserstein1D: target atoms must be strictly increasing");
      if (!(target_.masses[i] > 0)) throw DomainError("Wasserstein1D: target masses must be positive");
      total += target_.masses[i];
    }
    if (std::abs(total - 1) > Scalar(1e-9)) throw DomainError("Wasserstein1D: target mass is not 1");
  }

  Wasserstein1D(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& target, Scalar q, Mode mode)
      : Wasserstein1D(AtomicMeasure<Scalar>::from_grid(g, target), q, mode) {}

  /// Transport cost to the target: d_q^q.
  Scalar transport_cost(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const {
    if (m.size() != g.size()) throw ContractError("Wasserstein1D: distribution does not match grid");
    return transport_cost_1d(AtomicMeasure<Scalar>::from_grid(g, m), target_, q_);
  }

  Scalar evaluate(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const override {
    const Scalar w = transport_cost(g, m);
    return mode_ == Mode::Power ? w : std::pow(w, Scalar(1) / q_);
  }

  /// Source potential phi(x_k) = min_j (|x_k - y_j|^q - psi_j), scaled by
  /// 1 / (q chi^{q-1}) in root mode. The zero vector is returned in root
  /// mode when chi(m) = 0.
  VectorX<Scalar> derivative(const Grid1D<Scalar>& g,
                             const DiscreteDistribution<Scalar>& m) const override {
    if (m.size() != g.size()) throw ContractError("Wasserstein1D: distribution does not match grid");
    const auto source = AtomicMeasure<Scalar>::from_grid(g, m);
    Scalar scale = 1;
    if (mode_ == Mode::Root) {
      const Scalar w = transport_cost_1d(source, target_, q_);
      if (w <= 0) return VectorX<Scalar>::Zero(g.size());
      const Scalar chi = std::pow(w, Scalar(1) / q_);
      scale = Scalar(1) / (q_ * std::pow(chi, q_ - 1));
    }
    const auto psi = target_potential_1d(source, target_, q_);
    VectorX<Scalar> phi(g.size());
    for (Index k = 0; k < g.size(); ++k) {
      const Scalar x = g.point(k);
      Scalar best = std::numeric_limits<Scalar>::infinity();
      for (std::size_t j = 0; j < psi.size(); ++j)
        best = std::min(best, detail::power_cost(x, target_.values[j], q_) - psi[j]);
      phi[k] = scale * best;
    }
    return phi;
  }

  /// psi on the target atoms for the transport from m (power-mode scaling).
  std::vector<Scalar> target_potential(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const {
    return target_potential_1d(AtomicMeasure<Scalar>::from_grid(g, m), target_, q_);
  }

  std::string name() const override { return mode_ == Mode::Root ? "wasserstein_root" : "wasserstein_power"; }
  Curvature curvature() const override { return mode_ == Mode::Power ? Curvature::Convex : Curvature::General; }
  const AtomicMeasure<Scalar>& target() const { return target_; }
  Scalar exponent() const { return q_; }
  Mode mode() const { return mode_; }

 private:
  AtomicMeasure<Scalar> target_;
  Scalar q_;
  Mode mode_;
};

// ---------------------------------------------------------------------------
// Conditional value at risk
// ---------------------------------------------------------------------------

/// CVaR_beta(m) = inf_psi { psi + int (x - psi)_+ dm / (1 - beta) }, concave in m.
/// The infimum is attained on the VaR interval [alpha_-, alpha_+]; alpha_- is
/// used throughout.
template <typename Scalar>
class CVaRCost final : public CostFunctional<Scalar> {
 public:
  explicit CVaRCost(Scalar beta) : beta_(beta) {
    if (!(beta > 0 && beta < 1)) throw ConfigError("CVaRCost: level must lie in (0, 1)");
  }

  /// alpha_-(m): smallest node whose cumulative mass reaches beta.
  Scalar value_at_risk(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const {
    if (m.size() != g.size()) throw ContractError("CVaRCost: distribution does not match grid");
    Scalar cum = 0;
    for (Index k = 0; k < g.size(); ++k) {
      cum += m[k];
      if (m[k] > 0 && cum >= beta_ - Scalar(1e-13)) return g.point(k);
    }
    return g.x_max();
  }

  /// (1 - beta)^{-1} int (x - psi)_+ dm + psi.
  Scalar dual_objective(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m, Scalar psi) const {
    Scalar s = 0;
    for (Index k = 0; k < g.size(); ++k) s += std::max(g.point(k) - psi, Scalar(0)) * m[k];
    return psi + s / (Scalar(1) - beta_);
  }

  Scalar evaluate(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const override {
    return dual_objective(g, m, value_at_risk(g, m));
  }

  /// (x_k - alpha_-)_+ / (1 - beta).
  VectorX<Scalar> derivative(const Grid1D<Scalar>& g,
                             const DiscreteDistribution<Scalar>& m) const override {
    const Scalar psi = value_at_risk(g, m);
    return g.sample([&](Scalar x) { return std::max(x - psi, Scalar(0)) / (Scalar(1) - beta_); });
  }

  std::string name() const override { return "cvar"; }
  Curvature curvature() const override { return Curvature::Concave; }
  Scalar level() const { return beta_; }

 private:
  Scalar beta_;
};

// ---------------------------------------------------------------------------
// Interaction integrals chi(m) = sum phi(x_k, x_k') m(k) m(k')
// ---------------------------------------------------------------------------

template <typename Scalar>
class InteractionCost final : public CostFunctional<Scalar> {
 public:
  using Kernel = std::function<Scalar(Scalar, Scalar)>;

  explicit InteractionCost(Kernel kernel, std::string name = "interaction")
      : kernel_(std::move(kernel)), name_(std::move(name)) {}

  Scalar evaluate(const Grid1D<Scalar>& g, const DiscreteDistribution<Scalar>& m) const override {
    if (m.size() != g.size()) throw ContractError(name_ + ": distribution does not match grid");
    const auto support = support_of(m);
    Scalar total = 0;
    for (const Index k : support) {
      Scalar row = 0;
      for (const Index l : support) row += kernel_(g.point(k), g.point(l)) * m[l];
      total += row * m[k];
    }
    return total;
  }

  /// D chi(m, x_k) = sum_k' (phi(x_k, x_k') + phi(x_k', x_k)) m(k').
  VectorX<Scalar> derivative(const Grid1D<Scalar>& g,
                             const DiscreteDistribution<Scalar>& m) const override {
    if (m.size() != g.size()) throw ContractError(name_ + ": distribution does not match grid");
    const auto support = support_of(m);
    VectorX<Scalar> d(g.size());
    for (Index k = 0; k < g.size(); ++k) {
      const Scalar x = g.point(k);
      Scalar s = 0;
      for (const Index l : support) s += (kernel_(x, g.point(l)) + kernel_(g.point(l), x)) * m[l];
      d[k] = s;
    }
    return d;
  }

  std::string name() const override { return name_; }

 private:
  static std::vector<Index> support_of(const DiscreteDistribution<Scalar>& m) {
    std::vector<Index> s;
    for (Index k = 0; k < m.size(); ++k)
      if (m[k] != 0) s.push_back(k);
    return s;
  }

  Kernel kernel_;
  std::string name_;
};

/// phi(x, y) = |y - x|^2 / 2, for which chi(m) = Var(m).
template <typename Scalar>
std::shared_ptr<InteractionCost<Scalar>> interaction_quadratic() {
  return std::make_shared<InteractionCost<Scalar>>(
      [](Scalar x, Scalar y) { return Scalar(0.5) * (y - x) * (y - x); }, "interaction_quadratic");
}

// ---------------------------------------------------------------------------
// Support function of the reachable moment set
// ---------------------------------------------------------------------------

/// sup over feedback policies of E[sum_i lambda_i phi_i(X_T)], obtained as
/// minus the value of the standard problem with terminal cost -sum lambda_i phi_i.
template <typename Scalar>
Scalar support_function(const ControlledChain<Scalar>& chain, const DiscreteDistribution<Scalar>& m0,
                        const VectorX<Scalar>& lambda,
                        const std::vector<std::function<Scalar(Scalar)>>& basis) {
  if (lambda.size() != static_cast<Index>(basis.size()))
    throw ContractError("support_function: lambda and basis sizes differ");
  VectorX<Scalar> terminal = VectorX<Scalar>::Zero(chain.n_states());
  for (std::size_t i = 0; i < basis.size(); ++i)
    terminal -= lambda[static_cast<Index>(i)] * chain.grid().sample(basis[i]);
  const auto result = backward_pass(chain, terminal);
  return -value_at_initial(result.value, m0);
}

}  // namespace mfoc

#endif  // MFOC_COSTS_HPP
