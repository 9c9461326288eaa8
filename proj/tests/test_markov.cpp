#include <random>

#include <doctest.h>

#include "mfoc/markov.hpp"
#include "oracles.hpp"

using namespace mfoc;

namespace {

Dynamics1D<double> still(ControlGrid<double> c) {
  return {[](double, double) { return 0.0; }, [](double, double) { return 0.0; }, std::move(c)};
}

Dynamics1D<double> drift_only(ControlGrid<double> c) {
  return {[](double, double u) { return u; }, [](double, double) { return 0.0; }, std::move(c)};
}

}  // namespace

TEST_CASE("one-step destinations") {
  const TimeGrid<double> tg(1.0, 100);
  const ControlGrid<double> u(-1.0, 1.0, 41);
  {
    auto [up, down] = destinations(drift_control_dynamics(u), tg, 0.0, 0.0);
    CHECK(up == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(down == doctest::Approx(-0.1).epsilon(1e-14));
  }
  {
    auto [up, down] = destinations(drift_control_dynamics(u), tg, 0.0, 1.0);
    CHECK(up == doctest::Approx(0.11).epsilon(1e-14));
    CHECK(down == doctest::Approx(-0.09).epsilon(1e-14));
  }
  {
    auto [up, down] = destinations(risk_control_dynamics(u), tg, 0.0, 1.0);
    CHECK(up == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(down == doctest::Approx(0.01).epsilon(1e-14));
  }
  Dynamics1D<double> bad{[](double, double) { return NAN; }, [](double, double) { return 1.0; }, u};
  CHECK_THROWS_WITH_AS(destinations(bad, tg, 0.5, 0.25), doctest::Contains("x=0.5"), DomainError);
}

TEST_CASE("transition rows") {
  const TimeGrid<double> tg(1.0, 100);
  const ControlGrid<double> u(-1.0, 1.0, 41);

  SUBCASE("no motion") {
    const Grid1D<double> g(-5.0, 5.0, 1001);
    const auto row = transition_row(g, still(u), tg, 500, 0.3);
    REQUIRE(row.count == 1);
    CHECK(row.entries[0].index == 500);
    CHECK(row.entries[0].probability == 1.0);
  }
  SUBCASE("destinations on nodes, dx = 0.01") {
    const Grid1D<double> g(-5.0, 5.0, 1001);
    const auto row = transition_row(g, drift_control_dynamics(u), tg, 500, 0.0);
    REQUIRE(row.count == 2);
    CHECK(row.entries[0].index == 490);
    CHECK(row.entries[1].index == 510);
    CHECK(row.entries[0].probability == 0.5);
    CHECK(row.entries[1].probability == 0.5);
  }
  SUBCASE("destinations on nodes, dx = 0.02") {
    const Grid1D<double> g(-5.0, 5.0, 501);
    const auto row = transition_row(g, drift_control_dynamics(u), tg, 250, 0.0);
    REQUIRE(row.count == 2);
    CHECK(row.entries[0].index == 245);
    CHECK(row.entries[1].index == 255);
    double sum = 0;
    for (const auto& e : row) sum += e.probability;
    CHECK(sum == 1.0);
  }
  SUBCASE("clamped at the boundary") {
    const Grid1D<double> g(-5.0, 5.0, 1001);
    const auto row = transition_row(g, drift_control_dynamics(u), tg, 1000, 1.0);
    REQUIRE(row.count == 2);
    CHECK(row.entries[1].index == 1000);
    CHECK(row.entries[1].probability == doctest::Approx(0.5));
  }
}

TEST_CASE("kernel matches the hat-function formula") {
  const Grid1D<double> g(-1.0, 1.0, 5);
  const ControlGrid<double> u(-1.0, 1.0, 9);
  const TimeGrid<double> tg(0.3, 1);
  std::mt19937 rng(3);
  std::uniform_int_distribution<Index> pick(0, u.size() - 1);
  for (auto dyn : {drift_control_dynamics(u), risk_control_dynamics(u)}) {
    Eigen::VectorXd slice(g.size());
    for (Index k = 0; k < g.size(); ++k) slice[k] = u[pick(rng)];
    const Eigen::MatrixXd p = Eigen::MatrixXd(build_kernel(g, dyn, tg, slice));
    for (Index k = 0; k < g.size(); ++k) {
      const double b = dyn.drift(g.point(k), slice[k]), s = dyn.volatility(g.point(k), slice[k]);
      const Eigen::MatrixXd expected = oracle::dense_kernel(g, tg.dt, b, s, k);
      for (Index l = 0; l < g.size(); ++l) CHECK(p(k, l) == doctest::Approx(expected(0, l)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(build_kernel(g, drift_control_dynamics(u), tg, Eigen::VectorXd::Zero(3)), ContractError);
}

TEST_CASE("constant zero policy without motion gives the identity") {
  const Grid1D<double> g(0.0, 1.0, 11);
  const ControlGrid<double> u(-1.0, 1.0, 3);
  const auto p = build_kernel(g, still(u), TimeGrid<double>(1.0, 10), Eigen::VectorXd::Zero(11));
  CHECK(Eigen::MatrixXd(p).isIdentity());
}

TEST_CASE("rows are stochastic and local") {
  const Grid1D<double> g(-5.0, 5.0, 1001);
  const ControlGrid<double> u(-1.0, 1.0, 41);
  const TimeGrid<double> tg(1.0, 100);
  std::mt19937 rng(17);
  std::uniform_int_distribution<Index> pk(0, g.size() - 1);
  std::uniform_real_distribution<double> pu(-1.0, 1.0);
  for (auto dyn : {drift_control_dynamics(u), risk_control_dynamics(u)}) {
    for (int i = 0; i < 10000; ++i) {
      const auto row = transition_row(g, dyn, tg, pk(rng), pu(rng));
      REQUIRE(row.count <= 4);
      double sum = 0;
      for (const auto& e : row) {
        REQUIRE(e.probability >= 0.0);
        sum += e.probability;
      }
      REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("deterministic drift moves the mean by b dt") {
  const Grid1D<double> g(-5.0, 5.0, 1001);
  const ControlGrid<double> u(-1.0, 1.0, 41);
  const TimeGrid<double> tg(1.0, 100);
  const auto dyn = drift_only(u);
  std::mt19937 rng(5);
  std::uniform_int_distribution<Index> pk(1, g.size() - 2);
  for (int i = 0; i < 1000; ++i) {
    const Index k = pk(rng);
    const double uu = u[i % u.size()];
    const auto row = transition_row(g, dyn, tg, k, uu);
    double mean = 0;
    for (const auto& e : row) mean += e.probability * g.point(e.index);
    const double target = std::clamp(g.point(k) + uu * tg.dt, g.x_min(), g.x_max());
    CHECK(std::abs(mean - target) <= g.spacing() / 2);
  }
}

TEST_CASE("kernel construction is deterministic") {
  const Grid1D<double> g(-5.0, 5.0, 201);
  const ControlGrid<double> u(-1.0, 1.0, 41);
  const TimeGrid<double> tg(1.0, 100);
  Eigen::VectorXd slice(g.size());
  for (Index k = 0; k < g.size(); ++k) slice[k] = u[k % u.size()];
  const auto a = build_kernel(g, drift_control_dynamics(u), tg, slice);
  const auto b = build_kernel(g, drift_control_dynamics(u), tg, slice);
  REQUIRE(a.nonZeros() == b.nonZeros());
  for (Index i = 0; i < a.nonZeros(); ++i) {
    CHECK(a.valuePtr()[i] == b.valuePtr()[i]);
    CHECK(a.innerIndexPtr()[i] == b.innerIndexPtr()[i]);
  }
}

TEST_CASE("initial laws") {
  const Grid1D<double> g(-5.0, 5.0, 1001);

  const auto point = discretize_initial(g, InitialLaw<double>{PointMass<double>{0.0}});
  CHECK(point[500] == 1.0);

  const auto mid = discretize_initial(g, InitialLaw<double>{PointMass<double>{0.005}});
  CHECK(mid[500] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mid[501] == doctest::Approx(0.5).epsilon(1e-12));

  const std::vector<Atom<double>> atoms{{-2.0, 1.0 / 3}, {0.0, 1.0 / 3}, {2.0, 1.0 / 3}};
  const auto mbar = discretize_initial(g, InitialLaw<double>{atoms});
  CHECK(mbar[300] == doctest::Approx(1.0 / 3));
  CHECK(mbar[500] == doctest::Approx(1.0 / 3));
  CHECK(mbar[700] == doctest::Approx(1.0 / 3));
  CHECK(mbar.weights().sum() == doctest::Approx(1.0).epsilon(1e-15));

  const auto samples = discretize_initial(g, InitialLaw<double>{Samples<double>{{0.0, 0.005, 9.0}}});
  CHECK(samples[500] == doctest::Approx(0.5));
  CHECK(samples[501] == doctest::Approx(1.0 / 6));
  CHECK(samples[1000] == doctest::Approx(1.0 / 3));

  const std::vector<Atom<double>> short_mass{{0.0, 0.5}, {1.0, 0.4}};
  CHECK_THROWS_AS(discretize_initial(g, InitialLaw<double>{short_mass}), DomainError);
}

TEST_CASE("controlled chain caches every row") {
  auto chain = oracle::drift_chain(-1.0, 1.0, 21, -1.0, 1.0, 5, 1.0, 10);
  const auto& u = chain->controls();
  for (Index k = 0; k < chain->n_states(); ++k) {
    for (Index v = 0; v < u.size(); ++v) {
      const auto direct = transition_row(chain->grid(), chain->dynamics(), chain->time(), k, u[v]);
      const auto& cached = chain->row(k, v);
      REQUIRE(cached.count == direct.count);
      for (int i = 0; i < cached.count; ++i) {
        CHECK(cached.entries[i].index == direct.entries[i].index);
        CHECK(cached.entries[i].probability == direct.entries[i].probability);
      }
    }
  }
  CHECK(chain->row_for(3, 0.25).count >= 1);
  CHECK_THROWS_AS(chain->row_for(3, 2.0), DomainError);
}
