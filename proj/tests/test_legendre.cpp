#include "holop/legendre.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "holop/quadrature.hpp"
#include "holop/util.hpp"

using namespace holop;

TEST_CASE("psi point values") {
  CHECK(eval_psi(0, 0.3) == 1.0);
  CHECK(eval_psi(1, 0.5) == doctest::Approx(std::sqrt(3.0) * 0.5).epsilon(1e-14));
  CHECK(eval_psi(2, 1.0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
  // P_n(1) = 1 for the unnormalized polynomials
  for (int n = 0; n <= 25; ++n) CHECK(eval_P(n, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("tensor Psi") {
  std::vector<double> ones = {1.0, 1.0, 1.0};
  CHECK(eval_Psi(MultiIndex::zero(), ones) == 1.0);
  MultiIndex e12({{1, 1}, {2, 1}});
  CHECK(eval_Psi(e12, ones) == doctest::Approx(3.0).epsilon(1e-14));
  std::vector<double> zero = {0.0};
  CHECK(eval_Psi(MultiIndex::unit(1, 2), zero) ==
        doctest::Approx(-std::sqrt(5.0) / 2.0).epsilon(1e-14));
  CHECK_THROWS(eval_Psi(MultiIndex::unit(4), zero));
}

TEST_CASE("Psi at the all-ones corner equals u_weight") {
  std::vector<double> ones(6, 1.0);
  for (const auto& nu : hyperbolic_cross(6))
    CHECK(eval_Psi(nu, ones) == doctest::Approx(u_weight(nu)).epsilon(1e-13));
}

TEST_CASE("legendre roots") {
  auto r1 = legendre_roots(1);
  CHECK(r1.roots == std::vector<double>{0.0});
  CHECK(r1.leading_coeff == 1.0);

  auto r2 = legendre_roots(2);
  CHECK(r2.roots[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-13));
  CHECK(r2.roots[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-13));
  CHECK(r2.leading_coeff == doctest::Approx(1.5).epsilon(1e-14));

  auto r3 = legendre_roots(3);
  CHECK(r3.roots[0] == doctest::Approx(-std::sqrt(3.0 / 5.0)).epsilon(1e-13));
  CHECK(r3.roots[1] == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(r3.roots[2] == doctest::Approx(std::sqrt(3.0 / 5.0)).epsilon(1e-13));

  for (int n = 1; n <= 20; ++n) {
    auto r = legendre_roots(n);
    for (double x : r.roots) CHECK(std::abs(eval_P(n, x)) <= 1e-13);
    for (std::size_t i = 1; i < r.roots.size(); ++i) CHECK(r.roots[i] > r.roots[i - 1]);
  }
}

TEST_CASE("orthonormality under Gauss quadrature") {
  auto g = gauss_legendre(40);
  for (int i = 0; i <= 20; ++i)
    for (int j = i; j <= 20; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < g.nodes.size(); ++q)
        s += g.weights[q] * eval_psi(i, g.nodes[q]) * eval_psi(j, g.nodes[q]);
      CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) <= 1e-12);
    }
}

TEST_CASE("expansion evaluation") {
  VectorExpansion p;
  p.output_dim = 2;
  SUBCASE("empty support is zero") {
    std::vector<double> x = {0.3};
    CHECK(p.eval(x) == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("constant term") {
    p.support = IndexSet({MultiIndex::zero()});
    p.coefficients = {{2.0, -1.0}};
    std::vector<double> x = {0.7};
    CHECK(p.eval(x) == std::vector<double>{2.0, -1.0});
  }
  SUBCASE("single e1 term") {
    p.support = IndexSet({MultiIndex::unit(1)});
    p.coefficients = {{1.0, 0.0}};
    std::vector<double> x = {0.2};
    auto y = p.eval(x);
    CHECK(y[0] == doctest::Approx(std::sqrt(3.0) * 0.2).epsilon(1e-14));
    CHECK(y[1] == 0.0);
  }
}

TEST_CASE("bochner norm") {
  auto rule = smolyak(2, 3);
  DiscreteNorm norm{NormKind::WeightedEuclidean, {0.5, 0.5}};

  VectorField zero = [](std::span<const double>) { return std::vector<double>{0.0, 0.0}; };
  CHECK(bochner_l2_norm(zero, rule, norm) == 0.0);

  VectorField psi1 = [](std::span<const double> x) {
    return std::vector<double>{eval_psi(1, x[0]), 0.0};
  };
  DiscreteNorm unit_mass{NormKind::WeightedEuclidean, {2.0, 0.0}};
  // unit total mass on the first coordinate: ||(a, 0)||^2 = 2 a^2 * ... use {1,1}
  DiscreteNorm mass11{NormKind::WeightedEuclidean, {1.0, 1.0}};
  CHECK(bochner_l2_norm(psi1, rule, mass11) == doctest::Approx(1.0).epsilon(1e-12));

  VectorField constv = [](std::span<const double>) { return std::vector<double>{-3.0, 0.0}; };
  CHECK(bochner_l2_norm(constv, rule, mass11) == doctest::Approx(3.0).epsilon(1e-12));
  (void)unit_mass;
}

TEST_CASE("pettis norm") {
  auto rule = smolyak(2, 3);
  SUBCASE("zero field") {
    VectorField zero = [](std::span<const double>) { return std::vector<double>{0.0}; };
    DiscreteNorm norm{NormKind::WeightedEuclidean, {1.0}};
    CHECK(pettis_l2_norm(zero, rule, norm) == 0.0);
  }
  SUBCASE("K=1 equals bochner") {
    VectorField f = [](std::span<const double> x) {
      return std::vector<double>{x[0] + 0.3 * x[1] * x[1]};
    };
    DiscreteNorm norm{NormKind::WeightedEuclidean, {1.0}};
    CHECK(pettis_l2_norm(f, rule, norm) ==
          doctest::Approx(bochner_l2_norm(f, rule, norm)).epsilon(1e-9));
  }
  SUBCASE("orthonormal pair gives identity second moment") {
    VectorField f = [](std::span<const double> x) {
      return std::vector<double>{eval_psi(1, x[0]), eval_psi(1, x[1])};
    };
    DiscreteNorm norm{NormKind::WeightedEuclidean, {1.0, 1.0}};
    CHECK(pettis_l2_norm(f, rule, norm) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pettis <= bochner on random fields") {
  auto rule = smolyak(2, 4);
  DiscreteNorm norm{NormKind::WeightedEuclidean, {0.25, 0.25, 0.25, 0.25}};
  for (int trial = 0; trial < 30; ++trial) {
    auto eng = keyed_engine(23, trial);
    std::vector<double> a(12);
    for (auto& ai : a) ai = uniform_pm1(eng);
    VectorField f = [&a](std::span<const double> x) {
      std::vector<double> y(4);
      for (int k = 0; k < 4; ++k)
        y[k] = a[3 * k] + a[3 * k + 1] * x[0] + a[3 * k + 2] * x[0] * x[1];
      return y;
    };
    CHECK(pettis_l2_norm(f, rule, norm) <= bochner_l2_norm(f, rule, norm) + 1e-10);
  }
}

TEST_CASE("discrete seminorm") {
  DiscreteNorm norm{NormKind::WeightedEuclidean, {1.0}};
  CHECK(discrete_seminorm({{0.0}, {0.0}}, norm) == 0.0);
  CHECK(discrete_seminorm({{2.0}}, norm) == doctest::Approx(2.0));
  CHECK(discrete_seminorm({{3.0}, {4.0}}, norm) == doctest::Approx(std::sqrt(12.5)));
}

TEST_CASE("sup norm estimate") {
  DiscreteNorm norm{NormKind::Sup, {1.0}};
  VectorField zero = [](std::span<const double>) { return std::vector<double>{0.0}; };
  CHECK(sup_norm_estimate(zero, 2, 100, 0, norm) == 0.0);

  VectorField psi1 = [](std::span<const double> x) {
    return std::vector<double>{eval_psi(1, x[0])};
  };
  CHECK(sup_norm_estimate(psi1, 2, 200, 0, norm) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));

  for (const auto& nu : hyperbolic_cross(4)) {
    VectorField f = [&nu](std::span<const double> x) {
      return std::vector<double>{eval_Psi(nu, x)};
    };
    const double est = sup_norm_estimate(f, 4, 500, 7, norm);
    CHECK(est <= u_weight(nu) + 1e-12);
    CHECK(est == doctest::Approx(u_weight(nu)).epsilon(1e-12));  // attained at corner
  }
}

TEST_CASE("nikolskii inequality") {
  // sup|p| <= sqrt(|S|_u) * pettis L2 norm over random expansions
  auto rule = smolyak(4, 5);
  for (int trial = 0; trial < 100; ++trial) {
    auto eng = keyed_engine(31, trial);
    const int K = (trial % 2 == 0) ? 1 : 4;
    auto lam = hyperbolic_cross(4).restrict_dims(4);
    // random sub-support
    std::vector<MultiIndex> sub;
    for (const auto& nu : lam)
      if (std::uniform_real_distribution<double>(0, 1)(eng) < 0.4) sub.push_back(nu);
    if (sub.empty()) sub.push_back(MultiIndex::zero());
    VectorExpansion p;
    p.support = IndexSet(sub, 4);
    p.output_dim = K;
    p.coefficients.assign(p.support.size(), std::vector<double>(K));
    for (auto& c : p.coefficients)
      for (auto& ck : c) ck = uniform_pm1(eng);
    DiscreteNorm norm{NormKind::WeightedEuclidean, std::vector<double>(K, 1.0 / K)};
    VectorField f = [&p](std::span<const double> x) { return p.eval(x); };
    const double sup = sup_norm_estimate(f, 4, 300, trial, norm);
    const double pettis = pettis_l2_norm(f, rule, norm);
    const double su = weighted_cardinality(p.support, WeightKind::U, WeightSystem{});
    CHECK(sup <= std::sqrt(su) * pettis + 1e-10);
  }
}

TEST_CASE("lipschitz inequality") {
  auto rule = smolyak(3, 5);
  WeightSystem w{0.0};
  for (int trial = 0; trial < 100; ++trial) {
    auto eng = keyed_engine(37, trial);
    auto lam = hyperbolic_cross(3);
    std::vector<MultiIndex> sub;
    for (const auto& nu : lam)
      if (std::uniform_real_distribution<double>(0, 1)(eng) < 0.5) sub.push_back(nu);
    if (sub.empty()) sub.push_back(MultiIndex::unit(1));
    VectorExpansion p;
    p.support = IndexSet(sub, 3);
    p.output_dim = 2;
    p.coefficients.assign(p.support.size(), std::vector<double>(2));
    for (auto& c : p.coefficients)
      for (auto& ck : c) ck = uniform_pm1(eng);
    DiscreteNorm norm{NormKind::WeightedEuclidean, {0.5, 0.5}};
    VectorField f = [&p](std::span<const double> x) { return p.eval(x); };
    const double pettis = pettis_l2_norm(f, rule, norm);
    const double sv = weighted_cardinality(p.support, WeightKind::V, w);
    const double lip = 0.5 * std::sqrt(sv) * pettis;
    for (int pair = 0; pair < 100; ++pair) {
      std::vector<double> x(3), xp(3);
      double dinf = 0.0;
      for (int j = 0; j < 3; ++j) {
        x[j] = uniform_pm1(eng);
        xp[j] = uniform_pm1(eng);
        dinf = std::max(dinf, std::abs(xp[j] - x[j]));
      }
      auto fx = p.eval(x), fxp = p.eval(xp);
      std::vector<double> diff = {fxp[0] - fx[0], fxp[1] - fx[1]};
      CHECK(norm(diff) <= lip * dinf + 1e-10);
    }
  }
}

TEST_CASE("expansion csv round trip") {
  VectorExpansion p;
  p.support = IndexSet({MultiIndex::zero(), MultiIndex::unit(1), MultiIndex({{1, 1}, {3, 2}})});
  p.output_dim = 3;
  p.coefficients = {{1.0, 2.0, 3.0}, {-0.5, 0.25, 1e-17}, {M_PI, -M_E, 0.1}};
  std::stringstream ss;
  write_expansion_csv(ss, p);
  auto q = read_expansion_csv(ss, 3);
  REQUIRE(q.support.size() == p.support.size());
  CHECK(q.output_dim == 3);
  for (std::size_t i = 0; i < p.support.size(); ++i) {
    CHECK(q.support[i] == p.support[i]);
    for (int k = 0; k < 3; ++k) CHECK(q.coefficients[i][k] == p.coefficients[i][k]);
  }
}
