#include "dualot/cost.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <random>

using namespace dualot;
using P = Point<double>;

namespace {

P p1(double x) {
  P v(1);
  v[0] = x;
  return v;
}

P random_point(int d, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  P v(d);
  for (int k = 0; k < d; ++k) v[k] = u(rng);
  return v;
}

}  // namespace

TEST_CASE("quadratic cost basics") {
  const auto c = CostModel<double>::quadratic();
  CHECK(c.p() == 2);
  CHECK(c.q() == 2);
  CHECK(c.lagrangian(p1(3)) == 4.5);
  CHECK(c.hamiltonian(p1(-2)) == 2);
  CHECK(c.lip_lagrangian(0.5) == 0.5);
  CHECK(c.lip_hamiltonian(0.525) == 0.525);
  CHECK(c.f_lagrangian(p1(3))[0] == 1.5);
  CHECK(c.f_hamiltonian(p1(3))[0] == 1.5);
  CHECK(CostModel<double>::power(2).kind() == CostKind::kQuadratic);
  CHECK_THROWS(CostModel<double>::power(1.0));
}

TEST_CASE("Young inequalities and consistency of f_L, f_H") {
  std::mt19937_64 rng(7);
  for (double p : {2.0, 1.5, 3.0, 4.0}) {
    const auto c = CostModel<double>::power(p);
    for (int t = 0; t < 500; ++t) {
      const int d = 1 + t % 3;
      const P v = random_point(d, 2.0, rng);
      const P w = random_point(d, 2.0, rng);
      const double lhs = c.lagrangian(v) + c.hamiltonian(w);
      CHECK(lhs >= v.dot(w) - 1e-12);
      CHECK(lhs >= v.dot(w) + (c.f_lagrangian(v) - c.f_hamiltonian(w)).squaredNorm() - 1e-12);
      CHECK((c.f_hamiltonian(w) - c.f_lagrangian(c.grad_hamiltonian(w))).norm() <= 1e-12);
      CHECK((c.grad_lagrangian(c.grad_hamiltonian(w)) - w).norm() <= 1e-10);
      CHECK(c.lagrangian(v) >= 0);
    }
    CHECK(c.lagrangian(P::Zero(2)) == 0);
  }
}

TEST_CASE("power cost f maps carry the 1/sqrt(2q) scale when p <= 2") {
  const auto c = CostModel<double>::power(1.5);  // q = 3
  const P w = p1(2.0);
  CHECK(c.f_hamiltonian(w)[0] == doctest::Approx(std::pow(2.0, 1.5) / std::sqrt(6.0)));
}

TEST_CASE("Legendre transform of L matches H") {
  for (double p : {2.0, 3.0}) {
    const auto c = CostModel<double>::power(p);
    for (double w : {-1.3, -0.2, 0.0, 0.7, 1.1}) {
      double best = -1e300;
      const int samples = 40001;
      for (int s = 0; s < samples; ++s) {
        const double v = -4.0 + 8.0 * s / (samples - 1);
        best = std::max(best, v * w - c.lagrangian(p1(v)));
      }
      CHECK(best == doctest::Approx(c.hamiltonian(p1(w))).epsilon(1e-6));
    }
  }
}

TEST_CASE("perspective cost") {
  const auto c = CostModel<double>::quadratic();
  const auto unit = c.perspective(1.0, p1(0.6));
  CHECK(unit.value == doctest::Approx(c.lagrangian(p1(0.6))));
  CHECK_FALSE(unit.infinite);
  CHECK(c.perspective(0.0, p1(0.0)).value == 0);
  CHECK_FALSE(c.perspective(0.0, p1(0.0)).infinite);
  CHECK(c.perspective(0.0, p1(0.1)).infinite);
  CHECK(c.perspective(2.0, p1(3.0)).value == doctest::Approx(2.25));
  CHECK_THROWS_AS(c.perspective(-1.0, p1(0.0)), std::domain_error);

  // midpoint convexity in (rho, m)
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int t = 0; t < 200; ++t) {
    const double r1 = u(rng), r2 = u(rng);
    const P m1 = random_point(2, 2.0, rng), m2 = random_point(2, 2.0, rng);
    const double mid = c.perspective((r1 + r2) / 2, P((m1 + m2) / 2)).value;
    CHECK(mid <= 0.5 * (c.perspective(r1, m1).value + c.perspective(r2, m2).value) + 1e-12);
  }
}

TEST_CASE("projection onto K: spec examples") {
  const auto c = CostModel<double>::quadratic();
  auto feasible = c.project_onto_k(-1.0, p1(0.0));
  CHECK(feasible.s == -1.0);
  CHECK(feasible.w[0] == 0.0);

  auto origin = c.project_onto_k(1.0, p1(0.0));
  CHECK(origin.s == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(origin.w[0] == 0.0);
  // brute force over the boundary s = -w^2 / 2
  double best = 1e300, best_w = 0;
  for (int k = -200000; k <= 200000; ++k) {
    const double w = k * 1e-5;
    const double dist = (-w * w / 2 - 1) * (-w * w / 2 - 1) + w * w;
    if (dist < best) {
      best = dist;
      best_w = w;
    }
  }
  CHECK(best_w == doctest::Approx(0.0));

  // (0, 2): lambda (1 + lambda)^2 = 2
  const double lambda = oracle::bisect_decreasing(
      [](double l) { return 2 - l * (1 + l) * (1 + l); }, 0.0, 2.0, 1e-14);
  auto p = c.project_onto_k(0.0, p1(2.0));
  CHECK(p.multiplier == doctest::Approx(lambda).epsilon(1e-12));
  CHECK(p.s == doctest::Approx(-lambda).epsilon(1e-10));
  CHECK(p.w[0] == doctest::Approx(2 / (1 + lambda)).epsilon(1e-10));
}

TEST_CASE("projection onto K: KKT, idempotence, non-expansiveness") {
  const auto c = CostModel<double>::quadratic();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 300; ++t) {
    const int d = 1 + t % 3;
    const double a = u(rng);
    const P b = random_point(d, 3.0, rng);
    const auto p = c.project_onto_k(a, b);
    CHECK(p.s + c.hamiltonian(p.w) <= 1e-14);
    if (a + c.hamiltonian(b) > 0) {
      CHECK(p.multiplier >= 0);
      CHECK(std::abs(p.s + c.hamiltonian(p.w)) <= 1e-14);
      CHECK(a - p.s == doctest::Approx(p.multiplier).epsilon(1e-9));
      CHECK((b - p.w - p.multiplier * c.grad_hamiltonian(p.w)).norm() <= 1e-9);
    }
    const auto again = c.project_onto_k(p.s, p.w);
    CHECK(again.s == p.s);
    CHECK((again.w - p.w).norm() == 0);

    const double a2 = u(rng);
    const P b2 = random_point(d, 3.0, rng);
    const auto q = c.project_onto_k(a2, b2);
    const double in = std::hypot(a - a2, (b - b2).norm());
    const double out = std::hypot(p.s - q.s, (p.w - q.w).norm());
    CHECK(out <= in + 1e-12);
  }
}

TEST_CASE("projection onto K is not available for power costs") {
  const auto c = CostModel<double>::power(3.0);
  CHECK_THROWS_AS(c.project_onto_k(1.0, p1(1.0)), ProjectionError);
}

TEST_CASE("cost model instantiates with other scalar types") {
  const auto c = CostModel<long double>::quadratic();
  Point<long double> b(1);
  b[0] = 2;
  const auto p = c.project_onto_k(0.0L, b);
  CHECK(double(p.multiplier * (1 + p.multiplier) * (1 + p.multiplier)) == doctest::Approx(2.0));
  const auto f = CostModel<float>::quadratic();
  Point<float> w(2);
  w << 1.0f, 2.0f;
  CHECK(f.hamiltonian(w) == doctest::Approx(2.5));
}
