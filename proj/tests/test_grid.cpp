#include "dualot/grid.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <random>

using namespace dualot;

namespace {

GridSpec<double> grid1(int n_x, int n_t = 4) {
  return GridSpec<double>::with_viscosity(1, 1.0, n_t, n_x, 0.5, 0.0);
}

VectorX<double> vec(std::initializer_list<double> v) {
  VectorX<double> out(v.size());
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

VectorX<double> random_vec(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  VectorX<double> v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace

TEST_CASE("grid spec invariants") {
  const auto g = GridSpec<double>::make(1, 1.0, 32, 32, 0.5, 0.525);
  CHECK(g.dt == 1.0 / 32);
  CHECK(g.dx == 1.0 / 32);
  CHECK(g.h == g.dt);
  CHECK(g.zeta == doctest::Approx(1.0));
  CHECK(g.diam == doctest::Approx(0.5));
  CHECK(g.eps == doctest::Approx(0.2625 / 32));
  CHECK(g.eps / g.dx <= g.dx / (2 * g.d * g.dt));
  // Lip(H)/2 = 1 exceeds dx/(2 d dt) = 0.5 when dt = dx
  CHECK_THROWS_AS(GridSpec<double>::make(1, 1.0, 32, 32, 0.5, 2.0), GridError);
  CHECK_THROWS_AS(GridSpec<double>::make(0, 1.0, 32, 32, 0.5, 0.5), GridError);
  CHECK_THROWS_AS(GridSpec<double>::make(1, 1.0, 32, 1, 0.5, 0.5), GridError);
  const auto g2 = GridSpec<double>::make(2, 1.0, 8, 8, 0.7, 0.5);
  CHECK(g2.diam == doctest::Approx(std::sqrt(2.0) / 2));
  CHECK(g2.spatial_size() == 64);
  CHECK(g2.size(Domain::kSpaceTime) == 9 * 64);
  CHECK(g2.size(Domain::kSpaceTimeOpen) == 8 * 64);
  CHECK(g2.flatten(g2.unflatten(37)) == 37);
  CHECK(g2.flatten({-1, 8}) == 7);
}

TEST_CASE("coordinates wrap to [-D/2, D/2)") {
  const auto g = grid1(4);
  CHECK(g.coordinate(0, 0) == 0.0);
  CHECK(g.coordinate(1, 0) == 0.25);
  CHECK(g.coordinate(2, 0) == -0.5);
  CHECK(g.coordinate(3, 0) == -0.25);
}

TEST_CASE("forward and backward differences") {
  const auto g = grid1(4);
  const VectorX<double> psi = vec({0, 1, 3, 2});
  CHECK(forward_diff(g, psi, 0) == vec({1, 2, -1, -2}));
  CHECK(backward_diff(g, psi, 0) == vec({-2, 1, 2, -1}));
  CHECK(forward_diff(g, VectorX<double>::Constant(4, 3.5), 0).isZero(0));
  CHECK(backward_diff(g, VectorX<double>::Constant(4, 3.5), 0).isZero(0));
  CHECK_THROWS_AS(forward_diff(g, psi, 1), GridError);

  // backward(j) = forward(j - 1)
  const VectorX<double> f = forward_diff(g, psi, 0);
  const VectorX<double> b = backward_diff(g, psi, 0);
  for (int j = 0; j < 4; ++j) CHECK(b[j] == f[(j + 3) % 4]);

  // linear ramp a j on interior indices
  const auto g8 = grid1(8);
  VectorX<double> ramp(8);
  for (int j = 0; j < 8; ++j) ramp[j] = 0.75 * j;
  const VectorX<double> fr = forward_diff(g8, ramp, 0);
  for (int j = 0; j < 7; ++j) CHECK(fr[j] == 0.75);
  // periodic wrap telescopes
  CHECK(fr.sum() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("centered gradient and laplacian on the 4-point example") {
  const auto g = grid1(4);
  const VectorX<double> psi = vec({0, 1, 3, 2});
  CHECK(centered_diff(g, psi, 0) == vec({-2, 6, 2, -6}));
  CHECK(discrete_laplacian(g, psi) == vec({48, 16, -48, -16}));
  CHECK(discrete_laplacian(g, psi).sum() == 0.0);
  CHECK(centered_diff(g, VectorX<double>::Constant(4, 1.0), 0).isZero(0));

  // bitwise identity with (backward + forward) / (2 dx)
  std::mt19937_64 rng(3);
  const VectorX<double> r = random_vec(4, rng);
  const VectorX<double> expect = (backward_diff(g, r, 0) + forward_diff(g, r, 0)) / (2 * g.dx);
  CHECK(centered_diff(g, r, 0) == expect);

  ScalarField<double> field(g, Domain::kSpace, psi);
  const VectorField<double> grad = centered_gradient(g, field);
  CHECK(grad.component(0, 0) == vec({-2, 6, 2, -6}));
}

TEST_CASE("operators match dense stencil matrices") {
  std::mt19937_64 rng(11);
  for (int n : {3, 4, 8}) {
    const auto g = grid1(n);
    const VectorX<double> psi = random_vec(n, rng);
    CHECK((forward_diff(g, psi, 0) - oracle::forward(n) * psi).norm() <= 1e-14);
    CHECK((backward_diff(g, psi, 0) - oracle::backward(n) * psi).norm() <= 1e-14);
    CHECK((centered_diff(g, psi, 0) - oracle::centered(n, g.dx) * psi).norm() <= 1e-12 * n);
    CHECK((discrete_laplacian(g, psi) - oracle::laplacian(n, g.dx) * psi).norm() <= 1e-10 * n * n);
  }
}

TEST_CASE("adjoint pairing holds for every operator") {
  std::mt19937_64 rng(5);
  for (int n : {3, 4, 8}) {
    for (int d : {1, 2}) {
      const auto g = GridSpec<double>::with_viscosity(d, 1.0, 3, n, 0.5, 0.0);
      ScalarField<double> psi(g, Domain::kSpace, random_vec(g.spatial_size(), rng));
      VectorField<double> m(g, Domain::kSpace);
      m.values = random_vec(m.values.size(), rng);

      const VectorField<double> grad = centered_gradient(g, psi);
      const double lhs = inner<double>(grad.values, m.values);
      const double rhs = inner<double>(psi.values, adjoint_apply(g, Operator::kCenteredGradient, m).values);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * (1 + std::abs(lhs)));

      VectorField<double> fwd(g, Domain::kSpace);
      for (int k = 0; k < d; ++k) fwd.component(0, k) = forward_diff(g, psi.values, k) / g.dx;
      const double lf = inner<double>(fwd.values, m.values);
      const double rf = inner<double>(psi.values, adjoint_apply(g, Operator::kForwardDiffOverDx, m).values);
      CHECK(std::abs(lf - rf) <= 1e-12 * (1 + std::abs(lf)));

      ScalarField<double> other(g, Domain::kSpace, random_vec(g.spatial_size(), rng));
      const double ll = inner<double>(discrete_laplacian(g, psi).values, other.values);
      const double rl = inner<double>(psi.values, adjoint_apply(g, Operator::kDiscreteLaplacian, other).values);
      CHECK(std::abs(ll - rl) <= 1e-12 * (1 + std::abs(ll)));
      CHECK(adjoint_apply(g, Operator::kDiscreteLaplacian, other).values ==
            discrete_laplacian(g, other).values);

      ScalarField<double> phi(g, Domain::kSpaceTime, random_vec(g.size(Domain::kSpaceTime), rng));
      ScalarField<double> f(g, Domain::kSpaceTimeOpen, random_vec(g.size(Domain::kSpaceTimeOpen), rng));
      const double lt = inner<double>(time_derivative(g, phi).values, f.values);
      const double rt = inner<double>(phi.values, adjoint_apply(g, Operator::kTimeDerivative, f).values);
      CHECK(std::abs(lt - rt) <= 1e-12 * (1 + std::abs(lt)));
    }
  }
}

TEST_CASE("adjoint of zero is zero and domain mismatches throw") {
  const auto g = grid1(4);
  VectorField<double> zero(g, Domain::kSpace);
  CHECK(adjoint_apply(g, Operator::kCenteredGradient, zero).values.isZero(0));
  ScalarField<double> on_q(g, Domain::kSpaceTime);
  CHECK_THROWS_AS(adjoint_apply(g, Operator::kTimeDerivative, on_q), GridError);
  CHECK_THROWS_AS(adjoint_apply(g, Operator::kCenteredGradient, on_q), GridError);
  ScalarField<double> omega(g, Domain::kSpace);
  CHECK_THROWS_AS(time_derivative(g, omega), GridError);
}
