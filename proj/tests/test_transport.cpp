#include "dualot/transport.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <random>

using namespace dualot;

namespace {

VectorX<double> random_vec(Index n, std::mt19937_64& rng, double scale = 1) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VectorX<double> v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

VectorX<double> uniform_measure(Index n) { return VectorX<double>::Constant(n, 1.0 / n); }

}  // namespace

TEST_CASE("A and A^T agree with a dense construction") {
  const auto g = GridSpec<double>::with_viscosity(1, 1.0, 2, 4, 0.5, 0.0625);
  const ConstraintOperator<double> a(g);
  const oracle::Mat dense = oracle::constraint_matrix(2, 4, g.dt, g.dx, g.eps);
  CHECK(a.rows() == dense.rows());
  CHECK(a.cols() == dense.cols());
  std::mt19937_64 rng(29);
  for (int t = 0; t < 20; ++t) {
    const VectorX<double> phi = random_vec(a.cols(), rng);
    const VectorX<double> lam = random_vec(a.rows(), rng);
    CHECK((a.apply(phi).values - dense * phi).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.apply_transpose(lam) - dense.transpose() * lam).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(a.apply(phi).values.dot(lam) - phi.dot(a.apply_transpose(lam))) <= 1e-12 * (1 + lam.norm() * phi.norm()));
  }
  CHECK((oracle::Mat(a.to_sparse()) - dense).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("A is adjoint-consistent in two dimensions") {
  const auto g = GridSpec<double>::with_viscosity(2, 1.0, 3, 4, 0.5, 0.01);
  const ConstraintOperator<double> a(g);
  std::mt19937_64 rng(31);
  const VectorX<double> phi = random_vec(a.cols(), rng);
  const VectorX<double> lam = random_vec(a.rows(), rng);
  CHECK(std::abs(a.apply(phi).values.dot(lam) - phi.dot(a.apply_transpose(lam))) <= 1e-10);
  const Eigen::SparseMatrix<double> s = a.to_sparse();
  CHECK((s * phi - a.apply(phi).values).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("A on constants and on the strictly feasible point") {
  const auto p = SchemeParams<double>::make(1, 1.0, 8, CostModel<double>::quadratic());
  const ConstraintOperator<double> a(p.grid);
  CHECK(a.apply(VectorX<double>::Constant(a.cols(), 2.5)).values.cwiseAbs().maxCoeff() <= 1e-12);

  // linear in time with slope -c: sigma_t = -c, the other blocks vanish
  const double c = 0.3;
  const Index s = p.grid.spatial_size();
  VectorX<double> phi(a.cols());
  for (Index i = 0; i <= p.grid.n_t; ++i) phi.segment(i * s, s).setConstant(-double(i) * p.grid.dt * c);
  const auto out = a.apply(phi);
  CHECK((out.t_block().array() + c).abs().maxCoeff() <= 1e-12);
  CHECK(out.x_block().cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(out.r_block().cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(a.apply(VectorX<double>::Zero(3)), GridError);
}

TEST_CASE("F_D") {
  const auto g = GridSpec<double>::with_viscosity(1, 1.0, 2, 4, 0.5, 0.0);
  const VectorX<double> mu = uniform_measure(4), nu = uniform_measure(4);
  DualState<double> phi(g, Domain::kSpaceTime, VectorX<double>::Constant(12, 1.7));
  CHECK(objective_fd(g, phi, mu, nu) == doctest::Approx(0.0).scale(1e-15));

  phi.values.setZero();
  phi.slice(2)[1] = 1;
  CHECK(objective_fd(g, phi, mu, nu) == 0.25);
  CHECK(objective_vector(g, mu, nu).dot(phi.values) == 0.25);

  std::mt19937_64 rng(37);
  VectorX<double> pm = random_vec(4, rng).cwiseAbs(), pn = random_vec(4, rng).cwiseAbs();
  pm /= pm.sum();
  pn /= pn.sum();
  for (int t = 0; t < 200; ++t) {
    DualState<double> a(g, Domain::kSpaceTime, random_vec(12, rng));
    DualState<double> b(g, Domain::kSpaceTime, random_vec(12, rng));
    const double lhs = std::abs(objective_fd(g, a, pm, pn) - objective_fd(g, b, pm, pn));
    CHECK(lhs <= 2 * (a.values - b.values).cwiseAbs().maxCoeff() + 1e-14);
  }
  CHECK_THROWS_AS(objective_fd(g, phi, VectorX<double>(uniform_measure(3)), nu), GridError);
}

TEST_CASE("primal objective") {
  const auto g = GridSpec<double>::with_viscosity(1, 1.0, 2, 4, 0.5, 0.0);
  const auto q = CostModel<double>::quadratic();
  PrimalVars<double> lam(g);
  lam.rho().setConstant(0.125);
  CHECK(primal_objective(g, q, lam, 0.5).value == 0);

  lam.values.setZero();
  lam.rho(0)[2] = 2;
  lam.m(0, 0)[2] = 3;
  CHECK(primal_objective(g, q, lam, 0.5).value == doctest::Approx(2.25));

  lam.values.setZero();
  lam.eta(0)[1] = 0.3;
  CHECK(primal_objective(g, q, lam, 0.5).value == doctest::Approx(0.15));

  lam.values.setZero();
  lam.m(1, 0)[0] = 0.2;
  const auto inf = primal_objective(g, q, lam, 0.5);
  CHECK(inf.infinite);
  CHECK(inf.zero_mass_momentum == doctest::Approx(0.2));

  lam.values.setZero();
  lam.rho(0)[0] = -1e-3;
  CHECK_THROWS_AS(primal_objective(g, q, lam, 0.5), std::domain_error);
}

TEST_CASE("dual feasibility") {
  auto p = SchemeParams<double>::make(1, 1.0, 16, CostModel<double>::quadratic());
  const Index s = p.grid.spatial_size();
  DualState<double> zero(p.grid, Domain::kSpaceTime);
  const auto z = check_dual_feasibility(zero, p);
  CHECK(z.hj_violation == 0);
  CHECK(z.clamp_violation == -p.grid.clamp);
  CHECK(z.feasible(0));

  // strictly feasible point: slope in time of -(H(0) + 0.01)
  DualState<double> strict(p.grid, Domain::kSpaceTime);
  for (Index i = 0; i <= p.grid.n_t; ++i) strict.slice(i).setConstant(-double(i) * p.grid.dt * 0.01);
  const auto r = check_dual_feasibility(strict, p);
  CHECK(r.hj_violation == doctest::Approx(-0.01));
  CHECK(r.clamp_violation <= -0.01);

  // a steep initial slice violates the clamp
  DualState<double> steep(p.grid, Domain::kSpaceTime);
  for (Index j = 0; j < s; ++j) steep.slice(0)[j] = (j == 0) ? p.grid.dx : 0.0;
  CHECK(check_dual_feasibility(steep, p).clamp_violation == doctest::Approx(0.5));
}

TEST_CASE("velocity recovery") {
  const auto g = GridSpec<double>::with_viscosity(1, 1.0, 2, 4, 0.5, 0.0);
  PrimalVars<double> lam(g);
  lam.rho().setConstant(0.125);
  CHECK(recover_velocity(lam).isZero(0));
  lam.rho(1)[3] = 0.5;
  lam.m(1, 0)[3] = 0.2;
  const VectorX<double> v = recover_velocity(lam);
  CHECK(v[1 * 4 + 3] == doctest::Approx(0.4));
  lam.rho(0)[0] = 0;
  lam.m(0, 0)[0] = 1;
  CHECK(recover_velocity(lam)[0] == 0);
  CHECK(default_support_tol(lam) == doctest::Approx(0.5e-10));
}

TEST_CASE("weak duality on perturbed feasible pairs") {
  // Lambda from a smooth mass path moving at constant speed: rho_i uniform,
  // m_i = rho_i v. It satisfies A^T Lambda = F_D only for mu = nu uniform,
  // so compare against F_D of feasible potentials for that problem.
  const auto p = SchemeParams<double>::make(1, 1.0, 8, CostModel<double>::quadratic());
  const auto& g = p.grid;
  const Index s = g.spatial_size();
  const VectorX<double> mu = uniform_measure(s);
  PrimalVars<double> lam(g);
  lam.rho().setConstant(g.dt / double(s));
  for (Index i = 0; i < g.n_t; ++i) lam.m(i, 0).setConstant(0.1 * g.dt / double(s));
  const ConstraintOperator<double> a(g);
  // constant velocity of a uniform density is divergence free, so A^T Lambda = F_D
  CHECK((a.apply_transpose(lam.values) - objective_vector(g, mu, mu)).cwiseAbs().maxCoeff() <= 1e-12);
  const double primal = primal_objective(g, p.cost, lam, p.clamp()).value;
  CHECK(primal == doctest::Approx(0.005));

  std::mt19937_64 rng(41);
  for (int t = 0; t < 50; ++t) {
    // a small Lipschitz psi with a steep negative drift in time is feasible
    const VectorX<double> psi = random_lipschitz_field(g, 0.2, rng);
    DualState<double> phi(g, Domain::kSpaceTime);
    for (Index i = 0; i <= g.n_t; ++i) phi.slice(i) = psi.array() - double(i) * g.dt * 0.5;
    if (!check_dual_feasibility(phi, p).feasible(0)) continue;
    CHECK(primal >= objective_fd(g, phi, mu, mu) - 1e-12);
    CHECK(duality_gap(g, p.cost, phi, lam, mu, mu, p.clamp()) >= -1e-12);
  }
}
