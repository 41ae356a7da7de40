// Vanishing-viscosity scheme for d_t phi + H(grad phi) = 0, its property
// checks, and the Hopf-Lax reference solution.
#ifndef DUALOT_HJ_HPP
#define DUALOT_HJ_HPP

#include "dualot/cost.hpp"
#include "dualot/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace dualot {

/// Grid, cost and the radius R + delta on which the scheme is monotone.
template <typename Scalar = double>
struct SchemeParams {
  GridSpec<Scalar> grid;
  CostModel<Scalar> cost = CostModel<Scalar>::quadratic();
  Scalar delta = 0;

  Scalar clamp() const { return grid.clamp; }
  Scalar monotone_radius() const { return grid.clamp + delta; }

  /// Monotonicity margin: Lip(H, B_{R+delta}) / 2 <= eps / dx <= dx / (2 d dt).
  bool admissible() const {
    const Scalar ratio = grid.eps / grid.dx;
    return cost.lip_hamiltonian(monotone_radius()) / 2 <= ratio * (1 + Scalar(1e-12)) &&
           ratio <= grid.dx / (2 * grid.d * grid.dt) * (1 + Scalar(1e-12));
  }

  /// Standard construction: N_T = n, N_X = zeta D n, R = Lip(L, B_diam)
  /// unless `clamp` is given, delta = 0.05 R, minimal monotone viscosity.
  static SchemeParams make(int d, Scalar period, int n, const CostModel<Scalar>& cost,
                           Scalar zeta = 1, Scalar clamp = 0) {
    const Scalar nx_real = zeta * period * n;
    const int n_x = int(std::lround(double(nx_real)));
    if (n_x < 2 || std::abs(double(nx_real - n_x)) > 1e-9) {
      throw GridError("zeta * D * N_T must be an integer >= 2");
    }
    const Scalar diam = period * std::sqrt(Scalar(d)) / 2;
    const Scalar r = clamp > 0 ? clamp : cost.lip_lagrangian(diam);
    SchemeParams p;
    p.cost = cost;
    p.delta = Scalar(0.05) * r;
    p.grid = GridSpec<Scalar>::make(d, period, n, n_x, r, cost.lip_hamiltonian(r + p.delta));
    return p;
  }
};

/// Centered gradient of one slice at node j.
template <typename Scalar, typename Derived>
Point<Scalar> gradient_at(const GridSpec<Scalar>& g, const Eigen::MatrixBase<Derived>& psi, Index j) {
  Point<Scalar> out(g.d);
  for (int k = 0; k < g.d; ++k) {
    const Scalar back = psi[j] - psi[detail::neighbour(g, j, k, -1)];
    const Scalar fwd = psi[detail::neighbour(g, j, k, 1)] - psi[j];
    out[k] = (back + fwd) / (2 * g.dx);
  }
  return out;
}

/// S(psi) = psi - dt { H(grad_D psi) - eps lap_D psi }
template <typename Scalar, typename Derived>
VectorX<Scalar> scheme_step(const SchemeParams<Scalar>& params, const Eigen::MatrixBase<Derived>& psi) {
  const auto& g = params.grid;
  const VectorX<Scalar> lap = discrete_laplacian(g, psi);
  VectorX<Scalar> out(psi.size());
  for (Index j = 0; j < psi.size(); ++j) {
    const Scalar ham = params.cost.hamiltonian(gradient_at(g, psi, j));
    out[j] = psi[j] - g.dt * (ham - g.eps * lap[j]);
  }
  return out;
}

template <typename Scalar>
ScalarField<Scalar> scheme_step(const SchemeParams<Scalar>& params, const ScalarField<Scalar>& psi) {
  if (psi.domain != Domain::kSpace) throw GridError("scheme_step expects an Omega_D field");
  return ScalarField<Scalar>(params.grid, Domain::kSpace, scheme_step(params, psi.values));
}

/// Phi^0 = phi0, Phi^{i+1} = S(Phi^i) for i < N_T.
template <typename Scalar>
ScalarField<Scalar> solve_ivp(const SchemeParams<Scalar>& params, const ScalarField<Scalar>& phi0) {
  if (phi0.domain != Domain::kSpace) throw GridError("solve_ivp expects Omega_D initial data");
  ScalarField<Scalar> phi(params.grid, Domain::kSpaceTime);
  phi.slice(0) = phi0.values;
  for (Index i = 0; i < params.grid.n_t; ++i) phi.slice(i + 1) = scheme_step(params, phi.slice(i));
  return phi;
}

/// Largest |Delta_+^k psi / dx| over nodes and axes.
template <typename Scalar, typename Derived>
Scalar max_slope(const GridSpec<Scalar>& g, const Eigen::MatrixBase<Derived>& psi) {
  Scalar m = 0;
  for (int k = 0; k < g.d; ++k) m = std::max(m, forward_diff(g, psi, k).cwiseAbs().maxCoeff() / g.dx);
  return m;
}

/// Random field in C_bound: a sum over axes of periodic random walks whose
/// increments are bounded by bound * dx.
template <typename Scalar, typename Rng>
VectorX<Scalar> random_lipschitz_field(const GridSpec<Scalar>& g, Scalar bound, Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  VectorX<Scalar> out = VectorX<Scalar>::Constant(g.spatial_size(), Scalar(unit(rng)));
  for (int k = 0; k < g.d; ++k) {
    VectorX<Scalar> inc(g.n_x);
    for (int j = 0; j < g.n_x; ++j) inc[j] = Scalar(unit(rng));
    inc.array() -= inc.mean();
    const Scalar m = inc.cwiseAbs().maxCoeff();
    if (m > 0) inc *= bound * g.dx / m * Scalar(unit(rng) * 0.5 + 0.5);
    VectorX<Scalar> walk(g.n_x);
    walk[0] = 0;
    for (int j = 1; j < g.n_x; ++j) walk[j] = walk[j - 1] + inc[j - 1];
    for (Index j = 0; j < out.size(); ++j) out[j] += walk[g.unflatten(j)[k]];
  }
  return out;
}

struct SchemeCheckReport {
  int trials = 0;
  int monotone_violations = 0;
  int expansion_violations = 0;
  double worst_monotone = 0;   ///< largest S(psi) - S(psi') with psi <= psi'
  double worst_expansion = 0;  ///< largest |S psi - S psi'|_inf - |psi - psi'|_inf
  std::string first_violation;

  bool passed() const { return monotone_violations == 0 && expansion_violations == 0; }
};

/// Property check on random pairs in C_{R+delta}: psi <= psi' must give
/// S(psi) <= S(psi') and the scheme must not expand the sup-distance.
/// Half the ordered pairs differ at a single node, which isolates the
/// off-diagonal derivatives of S.
template <typename Scalar>
SchemeCheckReport check_monotone(const SchemeParams<Scalar>& params, int trials, unsigned seed) {
  const auto& g = params.grid;
  const Scalar bound = params.monotone_radius();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Index> node(0, g.spatial_size() - 1);
  SchemeCheckReport report;
  report.trials = trials;
  auto tolerance = [](const VectorX<Scalar>& a) {
    return Scalar(1e-13) * (1 + a.cwiseAbs().maxCoeff());
  };
  for (int t = 0; t < trials; ++t) {
    const VectorX<Scalar> psi = random_lipschitz_field(g, Scalar(0.9) * bound, rng);
    VectorX<Scalar> bump = VectorX<Scalar>::Zero(psi.size());
    if (t % 2 == 0) {
      bump[node(rng)] = Scalar(0.05) * bound * g.dx * Scalar(unit(rng));
    } else {
      for (Index j = 0; j < bump.size(); ++j) bump[j] = Scalar(0.025) * bound * g.dx * Scalar(unit(rng));
    }
    const VectorX<Scalar> upper = psi + bump;
    const VectorX<Scalar> gap = scheme_step(params, psi) - scheme_step(params, upper);
    const Scalar worst = gap.maxCoeff();
    if (worst > tolerance(upper)) {
      if (report.monotone_violations++ == 0) {
        Index where;
        gap.maxCoeff(&where);
        std::ostringstream msg;
        msg << "trial " << t << ": S(psi) exceeds S(psi') by " << double(worst) << " at node " << where;
        report.first_violation = msg.str();
      }
    }
    report.worst_monotone = std::max(report.worst_monotone, double(worst));

    const VectorX<Scalar> other = random_lipschitz_field(g, bound, rng);
    const Scalar before = (psi - other).cwiseAbs().maxCoeff();
    const Scalar after = (scheme_step(params, psi) - scheme_step(params, other)).cwiseAbs().maxCoeff();
    const Scalar excess = after - before;
    if (excess > tolerance(other) + tolerance(psi)) {
      if (report.expansion_violations++ == 0 && report.first_violation.empty()) {
        std::ostringstream msg;
        msg << "trial " << t << ": sup-distance grew by " << double(excess);
        report.first_violation = msg.str();
      }
    }
    report.worst_expansion = std::max(report.worst_expansion, double(excess));
  }
  return report;
}

/// Largest |S(psi) - (psi - dt H(a))| over nodes whose whole stencil lies on
/// the affine ramp psi(j) = sum_k a_k j_k dx, for random slopes |a_k| <= R.
template <typename Scalar>
Scalar check_consistency(const SchemeParams<Scalar>& params, int trials, unsigned seed) {
  const auto& g = params.grid;
  std::mt19937_64 rng(seed);
  // dyadic slopes keep the ramp exactly representable
  std::uniform_int_distribution<int> level(-64, 64);
  Scalar worst = 0;
  for (int t = 0; t < trials; ++t) {
    Point<Scalar> a(g.d);
    for (int k = 0; k < g.d; ++k) a[k] = g.clamp * Scalar(level(rng)) / 64;
    VectorX<Scalar> psi(g.spatial_size());
    for (Index j = 0; j < psi.size(); ++j) {
      const auto idx = g.unflatten(j);
      Scalar v = 0;
      for (int k = 0; k < g.d; ++k) v += a[k] * Scalar(idx[k]) * g.dx;
      psi[j] = v;
    }
    const VectorX<Scalar> out = scheme_step(params, psi);
    const Scalar ham = params.cost.hamiltonian(a);
    for (Index j = 0; j < psi.size(); ++j) {
      const auto idx = g.unflatten(j);
      if (std::any_of(idx.begin(), idx.end(), [&](int v) { return v == 0 || v == g.n_x - 1; })) continue;
      worst = std::max(worst, std::abs(out[j] - (psi[j] - g.dt * ham)));
    }
  }
  return worst;
}

/// Largest slope excess max_i max_slope(Phi^i) - R over IVP solutions started
/// from random data in C_R; at most zero when C_R is preserved.
template <typename Scalar>
Scalar check_cr_preservation(const SchemeParams<Scalar>& params, int trials, unsigned seed) {
  const auto& g = params.grid;
  std::mt19937_64 rng(seed);
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (int t = 0; t < trials; ++t) {
    ScalarField<Scalar> phi0(g, Domain::kSpace, random_lipschitz_field(g, g.clamp, rng));
    const ScalarField<Scalar> phi = solve_ivp(params, phi0);
    for (Index i = 0; i <= g.n_t; ++i) worst = std::max(worst, max_slope(g, phi.slice(i)) - g.clamp);
  }
  return worst;
}

/// Wrap every coordinate of x to [-D/2, D/2).
template <typename Scalar>
Point<Scalar> wrap_point(Point<Scalar> x, Scalar period) {
  for (Index k = 0; k < x.size(); ++k) {
    Scalar r = std::fmod(x[k] + period / 2, period);
    if (r < 0) r += period;
    x[k] = r - period / 2;
    if (x[k] >= period / 2) x[k] -= period;
  }
  return x;
}

/// phi(t, x) = inf_y phi0(y) + t L((x - y) / t) on the torus.
///
/// The displacement z = x - y is searched exhaustively over a lattice `search`
/// times finer than dx inside |z_k| <= Lip(H, B_{sqrt(d) R}) t + dx, then
/// refined by golden-section search along each axis. The returned value is
/// attained by some y, hence an upper bound of the infimum.
template <typename Scalar>
Scalar hopf_lax(const std::function<Scalar(const Point<Scalar>&)>& phi0, Scalar t,
                const Point<Scalar>& x, const CostModel<Scalar>& cost, const GridSpec<Scalar>& g,
                int search = 8) {
  if (t <= 0) return phi0(wrap_point(x, g.period));
  const int d = int(x.size());
  const Scalar step = g.dx / search;
  const Scalar radius = std::min(cost.lip_hamiltonian(std::sqrt(Scalar(d)) * g.clamp) * t + g.dx, g.period / 2);
  const int half = int(std::ceil(double(radius / step)));
  auto value = [&](const Point<Scalar>& z) {
    return phi0(wrap_point(Point<Scalar>(x - z), g.period)) + t * cost.lagrangian(z / t);
  };

  Point<Scalar> best_z = Point<Scalar>::Zero(d);
  Scalar best = value(best_z);
  std::vector<int> offset(d, -half);
  for (;;) {
    Point<Scalar> z(d);
    for (int k = 0; k < d; ++k) z[k] = offset[k] * step;
    const Scalar v = value(z);
    if (v < best) {
      best = v;
      best_z = z;
    }
    int k = 0;
    while (k < d && ++offset[k] > half) offset[k++] = -half;
    if (k == d) break;
  }

  const Scalar golden = (std::sqrt(Scalar(5)) - 1) / 2;
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (int k = 0; k < d; ++k) {
      Scalar lo = best_z[k] - step;
      Scalar hi = best_z[k] + step;
      auto along = [&](Scalar zk) {
        Point<Scalar> z = best_z;
        z[k] = zk;
        return value(z);
      };
      Scalar a = hi - golden * (hi - lo);
      Scalar b = lo + golden * (hi - lo);
      Scalar fa = along(a);
      Scalar fb = along(b);
      while (hi - lo > Scalar(1e-10)) {
        if (fa < fb) {
          hi = b;
          b = a;
          fb = fa;
          a = hi - golden * (hi - lo);
          fa = along(a);
        } else {
          lo = a;
          a = b;
          fa = fb;
          b = lo + golden * (hi - lo);
          fb = along(b);
        }
      }
      const Scalar zk = (lo + hi) / 2;
      const Scalar v = along(zk);
      if (v < best) {
        best = v;
        best_z[k] = zk;
      }
    }
  }
  return best;
}

/// Sup over Q_D of |Phi - phi| where Phi solves the discrete IVP from the
/// samples of phi0 and phi is the Hopf-Lax solution.
template <typename Scalar>
Scalar ivp_sup_error(const SchemeParams<Scalar>& params, const std::function<Scalar(const Point<Scalar>&)>& phi0,
                     int search = 8) {
  const auto& g = params.grid;
  ScalarField<Scalar> init(g, Domain::kSpace);
  Point<Scalar> x(g.d);
  for (Index j = 0; j < g.spatial_size(); ++j) {
    for (int k = 0; k < g.d; ++k) x[k] = g.coordinate(j, k);
    init.values[j] = phi0(x);
  }
  const ScalarField<Scalar> phi = solve_ivp(params, init);
  Scalar worst = 0;
  for (Index i = 0; i <= g.n_t; ++i) {
    for (Index j = 0; j < g.spatial_size(); ++j) {
      for (int k = 0; k < g.d; ++k) x[k] = g.coordinate(j, k);
      const Scalar exact = hopf_lax(phi0, g.time(i), x, params.cost, g, search);
      worst = std::max(worst, std::abs(phi.slice(i)[j] - exact));
    }
  }
  return worst;
}

}  // namespace dualot

#endif  // DUALOT_HJ_HPP
