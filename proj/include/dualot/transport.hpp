// Discrete dual / primal transport problems: the constraint operator
// A = (A_t, A_x, A_R), the linear functional F_D, objectives and feasibility.
#ifndef DUALOT_TRANSPORT_HPP
#define DUALOT_TRANSPORT_HPP

#include "dualot/cost.hpp"
#include "dualot/grid.hpp"
#include "dualot/hj.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dualot {

/// Flat storage for elements of the range of A, laid out as
///   [ t block: N_T slices | x block: N_T slices x d axes | r block: d axes ].
/// Every block is time-major with contiguous spatial slices.
template <typename Scalar = double>
struct BlockVector {
  Index n_t = 0;
  int d = 1;
  Index spatial = 0;
  VectorX<Scalar> values;

  BlockVector() = default;
  explicit BlockVector(const GridSpec<Scalar>& g)
      : n_t(g.n_t), d(g.d), spatial(g.spatial_size()), values(VectorX<Scalar>::Zero(size_for(g))) {}
  BlockVector(const GridSpec<Scalar>& g, VectorX<Scalar> v)
      : n_t(g.n_t), d(g.d), spatial(g.spatial_size()), values(std::move(v)) {
    if (values.size() != size_for(g)) throw GridError("block vector size does not match grid");
  }

  static Index size_for(const GridSpec<Scalar>& g) {
    return g.spatial_size() * (Index(g.n_t) * (1 + g.d) + g.d);
  }

  Index x_offset() const { return n_t * spatial; }
  Index r_offset() const { return n_t * spatial * (1 + d); }

  auto t_block() { return values.segment(0, n_t * spatial); }
  auto t_block() const { return values.segment(0, n_t * spatial); }
  auto x_block() { return values.segment(x_offset(), n_t * d * spatial); }
  auto x_block() const { return values.segment(x_offset(), n_t * d * spatial); }
  auto r_block() { return values.segment(r_offset(), d * spatial); }
  auto r_block() const { return values.segment(r_offset(), d * spatial); }

  auto t(Index i) { return values.segment(i * spatial, spatial); }
  auto t(Index i) const { return values.segment(i * spatial, spatial); }
  auto x(Index i, int k) { return values.segment(x_offset() + (i * d + k) * spatial, spatial); }
  auto x(Index i, int k) const { return values.segment(x_offset() + (i * d + k) * spatial, spatial); }
  auto r(int k) { return values.segment(r_offset() + k * spatial, spatial); }
  auto r(int k) const { return values.segment(r_offset() + k * spatial, spatial); }

  /// x-components of cell (i, j) gathered into a point.
  Point<Scalar> x_at(Index i, Index j) const {
    Point<Scalar> p(d);
    for (int k = 0; k < d; ++k) p[k] = values[x_offset() + (i * d + k) * spatial + j];
    return p;
  }
  void set_x_at(Index i, Index j, const Point<Scalar>& p) {
    for (int k = 0; k < d; ++k) values[x_offset() + (i * d + k) * spatial + j] = p[k];
  }
};

/// Split variables Sigma = (Sigma_t, Sigma_x, Sigma_R).
template <typename Scalar = double>
struct SigmaVars : BlockVector<Scalar> {
  using BlockVector<Scalar>::BlockVector;
};

/// Primal variables Lambda = (Lambda_rho, Lambda_m, Lambda_eta), living in the
/// same space as Sigma. Lambda_rho over Q'_D sums to one in total, so each
/// time slice carries mass dt.
template <typename Scalar = double>
struct PrimalVars : BlockVector<Scalar> {
  using BlockVector<Scalar>::BlockVector;

  auto rho() { return this->t_block(); }
  auto rho() const { return this->t_block(); }
  auto rho(Index i) { return this->t(i); }
  auto rho(Index i) const { return this->t(i); }
  auto m(Index i, int k) { return this->x(i, k); }
  auto m(Index i, int k) const { return this->x(i, k); }
  auto eta(int k) { return this->r(k); }
  auto eta(int k) const { return this->r(k); }
};

/// The dual unknown: a potential on Q_D.
template <typename Scalar = double>
using DualState = ScalarField<Scalar>;

/// A Phi = ( (Phi^{i+1} - Phi^i)/dt - eps lap Phi^i,  grad_D Phi^i,  Delta_+ Phi^0 / dx ).
template <typename Scalar = double>
class ConstraintOperator {
 public:
  explicit ConstraintOperator(const GridSpec<Scalar>& grid) : g_(grid) {}

  const GridSpec<Scalar>& grid() const { return g_; }
  Index rows() const { return BlockVector<Scalar>::size_for(g_); }
  Index cols() const { return g_.size(Domain::kSpaceTime); }

  template <typename Derived>
  SigmaVars<Scalar> apply(const Eigen::MatrixBase<Derived>& phi) const {
    check_cols(phi.size());
    const Index s = g_.spatial_size();
    SigmaVars<Scalar> out(g_);
    for (Index i = 0; i < g_.n_t; ++i) {
      const auto cur = phi.segment(i * s, s);
      const auto next = phi.segment((i + 1) * s, s);
      out.t(i) = (next - cur) / g_.dt - g_.eps * discrete_laplacian(g_, cur);
      for (int k = 0; k < g_.d; ++k) out.x(i, k) = centered_diff(g_, cur, k);
    }
    for (int k = 0; k < g_.d; ++k) out.r(k) = forward_diff(g_, phi.segment(0, s), k) / g_.dx;
    return out;
  }

  template <typename Derived>
  VectorX<Scalar> apply_transpose(const Eigen::MatrixBase<Derived>& lam) const {
    if (lam.size() != rows()) throw GridError("A^T: argument size does not match grid");
    const BlockVector<Scalar> v(g_, lam);
    const Index s = g_.spatial_size();
    VectorX<Scalar> out = VectorX<Scalar>::Zero(cols());
    for (Index i = 0; i < g_.n_t; ++i) {
      auto cur = out.segment(i * s, s);
      cur -= v.t(i) / g_.dt + g_.eps * discrete_laplacian(g_, v.t(i));
      out.segment((i + 1) * s, s) += v.t(i) / g_.dt;
      for (int k = 0; k < g_.d; ++k) cur -= centered_diff(g_, v.x(i, k), k);
    }
    for (int k = 0; k < g_.d; ++k) out.segment(0, s) -= backward_diff(g_, v.r(k), k) / g_.dx;
    return out;
  }

  /// Assembled sparse matrix with the same entries as apply().
  Eigen::SparseMatrix<Scalar> to_sparse() const {
    using Triplet = Eigen::Triplet<Scalar>;
    const Index s = g_.spatial_size();
    std::vector<Triplet> entries;
    entries.reserve(std::size_t(rows()) * (3 + 2 * g_.d));
    const BlockVector<Scalar> layout(g_);
    for (Index i = 0; i < g_.n_t; ++i) {
      for (Index j = 0; j < s; ++j) {
        const Index row = i * s + j;
        entries.emplace_back(row, (i + 1) * s + j, 1 / g_.dt);
        entries.emplace_back(row, i * s + j, -1 / g_.dt + 2 * g_.d * g_.eps / (g_.dx * g_.dx));
        for (int k = 0; k < g_.d; ++k) {
          for (int off : {-1, 1}) {
            entries.emplace_back(row, i * s + detail::neighbour(g_, j, k, off), -g_.eps / (g_.dx * g_.dx));
          }
          const Index xrow = layout.x_offset() + (i * g_.d + k) * s + j;
          entries.emplace_back(xrow, i * s + detail::neighbour(g_, j, k, 1), 1 / (2 * g_.dx));
          entries.emplace_back(xrow, i * s + detail::neighbour(g_, j, k, -1), -1 / (2 * g_.dx));
        }
      }
    }
    for (int k = 0; k < g_.d; ++k) {
      for (Index j = 0; j < s; ++j) {
        const Index row = layout.r_offset() + k * s + j;
        entries.emplace_back(row, detail::neighbour(g_, j, k, 1), 1 / g_.dx);
        entries.emplace_back(row, j, -1 / g_.dx);
      }
    }
    Eigen::SparseMatrix<Scalar> a(rows(), cols());
    a.setFromTriplets(entries.begin(), entries.end());
    return a;
  }

 private:
  void check_cols(Index n) const {
    if (n != cols()) throw GridError("A: argument size does not match Q_D");
  }

  GridSpec<Scalar> g_;
};

/// The vector representing F_D: Pi nu on the last slice, -Pi mu on the first.
template <typename Scalar>
VectorX<Scalar> objective_vector(const GridSpec<Scalar>& g, const VectorX<Scalar>& pi_mu,
                                 const VectorX<Scalar>& pi_nu) {
  const Index s = g.spatial_size();
  if (pi_mu.size() != s || pi_nu.size() != s) throw GridError("measure does not match the grid");
  VectorX<Scalar> f = VectorX<Scalar>::Zero(g.size(Domain::kSpaceTime));
  f.segment(0, s) = -pi_mu;
  f.segment(Index(g.n_t) * s, s) += pi_nu;
  return f;
}

/// F_D Phi = sum_j Phi^{N_T}_j (Pi nu)_j - sum_j Phi^0_j (Pi mu)_j.
template <typename Scalar>
Scalar objective_fd(const GridSpec<Scalar>& g, const DualState<Scalar>& phi,
                    const VectorX<Scalar>& pi_mu, const VectorX<Scalar>& pi_nu) {
  if (phi.domain != Domain::kSpaceTime) throw GridError("F_D expects a Q_D potential");
  if (pi_mu.size() != phi.spatial || pi_nu.size() != phi.spatial) {
    throw GridError("measure does not match the grid");
  }
  return inner<Scalar>(phi.slice(g.n_t), pi_nu) - inner<Scalar>(phi.slice(0), pi_mu);
}

template <typename Scalar>
struct PrimalObjective {
  Scalar value = 0;
  /// Some cell has no mass but carries momentum beyond tolerance.
  bool infinite = false;
  /// Largest |Lambda_m| over cells whose mass is at most the tolerance.
  Scalar zero_mass_momentum = 0;
};

/// sum over Q'_D of Lambda_rho L(Lambda_m / Lambda_rho) + R |Lambda_eta|_1.
/// Masses in [-tol, 0] count as zero; anything below -tol throws.
template <typename Scalar>
PrimalObjective<Scalar> primal_objective(const GridSpec<Scalar>& g, const CostModel<Scalar>& cost,
                                         const PrimalVars<Scalar>& lam, Scalar clamp,
                                         Scalar tol = Scalar(1e-12)) {
  PrimalObjective<Scalar> out;
  const Index s = g.spatial_size();
  for (Index i = 0; i < g.n_t; ++i) {
    for (Index j = 0; j < s; ++j) {
      const Scalar rho = lam.rho(i)[j];
      const Point<Scalar> m = lam.x_at(i, j);
      if (rho < -tol) throw std::domain_error("primal objective: negative mass");
      if (rho <= tol) {
        const Scalar mn = m.template lpNorm<Eigen::Infinity>();
        out.zero_mass_momentum = std::max(out.zero_mass_momentum, mn);
        if (rho <= 0) {
          if (mn > tol) out.infinite = true;
          continue;
        }
      }
      out.value += cost.perspective(rho, m).value;
    }
  }
  out.value += clamp * lam.r_block().template lpNorm<1>();
  return out;
}

/// primal objective minus F_D.
template <typename Scalar>
Scalar duality_gap(const GridSpec<Scalar>& g, const CostModel<Scalar>& cost, const DualState<Scalar>& phi,
                   const PrimalVars<Scalar>& lam, const VectorX<Scalar>& pi_mu,
                   const VectorX<Scalar>& pi_nu, Scalar clamp) {
  const auto p = primal_objective(g, cost, lam, clamp);
  if (p.infinite) return std::numeric_limits<Scalar>::infinity();
  return p.value - objective_fd(g, phi, pi_mu, pi_nu);
}

template <typename Scalar>
struct FeasibilityReport {
  Scalar hj_violation = 0;     ///< max over Q'_D of A_t Phi + H(A_x Phi); <= 0 when feasible
  Scalar clamp_violation = 0;  ///< max over Omega_D of |A_R Phi| - R; <= 0 when feasible

  bool feasible(Scalar tol) const { return hj_violation <= tol && clamp_violation <= tol; }
};

template <typename Scalar>
FeasibilityReport<Scalar> check_dual_feasibility(const DualState<Scalar>& phi,
                                                 const SchemeParams<Scalar>& params) {
  const auto& g = params.grid;
  const SigmaVars<Scalar> a = ConstraintOperator<Scalar>(g).apply(phi.values);
  FeasibilityReport<Scalar> out;
  out.hj_violation = -std::numeric_limits<Scalar>::infinity();
  const Index s = g.spatial_size();
  for (Index i = 0; i < g.n_t; ++i) {
    for (Index j = 0; j < s; ++j) {
      out.hj_violation = std::max(out.hj_violation, a.t(i)[j] + params.cost.hamiltonian(a.x_at(i, j)));
    }
  }
  out.clamp_violation = a.r_block().cwiseAbs().maxCoeff() - g.clamp;
  return out;
}

/// Support tolerance used when none is given: 1e-10 max(Lambda_rho).
template <typename Scalar>
Scalar default_support_tol(const PrimalVars<Scalar>& lam) {
  return Scalar(1e-10) * std::max(lam.rho().maxCoeff(), Scalar(0));
}

/// V = Lambda_m / Lambda_rho where Lambda_rho > support_tol, zero elsewhere.
/// Laid out like the x block: component k of slice i is a contiguous segment.
template <typename Scalar>
VectorX<Scalar> recover_velocity(const PrimalVars<Scalar>& lam, Scalar support_tol) {
  VectorX<Scalar> v = VectorX<Scalar>::Zero(lam.n_t * lam.d * lam.spatial);
  for (Index i = 0; i < lam.n_t; ++i) {
    for (int k = 0; k < lam.d; ++k) {
      for (Index j = 0; j < lam.spatial; ++j) {
        const Scalar rho = lam.rho(i)[j];
        if (rho > support_tol) v[(i * lam.d + k) * lam.spatial + j] = lam.m(i, k)[j] / rho;
      }
    }
  }
  return v;
}

template <typename Scalar>
VectorX<Scalar> recover_velocity(const PrimalVars<Scalar>& lam) {
  return recover_velocity(lam, default_support_tol(lam));
}

}  // namespace dualot

#endif  // DUALOT_TRANSPORT_HPP
