// ADMM for the saddle point  max_{Phi, Sigma} min_Lambda
//   F_D Phi - I_K(Sigma) - Lambda . (A Phi - Sigma) - r/2 |A Phi - Sigma|^2.
#ifndef DUALOT_ADMM_HPP
#define DUALOT_ADMM_HPP

#include "dualot/transport.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace dualot {

enum class LinearSolver {
  kCholesky,  ///< sparse LDL^T of A^T A, factored once per solve
  kCg,        ///< conjugate gradient on A^T A, warm-started from the previous Phi
};

struct AdmmConfig {
  double r = 1.0;
  double stop_tol = 1e-5;
  long max_iters = 200000;
  double cg_tol = 1e-10;
  long cg_max_iters = 10000;
  LinearSolver solver = LinearSolver::kCholesky;
  /// Residual balancing: every `balance_every` iterations r is doubled or
  /// halved when one residual exceeds the other by `balance_ratio`.
  bool balance = true;
  int balance_every = 10;
  double balance_ratio = 10;

  void validate() const {
    if (!(r > 0)) throw std::invalid_argument("ADMM penalty r must be positive");
    if (!(stop_tol > 0)) throw std::invalid_argument("stop_tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(cg_tol > 0) || cg_max_iters < 1) throw std::invalid_argument("invalid CG settings");
    if (balance && (balance_every < 1 || !(balance_ratio > 1))) {
      throw std::invalid_argument("invalid residual balancing settings");
    }
  }
};

/// A transport instance on a grid: scheme parameters plus the projected marginals.
template <typename Scalar = double>
struct TransportProblem {
  SchemeParams<Scalar> params;
  VectorX<Scalar> pi_mu;
  VectorX<Scalar> pi_nu;

  const GridSpec<Scalar>& grid() const { return params.grid; }
  VectorX<Scalar> f_d() const { return objective_vector(params.grid, pi_mu, pi_nu); }
};

template <typename Scalar = double>
struct AdmmState {
  DualState<Scalar> phi;
  SigmaVars<Scalar> sigma;
  PrimalVars<Scalar> lam;
  Scalar r = 1;
  long iter = 0;
  bool converged = false;
  long cg_failures = 0;
  std::vector<Scalar> primal_res;
  std::vector<Scalar> dual_res;
};

/// Solver for r A^T A Phi = rhs with zero mean. The right-hand side must be
/// orthogonal to constants, the kernel of A^T A.
template <typename Scalar = double>
class PhiSolver {
 public:
  using Sparse = Eigen::SparseMatrix<Scalar>;

  PhiSolver(const ConstraintOperator<Scalar>& a, const AdmmConfig& cfg) : kind_(cfg.solver) {
    const Sparse at = a.to_sparse();
    normal_ = Sparse(at.transpose() * at);
    if (kind_ == LinearSolver::kCholesky) {
      // Adding e_0 e_0^T removes the constant kernel without changing the
      // solution for consistent data: summing the system forces Phi_0 = 0.
      Sparse pinned = normal_;
      pinned.coeffRef(0, 0) += 1;
      ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Sparse>>(pinned);
      if (ldlt_->info() != Eigen::Success) throw std::runtime_error("factorization of A^T A failed");
    } else {
      cg_ = std::make_unique<Eigen::ConjugateGradient<Sparse, Eigen::Lower | Eigen::Upper>>();
      cg_->setTolerance(Scalar(cfg.cg_tol));
      cg_->setMaxIterations(Eigen::Index(cfg.cg_max_iters));
      cg_->compute(normal_);
    }
  }

  /// Returns false when CG stopped before reaching its tolerance; `phi` then
  /// holds the last iterate.
  bool solve(const VectorX<Scalar>& rhs, Scalar r, VectorX<Scalar>& phi) const {
    bool ok = true;
    if (ldlt_) {
      phi = ldlt_->solve(rhs / r);
    } else {
      phi = cg_->solveWithGuess(rhs / r, phi);
      ok = cg_->info() == Eigen::Success;
    }
    phi.array() -= phi.mean();
    return ok;
  }

  const Sparse& normal_matrix() const { return normal_; }

 private:
  LinearSolver kind_;
  Sparse normal_;
  std::unique_ptr<Eigen::SimplicialLDLT<Sparse>> ldlt_;
  std::unique_ptr<Eigen::ConjugateGradient<Sparse, Eigen::Lower | Eigen::Upper>> cg_;
};

/// Phi <- argmax of the augmented Lagrangian in Phi, mean-anchored.
template <typename Scalar>
bool phi_update(AdmmState<Scalar>& state, const ConstraintOperator<Scalar>& a, const PhiSolver<Scalar>& solver,
                const VectorX<Scalar>& f_d) {
  const VectorX<Scalar> rhs = f_d - a.apply_transpose(state.lam.values) + state.r * a.apply_transpose(state.sigma.values);
  return solver.solve(rhs, state.r, state.phi.values);
}

/// Pointwise projection of a range element onto K x [-R, R]^{d x Omega_D}.
template <typename Scalar>
SigmaVars<Scalar> project_constraints(const GridSpec<Scalar>& g, const CostModel<Scalar>& cost,
                                      const BlockVector<Scalar>& v, Scalar clamp) {
  SigmaVars<Scalar> out(g, v.values);
  for (Index i = 0; i < v.n_t; ++i) {
    for (Index j = 0; j < v.spatial; ++j) {
      const auto p = cost.project_onto_k(v.t(i)[j], v.x_at(i, j));
      out.t(i)[j] = p.s;
      out.set_x_at(i, j, p.w);
    }
  }
  out.r_block() = v.r_block().cwiseMax(-clamp).cwiseMin(clamp);
  return out;
}

/// Sigma <- P(A Phi + Lambda / r).
template <typename Scalar>
SigmaVars<Scalar> sigma_update(const AdmmState<Scalar>& state, const SchemeParams<Scalar>& params,
                               const SigmaVars<Scalar>& a_phi) {
  BlockVector<Scalar> v(params.grid, VectorX<Scalar>(a_phi.values + state.lam.values / state.r));
  return project_constraints(params.grid, params.cost, v, params.clamp());
}

/// Lambda <- Lambda + r (A Phi - Sigma).
///
/// This is the descent step of the minimizing player for the Lagrangian
/// above. It keeps Lambda / r in the normal cone of the constraint set at
/// Sigma, so Lambda_rho >= 0 and Lambda_m = Lambda_rho grad H(Sigma_x) hold
/// at every iterate.
template <typename Scalar>
void lambda_update(AdmmState<Scalar>& state, const SigmaVars<Scalar>& a_phi) {
  state.lam.values += state.r * (a_phi.values - state.sigma.values);
}

/// Initial state: Phi = 0, Sigma = P(A Phi), Lambda = 0.
template <typename Scalar>
AdmmState<Scalar> initial_state(const TransportProblem<Scalar>& problem, const AdmmConfig& cfg) {
  const auto& g = problem.grid();
  AdmmState<Scalar> s;
  s.phi = DualState<Scalar>(g, Domain::kSpaceTime);
  s.lam = PrimalVars<Scalar>(g);
  s.r = Scalar(cfg.r);
  const auto a_phi = ConstraintOperator<Scalar>(g).apply(s.phi.values);
  s.sigma = project_constraints(g, problem.params.cost, a_phi, problem.params.clamp());
  return s;
}

/// Runs ADMM until both residuals are at most stop_tol or max_iters is hit.
/// If `log` is given, one CSV row per iteration is written:
///   iteration,primal_res,dual_res,f_d,r
template <typename Scalar>
AdmmState<Scalar> solve(const TransportProblem<Scalar>& problem, const AdmmConfig& cfg,
                        std::ostream* log = nullptr) {
  cfg.validate();
  const auto& g = problem.grid();
  const ConstraintOperator<Scalar> a(g);
  const PhiSolver<Scalar> solver(a, cfg);
  const VectorX<Scalar> f_d = problem.f_d();
  AdmmState<Scalar> state = initial_state(problem, cfg);
  if (log) {
    *log << "iteration,primal_res,dual_res,f_d,r\n";
    log->precision(17);
  }
  const Scalar tol = Scalar(cfg.stop_tol);
  for (long k = 1; k <= cfg.max_iters; ++k) {
    if (!phi_update(state, a, solver, f_d)) ++state.cg_failures;
    const SigmaVars<Scalar> a_phi = a.apply(state.phi.values);
    const VectorX<Scalar> sigma_prev = state.sigma.values;
    state.sigma = sigma_update(state, problem.params, a_phi);
    lambda_update(state, a_phi);

    const Scalar primal = (a_phi.values - state.sigma.values).norm();
    const Scalar dual = state.r * a.apply_transpose(VectorX<Scalar>(state.sigma.values - sigma_prev)).norm();
    state.primal_res.push_back(primal);
    state.dual_res.push_back(dual);
    state.iter = k;
    if (log) {
      *log << k << ',' << double(primal) << ',' << double(dual) << ','
           << double(f_d.dot(state.phi.values)) << ',' << double(state.r) << '\n';
    }
    if (primal <= tol && dual <= tol) {
      state.converged = true;
      break;
    }
    // Lambda is stored unscaled, so changing r needs no rescaling of it.
    if (cfg.balance && k % cfg.balance_every == 0) {
      if (primal > Scalar(cfg.balance_ratio) * dual) {
        state.r *= 2;
      } else if (dual > Scalar(cfg.balance_ratio) * primal) {
        state.r /= 2;
      }
    }
  }
  return state;
}

}  // namespace dualot

#endif  // DUALOT_ADMM_HPP
