// Error metrics against closed-form optimizers, log-log rate fits and
// resolution sweeps.
#ifndef DUALOT_BENCH_HPP
#define DUALOT_BENCH_HPP

#include "dualot/admm.hpp"
#include "dualot/measures.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dualot {

/// Published convergence orders for one benchmark (alpha_K, alpha_v, alpha_rho).
struct ReferenceRates {
  double alpha_K = 0;
  double alpha_v = 0;
  double alpha_rho = 0;
};

/// Orders reported for the viscosity discretization solved here.
ReferenceRates reference_rates(int case_id);
/// Orders reported for the staggered-grid comparator; kept for display only.
ReferenceRates comparator_rates(int case_id);

/// Scalar summary of a solved instance, independent of any analytic solution.
struct SolveSummary {
  double k_d = 0;            ///< F_D of the computed potential
  double primal = 0;         ///< primal objective of the computed Lambda
  bool primal_infinite = false;
  double gap = 0;            ///< primal - F_D
  double hj_violation = 0;
  double clamp_violation = 0;
  double min_rho = 0;
  double mass_drift = 0;     ///< max_i |sum_j Lambda_rho^i / dt - 1|
  double zero_mass_momentum = 0;
  double max_velocity = 0;   ///< max |V| over the support
  double support_tol = 0;
  long iters = 0;
  bool converged = false;
  double primal_res = 0;
  double dual_res = 0;
  double final_r = 0;
};

SolveSummary summarize(const TransportProblem<double>& problem, const AdmmState<double>& state);

/// One resolution of a sweep.
struct ErrorRecord {
  int n = 0;
  double h = 0;
  double eps_K = 0;
  std::optional<double> eps_phi;  ///< absent when no closed-form potential exists
  double eps_v = 0;
  double eps_rho = 0;
  long iters = 0;
  bool converged = false;
  double wall_time = 0;
  SolveSummary summary;
};

struct RateFit {
  std::optional<double> alpha;
  int points = 0;
  std::string warning;

  /// A fit from at least three positive points.
  bool reliable() const { return alpha.has_value() && points >= 3; }
};

struct ConvergenceReport {
  int case_id = 0;
  double param = 0;
  double cost = 0;
  std::vector<ErrorRecord> records;  ///< sorted by decreasing h
  RateFit alpha_K, alpha_phi, alpha_v, alpha_rho;
  ReferenceRates reference;
  ReferenceRates comparator;
};

double error_cost(double k, double k_d);

/// sum over Q'_D of |v(i dt, j dx) - V(i, j)|^2 Lambda_rho(i, j).
double error_velocity(const GridSpec<double>& g, const PrimalVars<double>& lam, const VectorX<double>& velocity,
                      const AnalyticSolution& sol);

/// sum over Q'_D of |grad_D (Pi phi)^i_j - grad_D Phi^i_j|^2 Lambda_rho(i, j);
/// empty when the solution has no closed-form potential.
std::optional<double> error_potential_gradient(const GridSpec<double>& g, const DualState<double>& phi,
                                               const PrimalVars<double>& lam, const AnalyticSolution& sol);

/// dt sum over Q'_D of |Pi rho_{i dt}(j) - Lambda_rho(i, j) / dt|, with Pi rho
/// the box-mass projection of the exact density at time i dt.
double error_measure(const GridSpec<double>& g, const PrimalVars<double>& lam, const AnalyticSolution& sol);

/// Least-squares slope of log(error) against log(h). Nonpositive errors are
/// dropped with a warning; fewer than two remaining points give no slope.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

struct SolveOptions {
  AdmmConfig admm;
  double zeta = 1;
  double clamp = 0;  ///< 0 selects Lip(L, B_diam)
  CostModel<double> cost = CostModel<double>::quadratic();
};

/// Grid, marginals and optimizers of one instance.
struct CaseSolution {
  TransportProblem<double> problem;
  AdmmState<double> state;
  VectorX<double> velocity;
  ErrorRecord record;
};

TransportProblem<double> make_problem(const AnalyticMeasure& mu, const AnalyticMeasure& nu, int n,
                                      const SolveOptions& opts);

/// Solves a benchmark at N_T = n and evaluates every available metric.
CaseSolution solve_case(const TestCase& tc, int n, const SolveOptions& opts, std::ostream* log = nullptr);

ConvergenceReport run_sweep(const TestCase& tc, const std::vector<int>& resolutions, const SolveOptions& opts);

/// Report serializations. Wall times are machine-dependent, so they appear
/// only when `with_timing` is set; otherwise the CSV column is left empty.
std::string report_json(const ConvergenceReport& report, bool with_timing = false);
std::string report_csv(const ConvergenceReport& report, bool with_timing = false);

}  // namespace dualot

#endif  // DUALOT_BENCH_HPP
