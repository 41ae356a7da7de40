#include "dualot/bench.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace dualot {

ReferenceRates reference_rates(int case_id) {
  switch (case_id) {
    case 1: return {1.053, 2.027, 1.070};
    case 2: return {1.128, 1.772, 0.878};
    case 3: return {0.887, 0.996, 0.466};
    default: return {};
  }
}

ReferenceRates comparator_rates(int case_id) {
  switch (case_id) {
    case 1: return {1.998, 1.997, 2.254};
    case 2: return {1.873, 2.015, 1.228};
    case 3: return {1.379, 1.938, 0.418};
    default: return {};
  }
}

SolveSummary summarize(const TransportProblem<double>& problem, const AdmmState<double>& state) {
  const auto& g = problem.grid();
  SolveSummary s;
  s.k_d = objective_fd(g, state.phi, problem.pi_mu, problem.pi_nu);
  const auto p = primal_objective(g, problem.params.cost, state.lam, problem.params.clamp(), 1e-12);
  s.primal = p.value;
  s.primal_infinite = p.infinite;
  s.zero_mass_momentum = p.zero_mass_momentum;
  s.gap = s.primal - s.k_d;
  const auto f = check_dual_feasibility(state.phi, problem.params);
  s.hj_violation = f.hj_violation;
  s.clamp_violation = f.clamp_violation;
  s.min_rho = state.lam.rho().minCoeff();
  for (Index i = 0; i < g.n_t; ++i) {
    s.mass_drift = std::max(s.mass_drift, std::abs(state.lam.rho(i).sum() / g.dt - 1));
  }
  s.support_tol = default_support_tol(state.lam);
  const VectorX<double> v = recover_velocity(state.lam, s.support_tol);
  s.max_velocity = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  s.iters = state.iter;
  s.converged = state.converged;
  s.primal_res = state.primal_res.empty() ? 0.0 : state.primal_res.back();
  s.dual_res = state.dual_res.empty() ? 0.0 : state.dual_res.back();
  s.final_r = state.r;
  return s;
}

double error_cost(double k, double k_d) { return std::abs(k - k_d); }

namespace {

void require_1d(const GridSpec<double>& g) {
  if (g.d != 1) throw std::invalid_argument("benchmark metrics are one-dimensional");
}

}  // namespace

double error_velocity(const GridSpec<double>& g, const PrimalVars<double>& lam, const VectorX<double>& velocity,
                      const AnalyticSolution& sol) {
  require_1d(g);
  double total = 0;
  for (Index i = 0; i < g.n_t; ++i) {
    const double t = g.time(i);
    for (Index j = 0; j < g.spatial_size(); ++j) {
      const double weight = lam.rho(i)[j];
      if (weight == 0) continue;
      const double diff = sol.v(t, g.coordinate(j, 0)) - velocity[i * g.spatial_size() + j];
      total += diff * diff * weight;
    }
  }
  return total;
}

std::optional<double> error_potential_gradient(const GridSpec<double>& g, const DualState<double>& phi,
                                               const PrimalVars<double>& lam, const AnalyticSolution& sol) {
  require_1d(g);
  if (!sol.phi) return std::nullopt;
  const Index s = g.spatial_size();
  VectorX<double> exact(s);
  double total = 0;
  for (Index i = 0; i < g.n_t; ++i) {
    for (Index j = 0; j < s; ++j) exact[j] = (*sol.phi)(g.time(i), g.coordinate(j, 0));
    const VectorX<double> diff = centered_diff(g, exact, 0) - centered_diff(g, phi.slice(i), 0);
    for (Index j = 0; j < s; ++j) total += diff[j] * diff[j] * lam.rho(i)[j];
  }
  return total;
}

double error_measure(const GridSpec<double>& g, const PrimalVars<double>& lam, const AnalyticSolution& sol) {
  require_1d(g);
  double total = 0;
  for (Index i = 0; i < g.n_t; ++i) {
    const DiscreteMeasure exact = project_measure(sol.measure_at(g.time(i)), g);
    for (Index j = 0; j < g.spatial_size(); ++j) {
      total += std::abs(exact.weights[j] - lam.rho(i)[j] / g.dt);
    }
  }
  return g.dt * total;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  RateFit fit;
  std::vector<std::pair<double, double>> logs;
  int dropped = 0;
  for (const auto& [h, e] : points) {
    if (h > 0 && e > 0 && std::isfinite(e)) {
      logs.emplace_back(std::log(h), std::log(e));
    } else {
      ++dropped;
    }
  }
  fit.points = int(logs.size());
  if (dropped) fit.warning = std::to_string(dropped) + " nonpositive point(s) excluded";
  if (logs.size() < 2) {
    if (!fit.warning.empty()) fit.warning += "; ";
    fit.warning += "fewer than two points, no fit";
    return fit;
  }
  double mx = 0, my = 0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= double(logs.size());
  my /= double(logs.size());
  double sxy = 0, sxx = 0;
  for (const auto& [x, y] : logs) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  if (sxx == 0) {
    fit.warning += fit.warning.empty() ? "" : "; ";
    fit.warning += "all points share one h";
    return fit;
  }
  fit.alpha = sxy / sxx;
  if (logs.size() == 2) {
    fit.warning += fit.warning.empty() ? "" : "; ";
    fit.warning += "two-point fit";
  }
  return fit;
}

TransportProblem<double> make_problem(const AnalyticMeasure& mu, const AnalyticMeasure& nu, int n,
                                      const SolveOptions& opts) {
  TransportProblem<double> p;
  p.params = SchemeParams<double>::make(1, 1.0, n, opts.cost, opts.zeta, opts.clamp);
  const DiscreteMeasure pm = project_measure(mu, p.params.grid);
  const DiscreteMeasure pn = project_measure(nu, p.params.grid);
  pm.validate(1e-9);
  pn.validate(1e-9);
  p.pi_mu = pm.weights;
  p.pi_nu = pn.weights;
  return p;
}

CaseSolution solve_case(const TestCase& tc, int n, const SolveOptions& opts, std::ostream* log) {
  CaseSolution out;
  out.problem = make_problem(tc.mu, tc.nu, n, opts);
  const auto start = std::chrono::steady_clock::now();
  out.state = solve(out.problem, opts.admm, log);
  const auto stop = std::chrono::steady_clock::now();
  const auto& g = out.problem.grid();
  auto& rec = out.record;
  rec.n = n;
  rec.h = g.h;
  rec.summary = summarize(out.problem, out.state);
  rec.iters = out.state.iter;
  rec.converged = out.state.converged;
  rec.wall_time = std::chrono::duration<double>(stop - start).count();
  out.velocity = recover_velocity(out.state.lam, rec.summary.support_tol);
  rec.eps_K = error_cost(tc.solution.cost, rec.summary.k_d);
  rec.eps_v = error_velocity(g, out.state.lam, out.velocity, tc.solution);
  rec.eps_phi = error_potential_gradient(g, out.state.phi, out.state.lam, tc.solution);
  rec.eps_rho = error_measure(g, out.state.lam, tc.solution);
  return out;
}

ConvergenceReport run_sweep(const TestCase& tc, const std::vector<int>& resolutions, const SolveOptions& opts) {
  ConvergenceReport report;
  report.case_id = tc.id;
  report.param = tc.param;
  report.cost = tc.solution.cost;
  report.reference = reference_rates(tc.id);
  report.comparator = comparator_rates(tc.id);
  for (int n : resolutions) report.records.push_back(solve_case(tc, n, opts).record);
  std::sort(report.records.begin(), report.records.end(),
            [](const ErrorRecord& a, const ErrorRecord& b) { return a.h > b.h; });
  std::vector<std::pair<double, double>> k, phi, v, rho;
  bool have_phi = true;
  for (const auto& r : report.records) {
    if (!r.converged) continue;
    k.emplace_back(r.h, r.eps_K);
    v.emplace_back(r.h, r.eps_v);
    rho.emplace_back(r.h, r.eps_rho);
    if (r.eps_phi) {
      phi.emplace_back(r.h, *r.eps_phi);
    } else {
      have_phi = false;
    }
  }
  report.alpha_K = fit_rate(k);
  report.alpha_v = fit_rate(v);
  report.alpha_rho = fit_rate(rho);
  if (have_phi) {
    report.alpha_phi = fit_rate(phi);
  } else {
    report.alpha_phi.warning = "no closed-form potential";
  }
  return report;
}

namespace {

nlohmann::json fit_json(const RateFit& f) {
  nlohmann::json j;
  j["alpha"] = f.alpha ? nlohmann::json(*f.alpha) : nlohmann::json(nullptr);
  j["points"] = f.points;
  j["reliable"] = f.reliable();
  j["warning"] = f.warning;
  return j;
}

nlohmann::json rates_json(const ReferenceRates& r) {
  return {{"alpha_K", r.alpha_K}, {"alpha_v", r.alpha_v}, {"alpha_rho", r.alpha_rho}};
}

}  // namespace

std::string report_json(const ConvergenceReport& report, bool with_timing) {
  nlohmann::json j;
  j["case"] = report.case_id;
  j["param"] = report.param;
  j["cost"] = report.cost;
  j["records"] = nlohmann::json::array();
  for (const auto& r : report.records) {
    nlohmann::json e = {{"n", r.n},
                        {"h", r.h},
                        {"eps_K", r.eps_K},
                        {"eps_phi", r.eps_phi ? nlohmann::json(*r.eps_phi) : nlohmann::json(nullptr)},
                        {"eps_v", r.eps_v},
                        {"eps_rho", r.eps_rho},
                        {"K_D", r.summary.k_d},
                        {"duality_gap", r.summary.gap},
                        {"iters", r.iters},
                        {"converged", r.converged}};
    if (with_timing) e["wall_time"] = r.wall_time;
    j["records"].push_back(e);
  }
  j["alpha_K"] = fit_json(report.alpha_K);
  j["alpha_phi"] = fit_json(report.alpha_phi);
  j["alpha_v"] = fit_json(report.alpha_v);
  j["alpha_rho"] = fit_json(report.alpha_rho);
  j["reference_rates"] = rates_json(report.reference);
  j["comparator_rates"] = rates_json(report.comparator);
  return j.dump(2) + "\n";
}

std::string report_csv(const ConvergenceReport& report, bool with_timing) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "h,eps_K,eps_phi,eps_v,eps_rho,iters,wall_time\n";
  for (const auto& r : report.records) {
    out << r.h << ',' << r.eps_K << ',';
    if (r.eps_phi) out << *r.eps_phi;
    out << ',' << r.eps_v << ',' << r.eps_rho << ',' << r.iters << ',';
    if (with_timing) out << r.wall_time;
    out << '\n';
  }
  return out.str();
}

}  // namespace dualot
