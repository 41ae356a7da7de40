// Command-line front end: solve, sweep, verify-scheme, hj-ivp.
#include "dualot/bench.hpp"
#include "dualot/io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace dualot;
using nlohmann::json;

enum Exit { kOk = 0, kNotConverged = 2, kBadConfig = 3, kPropertyFailure = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  int case_id = 2;
  std::optional<double> param;
  std::vector<int> n = {32};
  double zeta = 1;
  std::string cost = "quadratic";
  double clamp_r = 0;
  double admm_r = 1;
  double stop_tol = 1e-5;
  long max_iters = 200000;
  std::string solver = "cholesky";
  std::string out;
  unsigned seed = 1;
  int trials = 1000;
  std::optional<double> eps;
  std::string mu_file;
  std::string nu_file;
  bool log = false;
  bool timing = false;

  json to_json() const {
    json j = {{"command", command}, {"case", case_id},     {"n", n},
              {"zeta", zeta},       {"cost", cost},        {"clamp_R", clamp_r},
              {"admm_r", admm_r},   {"stop_tol", stop_tol}, {"max_iters", max_iters},
              {"solver", solver},   {"out", out},          {"seed", seed},
              {"trials", trials},   {"mu", mu_file},       {"nu", nu_file},
              {"log", log},         {"timing", timing}};
    j["param"] = param ? json(*param) : json(nullptr);
    j["eps"] = eps ? json(*eps) : json(nullptr);
    return j;
  }
};

std::vector<int> parse_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad resolution list '" + text + "'");
    }
    if (used != item.size() || v < 2) throw ConfigError("bad resolution '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty resolution list");
  return out;
}

void apply_json(RunConfig& c, const json& j) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key) && !j[key].is_null()) j[key].get_to(field);
  };
  get("case", c.case_id);
  if (j.contains("param") && !j["param"].is_null()) c.param = j["param"].get<double>();
  if (j.contains("n")) {
    if (j["n"].is_array()) {
      c.n = j["n"].get<std::vector<int>>();
    } else if (j["n"].is_string()) {
      c.n = parse_list(j["n"].get<std::string>());
    } else {
      c.n = {j["n"].get<int>()};
    }
  }
  get("zeta", c.zeta);
  get("cost", c.cost);
  get("clamp_R", c.clamp_r);
  get("admm_r", c.admm_r);
  get("stop_tol", c.stop_tol);
  get("max_iters", c.max_iters);
  get("solver", c.solver);
  get("out", c.out);
  get("seed", c.seed);
  get("trials", c.trials);
  if (j.contains("eps") && !j["eps"].is_null()) c.eps = j["eps"].get<double>();
  get("mu", c.mu_file);
  get("nu", c.nu_file);
  get("log", c.log);
  get("timing", c.timing);
}

CostModel<double> parse_cost(const std::string& text) {
  if (text == "quadratic") return CostModel<double>::quadratic();
  if (text.rfind("power:", 0) == 0) {
    char* end = nullptr;
    const double p = std::strtod(text.c_str() + 6, &end);
    if (end == text.c_str() + 6 || *end != '\0') throw ConfigError("bad cost '" + text + "'");
    return CostModel<double>::power(p);
  }
  throw ConfigError("unknown cost '" + text + "' (quadratic or power:p)");
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.admm.r = c.admm_r;
  o.admm.stop_tol = c.stop_tol;
  o.admm.max_iters = c.max_iters;
  if (c.solver == "cholesky") {
    o.admm.solver = LinearSolver::kCholesky;
  } else if (c.solver == "cg") {
    o.admm.solver = LinearSolver::kCg;
  } else {
    throw ConfigError("solver must be cholesky or cg");
  }
  o.admm.validate();
  o.zeta = c.zeta;
  o.clamp = c.clamp_r;
  o.cost = parse_cost(c.cost);
  if (o.cost.kind() != CostKind::kQuadratic && (c.command == "solve" || c.command == "sweep")) {
    throw ConfigError("transport solves need the quadratic cost");
  }
  return o;
}

std::string out_path(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out) / name).string();
}

void prepare_out(const RunConfig& c) {
  if (c.out.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  if (ec) throw ConfigError("cannot create output directory " + c.out);
  write_atomic(out_path(c, "config.json"), c.to_json().dump(2) + "\n");
}

json number_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json summary_json(const SolveSummary& s) {
  return {{"K_D", s.k_d},
          {"primal_objective", s.primal_infinite ? json(nullptr) : json(s.primal)},
          {"duality_gap", s.primal_infinite ? json(nullptr) : json(s.gap)},
          {"hj_violation", s.hj_violation},
          {"clamp_violation", s.clamp_violation},
          {"min_rho", s.min_rho},
          {"mass_drift", s.mass_drift},
          {"zero_mass_momentum", s.zero_mass_momentum},
          {"max_velocity", s.max_velocity},
          {"iterations", s.iters},
          {"converged", s.converged},
          {"primal_residual", s.primal_res},
          {"dual_residual", s.dual_res},
          {"final_r", s.final_r}};
}

void write_fields(const RunConfig& c, const TransportProblem<double>& p, const AdmmState<double>& st,
                  const VectorX<double>& velocity) {
  const auto& g = p.grid();
  VectorX<double> momentum(st.lam.n_t * g.d * g.spatial_size());
  momentum = st.lam.x_block();
  write_atomic(out_path(c, "phi.csv"), scalar_grid_csv(g, Domain::kSpaceTime, st.phi.values, "phi"));
  write_atomic(out_path(c, "rho.csv"),
               scalar_grid_csv(g, Domain::kSpaceTimeOpen, VectorX<double>(st.lam.rho()), "lambda_rho"));
  write_atomic(out_path(c, "momentum.csv"), vector_grid_csv(g, Domain::kSpaceTimeOpen, momentum, "lambda_m"));
  write_atomic(out_path(c, "velocity.csv"), vector_grid_csv(g, Domain::kSpaceTimeOpen, velocity, "velocity"));
}

int cmd_solve(const RunConfig& c) {
  if (c.n.size() != 1) throw ConfigError("solve takes a single resolution");
  const SolveOptions opts = solve_options(c);
  prepare_out(c);
  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (c.log && !c.out.empty()) {
    log_file.open(out_path(c, "iterations.csv"));
    log = &log_file;
  }
  json summary;
  TransportProblem<double> problem;
  AdmmState<double> state;
  VectorX<double> velocity;
  bool converged = false;
  if (!c.mu_file.empty() || !c.nu_file.empty()) {
    if (c.mu_file.empty() || c.nu_file.empty()) throw ConfigError("--mu and --nu must be given together");
    problem.params = SchemeParams<double>::make(1, 1.0, c.n[0], opts.cost, opts.zeta, opts.clamp);
    problem.pi_mu = load_measure_table(c.mu_file, problem.grid()).weights;
    problem.pi_nu = load_measure_table(c.nu_file, problem.grid()).weights;
    state = solve(problem, opts.admm, log);
    const SolveSummary s = summarize(problem, state);
    velocity = recover_velocity(state.lam, s.support_tol);
    summary = summary_json(s);
    summary["measures"] = {{"mu", c.mu_file}, {"nu", c.nu_file}};
    converged = s.converged;
  } else {
    const TestCase tc = build_test_case(c.case_id, c.param.value_or(default_test_param(c.case_id)));
    CaseSolution cs = solve_case(tc, c.n[0], opts, log);
    problem = cs.problem;
    state = std::move(cs.state);
    velocity = cs.velocity;
    summary = summary_json(cs.record.summary);
    summary["case"] = tc.id;
    summary["param"] = tc.param;
    summary["K"] = tc.solution.cost;
    summary["errors"] = {{"eps_K", cs.record.eps_K},
                         {"eps_phi", number_or_null(cs.record.eps_phi)},
                         {"eps_v", cs.record.eps_v},
                         {"eps_rho", cs.record.eps_rho}};
    if (!cs.record.eps_phi) summary["errors"]["eps_phi_status"] = "unavailable: no closed-form potential";
    converged = cs.record.converged;
  }
  const auto& g = problem.grid();
  summary["grid"] = {{"d", g.d}, {"n_t", g.n_t}, {"n_x", g.n_x}, {"dt", g.dt},
                     {"dx", g.dx}, {"eps", g.eps}, {"clamp_R", g.clamp}};
  const std::string text = summary.dump(2) + "\n";
  if (!c.out.empty()) {
    write_fields(c, problem, state, velocity);
    write_atomic(out_path(c, "summary.json"), text);
  }
  std::cout << text;
  if (!converged) {
    std::cerr << "ADMM stopped at max_iters without meeting stop_tol\n";
    return kNotConverged;
  }
  return kOk;
}

std::string fmt(std::optional<double> v, int prec = 3) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << *v;
  return s.str();
}

int cmd_sweep(const RunConfig& c) {
  if (c.n.size() < 2) throw ConfigError("sweep needs at least two resolutions");
  const SolveOptions opts = solve_options(c);
  prepare_out(c);
  const TestCase tc = build_test_case(c.case_id, c.param.value_or(default_test_param(c.case_id)));
  const ConvergenceReport report = run_sweep(tc, c.n, opts);
  if (!c.out.empty()) {
    write_atomic(out_path(c, "report.json"), report_json(report, c.timing));
    write_atomic(out_path(c, "records.csv"), report_csv(report, c.timing));
  }
  std::cout << "case " << report.case_id << " (param " << report.param << "), K = " << report.cost << "\n";
  std::cout << std::setw(6) << "N" << std::setw(14) << "eps_K" << std::setw(14) << "eps_phi" << std::setw(14)
            << "eps_v" << std::setw(14) << "eps_rho" << std::setw(9) << "iters" << "\n";
  bool all_converged = true;
  for (const auto& r : report.records) {
    std::ostringstream phi;
    if (r.eps_phi) {
      phi << std::scientific << std::setprecision(4) << *r.eps_phi;
    } else {
      phi << "n/a";
    }
    std::cout << std::setw(6) << r.n << std::scientific << std::setprecision(4) << std::setw(14) << r.eps_K
              << std::setw(14) << phi.str() << std::setw(14) << r.eps_v << std::setw(14) << r.eps_rho
              << std::defaultfloat << std::setw(9) << r.iters << (r.converged ? "" : "  (not converged)") << "\n";
    all_converged = all_converged && r.converged;
  }
  auto line = [](const char* name, const RateFit& f, std::optional<double> ref) {
    std::cout << "  " << name << " = " << fmt(f.alpha) << "   reference " << fmt(ref);
    if (!f.warning.empty()) std::cout << "   [" << f.warning << "]";
    std::cout << "\n";
  };
  std::cout << "fitted orders:\n";
  line("alpha_K  ", report.alpha_K, report.reference.alpha_K);
  line("alpha_phi", report.alpha_phi, std::nullopt);
  line("alpha_v  ", report.alpha_v, report.reference.alpha_v);
  line("alpha_rho", report.alpha_rho, report.reference.alpha_rho);
  return all_converged ? kOk : kNotConverged;
}

SchemeParams<double> scheme_params(const RunConfig& c) {
  const CostModel<double> cost = parse_cost(c.cost);
  SchemeParams<double> p = SchemeParams<double>::make(1, 1.0, c.n[0], cost, c.zeta, c.clamp_r);
  if (c.eps) {
    if (*c.eps < 0) throw ConfigError("viscosity must be nonnegative");
    p.grid = GridSpec<double>::with_viscosity(1, 1.0, p.grid.n_t, p.grid.n_x, p.grid.clamp, *c.eps);
  }
  return p;
}

int cmd_verify_scheme(const RunConfig& c) {
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  const SchemeParams<double> p = scheme_params(c);
  prepare_out(c);
  const double consistency = check_consistency(p, 20, c.seed);
  const SchemeCheckReport mono = check_monotone(p, c.trials, c.seed + 1);
  const double cr_excess = check_cr_preservation(p, 20, c.seed + 2);
  struct Row {
    std::string name;
    bool pass;
    std::string detail;
  };
  auto sci = [](double v) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(3) << v;
    return s.str();
  };
  const std::vector<Row> rows = {
      {"consistency (affine data)", consistency <= 1e-14, "max error " + sci(consistency)},
      {"monotonicity", mono.monotone_violations == 0,
       std::to_string(mono.monotone_violations) + "/" + std::to_string(mono.trials) + " violations"},
      {"non-expansiveness", mono.expansion_violations == 0,
       std::to_string(mono.expansion_violations) + "/" + std::to_string(mono.trials) + " violations"},
      {"C_R preservation", cr_excess <= 1e-12, "max slope - R = " + sci(cr_excess)},
  };
  std::cout << "grid: N_T=" << p.grid.n_t << " N_X=" << p.grid.n_x << " eps=" << p.grid.eps
            << " R=" << p.grid.clamp << " delta=" << p.delta << (p.admissible() ? " (admissible)" : " (NOT admissible)")
            << "\n";
  bool all = true;
  json j = json::array();
  for (const auto& r : rows) {
    std::cout << (r.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(28) << r.name << std::right << r.detail
              << "\n";
    j.push_back({{"property", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    all = all && r.pass;
  }
  if (!mono.first_violation.empty()) std::cout << "first violation: " << mono.first_violation << "\n";
  if (!c.out.empty()) write_atomic(out_path(c, "verify.json"), j.dump(2) + "\n");
  return all ? kOk : kPropertyFailure;
}

int cmd_hj_ivp(const RunConfig& c) {
  if (c.n.size() != 1) throw ConfigError("hj-ivp takes a single resolution");
  const SchemeParams<double> p = scheme_params(c);
  const TestCase tc = build_test_case(c.case_id, c.param.value_or(default_test_param(c.case_id)));
  if (!tc.solution.phi) throw ConfigError("test case " + std::to_string(tc.id) + " has no closed-form potential");
  prepare_out(c);
  const auto phi_bar = *tc.solution.phi;
  const std::function<double(const Point<double>&)> phi0 = [phi_bar](const Point<double>& x) {
    return phi_bar(0.0, x[0]);
  };
  ScalarField<double> init(p.grid, Domain::kSpace);
  for (Index j = 0; j < p.grid.spatial_size(); ++j) init.values[j] = phi_bar(0.0, p.grid.coordinate(j, 0));
  const ScalarField<double> phi = solve_ivp(p, init);
  const double err = ivp_sup_error(p, phi0);
  json j = {{"case", tc.id}, {"n_t", p.grid.n_t}, {"n_x", p.grid.n_x}, {"eps", p.grid.eps},
            {"sup_error_vs_hopf_lax", err}};
  if (!c.out.empty()) {
    write_atomic(out_path(c, "phi.csv"), scalar_grid_csv(p.grid, Domain::kSpaceTime, phi.values, "phi"));
    write_atomic(out_path(c, "summary.json"), j.dump(2) + "\n");
  }
  std::cout << j.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic optimal transport through a discrete Hamilton-Jacobi dual"};
  app.require_subcommand(1);
  RunConfig flags;
  std::string n_text;
  std::string config_file;
  double param = 0;
  double eps = 0;

  std::vector<CLI::App*> subs;
  for (const char* name : {"solve", "sweep", "verify-scheme", "hj-ivp"}) {
    CLI::App* s = app.add_subcommand(name);
    subs.push_back(s);
    s->add_option("--config", config_file, "JSON config file; flags override its entries");
    s->add_option("--case", flags.case_id, "test case 1, 2 or 3");
    s->add_option("--param", param, "test case parameter w");
    s->add_option("--n", n_text, "N_T, or a comma-separated list for sweeps");
    s->add_option("--zeta", flags.zeta, "dt / dx");
    s->add_option("--cost", flags.cost, "quadratic or power:p");
    s->add_option("--clamp-R", flags.clamp_r, "gradient clamp level R");
    s->add_option("--admm-r,--r", flags.admm_r, "initial ADMM penalty");
    s->add_option("--stop-tol", flags.stop_tol, "residual threshold");
    s->add_option("--max-iters", flags.max_iters, "ADMM iteration cap");
    s->add_option("--solver", flags.solver, "cholesky or cg");
    s->add_option("--out", flags.out, "output directory");
    s->add_option("--seed", flags.seed, "seed for property tests");
    s->add_option("--trials", flags.trials, "random pairs for property tests");
    s->add_option("--eps", eps, "explicit viscosity (verify-scheme, hj-ivp)");
    s->add_option("--mu", flags.mu_file, "custom initial measure table");
    s->add_option("--nu", flags.nu_file, "custom final measure table");
    s->add_flag("--log", flags.log, "write iterations.csv");
    s->add_flag("--timing", flags.timing, "include wall times in sweep reports");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    RunConfig c;
    CLI::App* used = nullptr;
    for (auto* s : subs) {
      if (s->parsed()) used = s;
    }
    c.command = used->get_name();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ConfigError("cannot read config " + config_file);
      json j;
      try {
        in >> j;
        apply_json(c, j);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config file: ") + e.what());
      }
    }
    auto given = [&](const char* name) { return used->get_option(name)->count() > 0; };
    if (given("--case")) c.case_id = flags.case_id;
    if (given("--param")) c.param = param;
    if (given("--n")) c.n = parse_list(n_text);
    if (given("--zeta")) c.zeta = flags.zeta;
    if (given("--cost")) c.cost = flags.cost;
    if (given("--clamp-R")) c.clamp_r = flags.clamp_r;
    if (given("--admm-r")) c.admm_r = flags.admm_r;
    if (given("--stop-tol")) c.stop_tol = flags.stop_tol;
    if (given("--max-iters")) c.max_iters = flags.max_iters;
    if (given("--solver")) c.solver = flags.solver;
    if (given("--out")) c.out = flags.out;
    if (given("--seed")) c.seed = flags.seed;
    if (given("--trials")) c.trials = flags.trials;
    if (given("--eps")) c.eps = eps;
    if (given("--mu")) c.mu_file = flags.mu_file;
    if (given("--nu")) c.nu_file = flags.nu_file;
    if (given("--log")) c.log = flags.log;
    if (given("--timing")) c.timing = flags.timing;

    if (c.command == "solve") return cmd_solve(c);
    if (c.command == "sweep") return cmd_sweep(c);
    if (c.command == "verify-scheme") return cmd_verify_scheme(c);
    return cmd_hj_ivp(c);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kBadConfig;
  } catch (const GridError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kBadConfig;
  } catch (const MeasureError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kBadConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
