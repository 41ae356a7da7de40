#include "dualot/measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace dualot {

namespace {

constexpr double kPi = std::numbers::pi;

// 10-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 5> kGlNodes = {
    0.1488743389816312108848260, 0.4333953941292471907992659, 0.6794095682990244062343274,
    0.8650633666889845107320967, 0.9739065285171717200779640};
constexpr std::array<double, 5> kGlWeights = {
    0.2955242247147528701738930, 0.2692667193099963550912269, 0.2190863625159820439955349,
    0.1494513491505805931457763, 0.0666713443086881375935688};

double gauss_legendre(const std::function<double(double)>& f, double a, double b) {
  const double c = (a + b) / 2;
  const double r = (b - a) / 2;
  double s = 0;
  for (std::size_t n = 0; n < kGlNodes.size(); ++n) {
    s += kGlWeights[n] * (f(c - r * kGlNodes[n]) + f(c + r * kGlNodes[n]));
  }
  return s * r;
}

double adaptive(const std::function<double(double)>& f, double a, double b, double whole,
                double tol, int depth) {
  const double m = (a + b) / 2;
  const double left = gauss_legendre(f, a, m);
  const double right = gauss_legendre(f, m, b);
  if (std::abs(left + right - whole) <= tol) return left + right;
  if (depth >= 40) throw MeasureError("quadrature failed to converge");
  return adaptive(f, a, m, left, tol / 2, depth + 1) + adaptive(f, m, b, right, tol / 2, depth + 1);
}

/// Mass of [a, b) for a 1-D measure. Boxes never exceed one period.
double interval_mass(const AnalyticMeasure& mu, double a, double b, double period) {
  if (mu.kind == AnalyticMeasure::Kind::kDensity) {
    auto f = [&](double x) { return mu.profile(wrap(x, period)); };
    return integrate_piecewise(f, a, b, mu.breakpoints, period);
  }
  throw MeasureError("interval_mass called on atoms");
}

double floor_mod(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0) r += period;
  return r;
}

}  // namespace

double wrap(double x, double period) {
  double r = floor_mod(x + period / 2, period) - period / 2;
  // fmod rounding can land exactly on the right end
  if (r >= period / 2) r -= period;
  return r;
}

double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           const std::vector<double>& breakpoints, double period, double tol) {
  std::vector<double> cuts = {a, b};
  for (double p : breakpoints) {
    for (int shift = -2; shift <= 2; ++shift) {
      const double q = p + shift * period;
      if (q > a && q < b) cuts.push_back(q);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0;
  const double piece_tol = tol / double(cuts.size());
  for (std::size_t n = 0; n + 1 < cuts.size(); ++n) {
    const double lo = cuts[n];
    const double hi = cuts[n + 1];
    if (hi <= lo) continue;
    // integrate the open interval: evaluate the profile on the interior only
    total += adaptive(f, lo, hi, gauss_legendre(f, lo, hi), piece_tol, 0);
  }
  return total;
}

AnalyticMeasure AnalyticMeasure::density(std::string descriptor, std::function<double(double)> profile,
                                         std::vector<double> breakpoints) {
  AnalyticMeasure m;
  m.kind = Kind::kDensity;
  m.descriptor = std::move(descriptor);
  m.profile = std::move(profile);
  m.breakpoints = std::move(breakpoints);
  return m;
}

AnalyticMeasure AnalyticMeasure::from_atoms(std::string descriptor, std::vector<Atom> atoms) {
  AnalyticMeasure m;
  m.kind = Kind::kAtoms;
  m.descriptor = std::move(descriptor);
  m.atoms = std::move(atoms);
  double total = 0;
  for (const auto& a : m.atoms) {
    if (a.mass < 0) throw MeasureError("negative atom mass");
    total += a.mass;
  }
  if (std::abs(total - 1) > 1e-12) throw MeasureError("atom masses must sum to 1");
  return m;
}

AnalyticMeasure AnalyticMeasure::uniform(double period) {
  return density("uniform", [period](double) { return 1.0 / period; });
}

AnalyticMeasure AnalyticMeasure::cosine(int w) {
  return density("cosine(" + std::to_string(w) + ")",
                 [w](double x) { return 1.0 + 0.5 * std::cos(2 * kPi * w * x); });
}

AnalyticMeasure AnalyticMeasure::triangle(double w) {
  return density("triangle(" + std::to_string(w) + ")",
                 [w](double x) { return std::max(w - std::abs(x), 0.0) / (w * w); }, {-w, 0.0, w});
}

AnalyticMeasure AnalyticMeasure::double_triangle(double w) {
  return density("double_triangle(" + std::to_string(w) + ")",
                 [w](double x) { return std::max(2 * w - std::abs(x), 0.0) / (4 * w * w); },
                 {-2 * w, 0.0, 2 * w});
}

AnalyticMeasure AnalyticMeasure::box(double w) {
  return density("box(" + std::to_string(w) + ")",
                 [w](double x) { return std::abs(x) <= w ? 1.0 / (2 * w) : 0.0; }, {-w, w});
}

AnalyticMeasure AnalyticMeasure::double_box(double w) {
  return density("double_box(" + std::to_string(w) + ")",
                 [w](double x) { return 0.5 - std::abs(x) <= w ? 1.0 / (2 * w) : 0.0; },
                 {-0.5, -0.5 + w, 0.5 - w, 0.5});
}

AnalyticMeasure AnalyticMeasure::dirac(std::vector<double> x0) {
  std::ostringstream name;
  name << "dirac(";
  for (std::size_t k = 0; k < x0.size(); ++k) name << (k ? "," : "") << x0[k];
  name << ")";
  return from_atoms(name.str(), {Atom{std::move(x0), 1.0}});
}

double AnalyticMeasure::density_at(const std::vector<double>& x, double period) const {
  if (kind != Kind::kDensity) throw MeasureError("measure has no density");
  double v = 1;
  for (double xk : x) v *= profile(wrap(xk, period));
  return v;
}

double DiscreteMeasure::total() const {
  double s = 0;
  for (Index j = 0; j < weights.size(); ++j) s += weights[j];
  return s;
}

void DiscreteMeasure::validate(double tol) const {
  for (Index j = 0; j < weights.size(); ++j) {
    if (!(weights[j] >= 0)) throw MeasureError("discrete measure has a negative or NaN weight");
  }
  if (std::abs(total() - 1) > tol) {
    throw MeasureError("discrete measure mass " + std::to_string(total()) + " is not 1");
  }
}

DiscreteMeasure project_measure(const AnalyticMeasure& mu, const GridSpec<double>& grid) {
  const Index size = grid.spatial_size();
  DiscreteMeasure out;
  out.weights = VectorX<double>::Zero(size);
  if (mu.kind == AnalyticMeasure::Kind::kAtoms) {
    for (const auto& atom : mu.atoms) {
      if (int(atom.location.size()) != grid.d) throw MeasureError("atom dimension mismatch");
      std::vector<int> idx(grid.d);
      for (int k = 0; k < grid.d; ++k) {
        // B_j contains x iff (j - 1/2) dx <= x < (j + 1/2) dx, i.e. j = floor(x/dx + 1/2)
        const double y = floor_mod(atom.location[k], grid.period);
        idx[k] = int(std::floor(y / grid.dx + 0.5)) % grid.n_x;
      }
      out.weights[grid.flatten(idx)] += atom.mass;
    }
    return out;
  }
  // tensorized density: box masses factorize over the axes
  std::vector<double> axis_mass(grid.n_x);
  for (int j = 0; j < grid.n_x; ++j) {
    const double c = j * grid.dx;
    axis_mass[j] = interval_mass(mu, c - grid.dx / 2, c + grid.dx / 2, grid.period);
  }
  for (Index j = 0; j < size; ++j) {
    double w = 1;
    for (int idx : grid.unflatten(j)) w *= axis_mass[idx];
    out.weights[j] = w;
  }
  return out;
}

DiscreteMeasure load_measure_table(const std::string& path, const GridSpec<double>& grid) {
  std::ifstream in(path);
  if (!in) throw MeasureError("cannot open measure table " + path);
  DiscreteMeasure out;
  out.weights = VectorX<double>::Zero(grid.spatial_size());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> cols;
    double v;
    while (fields >> v) cols.push_back(v);
    if (!fields.eof()) throw MeasureError(path + ":" + std::to_string(lineno) + ": not a number");
    if (cols.empty()) continue;
    if (int(cols.size()) != grid.d + 1) {
      throw MeasureError(path + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(grid.d + 1) + " columns");
    }
    std::vector<int> idx(grid.d);
    for (int k = 0; k < grid.d; ++k) {
      if (cols[k] != std::floor(cols[k]) || cols[k] < 0 || cols[k] >= grid.n_x) {
        throw MeasureError(path + ":" + std::to_string(lineno) + ": grid index out of range");
      }
      idx[k] = int(cols[k]);
    }
    out.weights[grid.flatten(idx)] += cols[grid.d];
  }
  out.validate();
  return out;
}

double default_test_param(int id) {
  switch (id) {
    case 1: return 1;
    case 2: return 0.2;
    case 3: return 0.05;
    default: throw MeasureError("unknown test case " + std::to_string(id));
  }
}

double invert_transport_map(double t, double x, int w) {
  if (t < 0 || t > 1) throw MeasureError("time must lie in [0, 1]");
  if (t == 0) return x;
  const double k = 2 * kPi * w;
  const double amp = t / (4 * kPi * w);
  auto map = [&](double y) { return y + amp * std::sin(k * y) - x; };
  double y = x;
  for (int it = 0; it < 50; ++it) {
    const double f = map(y);
    const double df = 1 + amp * k * std::cos(k * y);  // >= 1/2 for t <= 1
    const double step = f / df;
    y -= step;
    if (std::abs(step) <= 1e-15 * (1 + std::abs(y)) && std::abs(map(y)) <= 1e-12) return y;
  }
  // T_t - Id is bounded by |amp|, so the root lies within that window
  double lo = x - std::abs(amp) - 1e-12;
  double hi = x + std::abs(amp) + 1e-12;
  if (map(lo) > 0 || map(hi) < 0) throw MeasureError("transport map inversion: no bracket");
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = (lo + hi) / 2;
    (map(mid) < 0 ? lo : hi) = mid;
  }
  y = (lo + hi) / 2;
  if (std::abs(map(y)) > 1e-12) throw MeasureError("transport map inversion did not converge");
  return y;
}

namespace {

double sign(double x) { return (x > 0) - (x < 0); }

TestCase cosine_case(int w) {
  TestCase tc;
  tc.mu = AnalyticMeasure::cosine(w);
  tc.nu = AnalyticMeasure::uniform();
  auto rho = [w](double t, double x) {
    const double y = invert_transport_map(t, wrap(x, 1.0), w);
    const double c = std::cos(2 * kPi * w * y);
    return (1 + c / 2) / (1 + t * c / 2);
  };
  tc.solution.cost = 1.0 / (64 * kPi * kPi * double(w) * double(w));
  tc.solution.rho = rho;
  tc.solution.v = [w](double t, double x) {
    const double y = invert_transport_map(t, wrap(x, 1.0), w);
    return std::sin(2 * kPi * w * y) / (4 * kPi * w);
  };
  tc.solution.measure_at = [rho, w](double t) {
    return AnalyticMeasure::density("rho_bar(" + std::to_string(t) + ")",
                                    [rho, t](double x) { return rho(t, x); });
  };
  return tc;
}

TestCase triangle_case(double w) {
  TestCase tc;
  tc.mu = AnalyticMeasure::triangle(w);
  tc.nu = AnalyticMeasure::double_triangle(w);
  auto rho = [w](double t, double x) {
    const double a = (1 + t) * w;
    return std::max(a - std::abs(x), 0.0) / (a * a);
  };
  tc.solution.cost = w * w / 12;
  tc.solution.rho = rho;
  tc.solution.v = [](double t, double x) { return x / (1 + t); };
  tc.solution.phi = [](double t, double x) { return x * x / (2 * (1 + t)); };
  tc.solution.measure_at = [rho, w](double t) {
    const double a = (1 + t) * w;
    return AnalyticMeasure::density("rho_bar(" + std::to_string(t) + ")",
                                    [rho, t](double x) { return rho(t, x); }, {-a, 0.0, a});
  };
  return tc;
}

TestCase box_case(double w) {
  TestCase tc;
  const double s = 0.5 - w;
  tc.mu = AnalyticMeasure::box(w);
  tc.nu = AnalyticMeasure::double_box(w);
  auto rho = [w, s](double t, double x) {
    const double u = std::abs(x) - t * s;
    return (u >= 0 && u <= w) ? 1.0 / (2 * w) : 0.0;
  };
  tc.solution.cost = s * s / 2;
  tc.solution.rho = rho;
  tc.solution.v = [s](double, double x) { return s * sign(x); };
  tc.solution.phi = [s](double t, double x) { return std::abs(x) * s - s * s * t / 2; };
  tc.solution.measure_at = [rho, w, s](double t) {
    const double a = t * s;
    return AnalyticMeasure::density("rho_bar(" + std::to_string(t) + ")",
                                    [rho, t](double x) { return rho(t, x); },
                                    {-a - w, -a, 0.0, a, a + w});
  };
  return tc;
}

}  // namespace

TestCase build_test_case(int id, double param) {
  TestCase tc;
  switch (id) {
    case 1: {
      if (param != std::round(param) || param == 0) {
        throw MeasureError("test case 1 needs a nonzero integer w");
      }
      tc = cosine_case(int(param));
      break;
    }
    case 2:
      if (!(param > 0 && param < 0.25)) throw MeasureError("test case 2 needs 0 < w < 1/4");
      tc = triangle_case(param);
      break;
    case 3:
      if (!(param > 0 && param < 0.5)) throw MeasureError("test case 3 needs 0 < w < 1/2");
      tc = box_case(param);
      break;
    default:
      throw MeasureError("unknown test case " + std::to_string(id));
  }
  tc.id = id;
  tc.param = param;
  return tc;
}

}  // namespace dualot
