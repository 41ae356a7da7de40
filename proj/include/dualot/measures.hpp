// Analytic probability measures on the torus, their projection onto grid
// Diracs, and the closed-form optimizers of the benchmark transport problems.
#ifndef DUALOT_MEASURES_HPP
#define DUALOT_MEASURES_HPP

#include "dualot/grid.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualot {

class MeasureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point mass at `location` (one coordinate per axis).
struct Atom {
  std::vector<double> location;
  double mass = 0;
};

/// A probability measure on R^d / D Z^d, either absolutely continuous with a
/// piecewise-smooth 1-D profile (tensorized over the axes when d > 1) or a
/// finite list of atoms.
struct AnalyticMeasure {
  enum class Kind { kDensity, kAtoms };

  Kind kind = Kind::kDensity;
  std::string descriptor;
  /// Density profile on [-D/2, D/2); arguments outside are wrapped.
  std::function<double(double)> profile;
  /// Kinks and jumps of the profile in [-D/2, D/2], used to split quadrature.
  std::vector<double> breakpoints;
  std::vector<Atom> atoms;

  static AnalyticMeasure density(std::string descriptor, std::function<double(double)> profile,
                                 std::vector<double> breakpoints = {});
  static AnalyticMeasure from_atoms(std::string descriptor, std::vector<Atom> atoms);

  static AnalyticMeasure uniform(double period = 1);
  /// 1 + cos(2 pi w x) / 2
  static AnalyticMeasure cosine(int w);
  /// max(w - |x|, 0) / w^2
  static AnalyticMeasure triangle(double w);
  /// max(2w - |x|, 0) / (4 w^2)
  static AnalyticMeasure double_triangle(double w);
  /// indicator of |x| <= w, normalized
  static AnalyticMeasure box(double w);
  /// indicator of 1/2 - |x| <= w, normalized (box centered at the antipode)
  static AnalyticMeasure double_box(double w);
  static AnalyticMeasure dirac(std::vector<double> x0);

  /// Density at a point of the torus (product over axes for d > 1).
  double density_at(const std::vector<double>& x, double period) const;
};

/// Grid weights representing the projection onto Diracs at grid points.
struct DiscreteMeasure {
  VectorX<double> weights;

  double total() const;
  /// Throws MeasureError unless weights are >= 0 and sum to 1 within `tol`.
  void validate(double tol = 1e-12) const;
};

/// Wrap x to [-D/2, D/2).
double wrap(double x, double period);

/// Integral of a piecewise-smooth function over [a, b] by adaptive
/// Gauss-Legendre, splitting at the given breakpoints (taken modulo period).
double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           const std::vector<double>& breakpoints, double period,
                           double tol = 1e-10);

/// Mass of each half-open box B_j = prod_k [(j_k - 1/2) dx, (j_k + 1/2) dx).
DiscreteMeasure project_measure(const AnalyticMeasure& mu, const GridSpec<double>& grid);

/// Read a custom discrete measure from a whitespace/comma separated table
/// with columns (j_1 .. j_d, weight); '#' starts a comment.
DiscreteMeasure load_measure_table(const std::string& path, const GridSpec<double>& grid);

/// Closed-form optimizers of a transport problem.
struct AnalyticSolution {
  double cost = 0;
  std::function<double(double, double)> rho;  ///< density at (t, x)
  std::function<double(double, double)> v;    ///< velocity at (t, x)
  std::optional<std::function<double(double, double)>> phi;  ///< potential, when known
  /// The optimal measure at time t as an AnalyticMeasure (for projection).
  std::function<AnalyticMeasure(double)> measure_at;
};

struct TestCase {
  int id = 0;
  double param = 0;
  AnalyticMeasure mu;
  AnalyticMeasure nu;
  AnalyticSolution solution;
};

/// Default parameter of each benchmark: w = 1, 0.2 and 0.05.
double default_test_param(int id);

/// Benchmarks on the unit torus [-1/2, 1/2):
///   1: cosine-perturbed density to uniform (w a nonzero integer),
///   2: triangle of half-width w to triangle of half-width 2w (0 < w < 1/4),
///   3: centered box of half-width w split toward the antipode (0 < w < 1/2).
TestCase build_test_case(int id, double param);

/// Solve T_t(y) = y + t sin(2 pi w y) / (4 pi w) = x for y, returning the
/// preimage nearest to x. Newton with a bisection fallback.
double invert_transport_map(double t, double x, int w);

}  // namespace dualot

#endif  // DUALOT_MEASURES_HPP
