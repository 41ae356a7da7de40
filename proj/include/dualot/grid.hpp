// Periodic space-time grid and the finite-difference operators acting on it.
//
// Fields are stored time-major: all spatial values of one time slice are
// contiguous, and the spatial multi-index (j_1, ..., j_d) is flattened with
// j_1 varying fastest.
#ifndef DUALOT_GRID_HPP
#define DUALOT_GRID_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualot {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Which part of the discrete domain a field lives on.
enum class Domain {
  kSpace,          ///< Omega_D: one spatial slice, no time axis.
  kSpaceTime,      ///< Q_D: time indices 0..N_T.
  kSpaceTimeOpen,  ///< Q'_D: time indices 0..N_T-1.
};

inline const char* to_string(Domain domain) {
  switch (domain) {
    case Domain::kSpace: return "Omega_D";
    case Domain::kSpaceTime: return "Q_D";
    case Domain::kSpaceTimeOpen: return "Q'_D";
  }
  return "?";
}

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Discretization of [0,1] x (R^d / D Z^d) with N_T time steps and N_X points
/// per spatial axis.
///
/// The viscosity is chosen as the smallest value admissible for monotonicity
/// on a ball B_r, given lip_h = Lip(H, B_r):
///   Lip(H, B_r) / 2 <= eps / dx <= dx / (2 d dt).
/// Construction throws GridError when this interval is empty.
template <typename Scalar = double>
struct GridSpec {
  int d = 1;
  Scalar period = 1;
  int n_t = 16;
  int n_x = 16;
  Scalar dt = Scalar(1) / 16;
  Scalar dx = Scalar(1) / 16;
  Scalar zeta = 1;
  Scalar h = Scalar(1) / 16;
  Scalar eps = 0;
  Scalar clamp = Scalar(0.5);
  Scalar diam = Scalar(0.5);

  /// `lip_h` is Lip(H, B_r) at the radius the scheme must be monotone on.
  static GridSpec make(int d, Scalar period, int n_t, int n_x, Scalar clamp,
                       Scalar lip_h) {
    GridSpec g = uniform(d, period, n_t, n_x, clamp);
    const Scalar lower = lip_h / 2;
    const Scalar upper = g.dx / (2 * d * g.dt);
    if (lower > upper) {
      throw GridError("no monotone viscosity: Lip(H)/2 = " +
                      std::to_string(double(lower)) + " exceeds dx/(2 d dt) = " +
                      std::to_string(double(upper)) + "; decrease zeta");
    }
    g.eps = lower * g.dx;
    return g;
  }

  /// Grid with an explicit viscosity and no monotonicity check. Used to probe
  /// the scheme outside its admissible range.
  static GridSpec with_viscosity(int d, Scalar period, int n_t, int n_x,
                                 Scalar clamp, Scalar eps) {
    GridSpec g = uniform(d, period, n_t, n_x, clamp);
    g.eps = eps;
    return g;
  }

  Index spatial_size() const {
    Index s = 1;
    for (int k = 0; k < d; ++k) s *= n_x;
    return s;
  }
  Index slices(Domain domain) const {
    switch (domain) {
      case Domain::kSpace: return 1;
      case Domain::kSpaceTime: return n_t + 1;
      case Domain::kSpaceTimeOpen: return n_t;
    }
    return 0;
  }
  Index size(Domain domain) const { return slices(domain) * spatial_size(); }

  /// Flat-index stride of spatial axis k (0-based).
  Index stride(int k) const {
    Index s = 1;
    for (int a = 0; a < k; ++a) s *= n_x;
    return s;
  }

  /// Multi-index of a flat spatial index.
  std::vector<int> unflatten(Index j) const {
    std::vector<int> idx(d);
    for (int k = 0; k < d; ++k) {
      idx[k] = int(j % n_x);
      j /= n_x;
    }
    return idx;
  }

  Index flatten(const std::vector<int>& idx) const {
    Index j = 0;
    for (int k = d - 1; k >= 0; --k) {
      int m = idx[k] % n_x;
      if (m < 0) m += n_x;
      j = j * n_x + m;
    }
    return j;
  }

  /// Coordinate of grid point j along axis k, wrapped to [-D/2, D/2).
  Scalar coordinate(Index j, int k) const {
    const int jk = int((j / stride(k)) % n_x);
    Scalar x = jk * dx;
    if (x >= period / 2) x -= period;
    return x;
  }

  Scalar time(Index i) const { return Scalar(i) * dt; }

  /// Grids are compatible when they define the same discrete domain.
  bool same_domain(const GridSpec& o) const {
    return d == o.d && n_t == o.n_t && n_x == o.n_x && period == o.period;
  }

 private:
  static GridSpec uniform(int d, Scalar period, int n_t, int n_x, Scalar clamp) {
    if (d < 1 || d > 3) throw GridError("dimension must be 1, 2 or 3");
    if (n_t < 1 || n_x < 2) throw GridError("need N_T >= 1 and N_X >= 2");
    if (!(period > 0)) throw GridError("period must be positive");
    if (!(clamp > 0)) throw GridError("clamp level R must be positive");
    GridSpec g;
    g.d = d;
    g.period = period;
    g.n_t = n_t;
    g.n_x = n_x;
    g.dt = Scalar(1) / n_t;
    g.dx = period / n_x;
    g.zeta = g.dt / g.dx;
    g.h = g.dt;
    g.clamp = clamp;
    g.diam = period * std::sqrt(Scalar(d)) / 2;
    return g;
  }
};

/// Real values on one of the discrete domains, time-major.
template <typename Scalar = double>
struct ScalarField {
  Domain domain = Domain::kSpace;
  Index spatial = 0;
  VectorX<Scalar> values;

  ScalarField() = default;
  ScalarField(const GridSpec<Scalar>& g, Domain dom)
      : domain(dom), spatial(g.spatial_size()),
        values(VectorX<Scalar>::Zero(g.size(dom))) {}
  ScalarField(const GridSpec<Scalar>& g, Domain dom, VectorX<Scalar> v)
      : domain(dom), spatial(g.spatial_size()), values(std::move(v)) {
    if (values.size() != g.size(dom)) throw GridError("field size does not match domain");
  }

  Index slices() const { return spatial == 0 ? 0 : values.size() / spatial; }
  auto slice(Index i) { return values.segment(i * spatial, spatial); }
  auto slice(Index i) const { return values.segment(i * spatial, spatial); }
};

/// d-component field; component k of slice i occupies a contiguous block.
template <typename Scalar = double>
struct VectorField {
  Domain domain = Domain::kSpace;
  int d = 1;
  Index spatial = 0;
  VectorX<Scalar> values;

  VectorField() = default;
  VectorField(const GridSpec<Scalar>& g, Domain dom)
      : domain(dom), d(g.d), spatial(g.spatial_size()),
        values(VectorX<Scalar>::Zero(g.size(dom) * g.d)) {}

  Index slices() const { return values.size() / (spatial * d); }
  auto component(Index i, int k) { return values.segment((i * d + k) * spatial, spatial); }
  auto component(Index i, int k) const { return values.segment((i * d + k) * spatial, spatial); }
};

namespace detail {

inline void check_axis(int d, int k) {
  if (k < 0 || k >= d) {
    throw GridError("axis " + std::to_string(k) + " out of range for d = " + std::to_string(d));
  }
}

/// Index of the periodic neighbour j + offset * e_k.
template <typename Scalar>
Index neighbour(const GridSpec<Scalar>& g, Index j, int k, int offset) {
  const Index s = g.stride(k);
  const Index jk = (j / s) % g.n_x;
  Index m = (jk + offset) % g.n_x;
  if (m < 0) m += g.n_x;
  return j + (m - jk) * s;
}

}  // namespace detail

// Slice-level operators. Each takes one spatial slice (size N_X^d) and writes a
// fresh vector; summation order is fixed so results are reproducible.

/// psi(j + e_k) - psi(j)
template <typename Scalar, typename Derived>
VectorX<Scalar> forward_diff(const GridSpec<Scalar>& g, const Eigen::MatrixBase<Derived>& psi, int k) {
  detail::check_axis(g.d, k);
  VectorX<Scalar> out(psi.size());
  for (Index j = 0; j < psi.size(); ++j) out[j] = psi[detail::neighbour(g, j, k, 1)] - psi[j];
  return out;
}

/// psi(j) - psi(j - e_k)
template <typename Scalar, typename Derived>
VectorX<Scalar> backward_diff(const GridSpec<Scalar>& g, const Eigen::MatrixBase<Derived>& psi, int k) {
  detail::check_axis(g.d, k);
  VectorX<Scalar> out(psi.size());
  for (Index j = 0; j < psi.size(); ++j) out[j] = psi[j] - psi[detail::neighbour(g, j, k, -1)];
  return out;
}

/// Component k of the centered gradient (backward + forward) / (2 dx).
template <typename Scalar, typename Derived>
VectorX<Scalar> centered_diff(const GridSpec<Scalar>& g, const Eigen::MatrixBase<Derived>& psi, int k) {
  return (backward_diff(g, psi, k) + forward_diff(g, psi, k)) / (2 * g.dx);
}

template <typename Scalar, typename Derived>
VectorX<Scalar> discrete_laplacian(const GridSpec<Scalar>& g, const Eigen::MatrixBase<Derived>& psi) {
  VectorX<Scalar> out = VectorX<Scalar>::Zero(psi.size());
  for (int k = 0; k < g.d; ++k) out += (forward_diff(g, psi, k) - backward_diff(g, psi, k)) / (g.dx * g.dx);
  return out;
}

// Field-level operators on Omega_D.

template <typename Scalar>
ScalarField<Scalar> forward_diff(const GridSpec<Scalar>& g, const ScalarField<Scalar>& psi, int k) {
  return ScalarField<Scalar>(g, psi.domain, forward_diff(g, psi.values, k));
}

template <typename Scalar>
ScalarField<Scalar> backward_diff(const GridSpec<Scalar>& g, const ScalarField<Scalar>& psi, int k) {
  return ScalarField<Scalar>(g, psi.domain, backward_diff(g, psi.values, k));
}

template <typename Scalar>
VectorField<Scalar> centered_gradient(const GridSpec<Scalar>& g, const ScalarField<Scalar>& psi) {
  VectorField<Scalar> out(g, psi.domain);
  for (Index i = 0; i < psi.slices(); ++i)
    for (int k = 0; k < g.d; ++k) out.component(i, k) = centered_diff(g, psi.slice(i), k);
  return out;
}

template <typename Scalar>
ScalarField<Scalar> discrete_laplacian(const GridSpec<Scalar>& g, const ScalarField<Scalar>& psi) {
  ScalarField<Scalar> out(g, psi.domain);
  for (Index i = 0; i < psi.slices(); ++i) out.slice(i) = discrete_laplacian(g, psi.slice(i));
  return out;
}

/// Forward time difference (Phi^{i+1} - Phi^i) / dt, mapping Q_D to Q'_D.
template <typename Scalar>
ScalarField<Scalar> time_derivative(const GridSpec<Scalar>& g, const ScalarField<Scalar>& phi) {
  if (phi.domain != Domain::kSpaceTime) throw GridError("time_derivative expects a Q_D field");
  ScalarField<Scalar> out(g, Domain::kSpaceTimeOpen);
  for (Index i = 0; i < g.n_t; ++i) out.slice(i) = (phi.slice(i + 1) - phi.slice(i)) / g.dt;
  return out;
}

enum class Operator {
  kCenteredGradient,
  kDiscreteLaplacian,
  kForwardDiffOverDx,
  kTimeDerivative,
};

/// Euclidean adjoint of a vector-valued operator (gradient, forward
/// difference over dx) applied to a vector field. Output is a scalar field on
/// the same domain.
template <typename Scalar>
ScalarField<Scalar> adjoint_apply(const GridSpec<Scalar>& g, Operator op, const VectorField<Scalar>& m) {
  if (m.d != g.d || m.spatial != g.spatial_size()) throw GridError("vector field does not match grid");
  ScalarField<Scalar> out(g, m.domain);
  for (Index i = 0; i < m.slices(); ++i) {
    for (int k = 0; k < g.d; ++k) {
      const auto mk = m.component(i, k);
      switch (op) {
        case Operator::kCenteredGradient:
          // transpose of (S_+ - S_-) / (2 dx) is (S_- - S_+) / (2 dx)
          out.slice(i) -= centered_diff(g, mk, k);
          break;
        case Operator::kForwardDiffOverDx:
          out.slice(i) -= backward_diff(g, mk, k) / g.dx;
          break;
        default:
          throw GridError(std::string("operator is not vector valued; domain ") + to_string(m.domain));
      }
    }
  }
  return out;
}

/// Euclidean adjoint of a scalar-valued operator. The Laplacian is
/// self-adjoint; the adjoint of the time derivative maps Q'_D back to Q_D.
template <typename Scalar>
ScalarField<Scalar> adjoint_apply(const GridSpec<Scalar>& g, Operator op, const ScalarField<Scalar>& f) {
  if (f.spatial != g.spatial_size()) throw GridError("scalar field does not match grid");
  switch (op) {
    case Operator::kDiscreteLaplacian:
      return discrete_laplacian(g, f);
    case Operator::kTimeDerivative: {
      if (f.domain != Domain::kSpaceTimeOpen) {
        throw GridError(std::string("time derivative adjoint expects a Q'_D field, got ") + to_string(f.domain));
      }
      ScalarField<Scalar> out(g, Domain::kSpaceTime);
      for (Index i = 0; i <= g.n_t; ++i) {
        if (i >= 1) out.slice(i) += f.slice(i - 1) / g.dt;
        if (i < g.n_t) out.slice(i) -= f.slice(i) / g.dt;
      }
      return out;
    }
    default:
      throw GridError("operator is vector valued; pass a vector field");
  }
}

/// Euclidean inner product in fixed (ascending) order.
template <typename Scalar, typename A, typename B>
Scalar inner(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  Scalar s = 0;
  for (Index n = 0; n < a.size(); ++n) s += a[n] * b[n];
  return s;
}

}  // namespace dualot

#endif  // DUALOT_GRID_HPP
