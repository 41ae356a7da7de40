// Lagrangian / Hamiltonian pairs and the pointwise projection onto the
// Hamilton-Jacobi constraint set K = {(s, w) : s + H(w) <= 0}.
#ifndef DUALOT_COST_HPP
#define DUALOT_COST_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dualot {

/// Small spatial vector (d <= 3) kept on the stack.
template <typename Scalar>
using Point = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

enum class CostKind { kQuadratic, kPower };

class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Value of rho * L(m / rho), extended lower-semicontinuously to rho = 0.
/// `infinite` marks rho = 0 with m != 0; `value` is then meaningless and
/// must not enter a reduction.
template <typename Scalar>
struct PerspectiveCost {
  Scalar value = 0;
  bool infinite = false;
};

/// Result of projecting (a, b) onto K.
template <typename Scalar>
struct KProjection {
  Scalar s = 0;
  Point<Scalar> w;
  Scalar multiplier = 0;  ///< lambda >= 0 in a - s = lambda, b - w = lambda grad H(w)
  int iterations = 0;
};

/// L(v) = |v|^p / p and its Legendre transform H(w) = |w|^q / q, with the
/// quadratic case p = q = 2 special-cased.
template <typename Scalar = double>
class CostModel {
 public:
  static CostModel quadratic() { return CostModel(CostKind::kQuadratic, 2); }

  static CostModel power(Scalar p) {
    if (!(p > 1) || !std::isfinite(double(p))) {
      throw std::invalid_argument("power cost needs p in (1, inf)");
    }
    if (p == 2) return quadratic();
    return CostModel(CostKind::kPower, p);
  }

  CostKind kind() const { return kind_; }
  Scalar p() const { return p_; }
  Scalar q() const { return q_; }

  std::string name() const {
    return kind_ == CostKind::kQuadratic ? "quadratic" : "power:" + std::to_string(double(p_));
  }

  template <typename V>
  Scalar lagrangian(const Eigen::MatrixBase<V>& v) const {
    if (kind_ == CostKind::kQuadratic) return v.squaredNorm() / 2;
    return std::pow(v.norm(), p_) / p_;
  }

  template <typename W>
  Scalar hamiltonian(const Eigen::MatrixBase<W>& w) const {
    if (kind_ == CostKind::kQuadratic) return w.squaredNorm() / 2;
    return std::pow(w.norm(), q_) / q_;
  }

  template <typename W>
  Point<Scalar> grad_hamiltonian(const Eigen::MatrixBase<W>& w) const {
    if (kind_ == CostKind::kQuadratic) return w;
    return vector_power(w, q_ - 1);
  }

  template <typename V>
  Point<Scalar> grad_lagrangian(const Eigen::MatrixBase<V>& v) const {
    if (kind_ == CostKind::kQuadratic) return v;
    return vector_power(v, p_ - 1);
  }

  /// Maps in the improved Young inequality
  ///   L(v) + H(w) >= v.w + |f_L(v) - f_H(w)|^2.
  template <typename V>
  Point<Scalar> f_lagrangian(const Eigen::MatrixBase<V>& v) const {
    if (kind_ == CostKind::kQuadratic) return v / 2;
    return vector_power(v, p_ / 2) / young_scale();
  }

  template <typename W>
  Point<Scalar> f_hamiltonian(const Eigen::MatrixBase<W>& w) const {
    if (kind_ == CostKind::kQuadratic) return w / 2;
    return vector_power(w, q_ / 2) / young_scale();
  }

  /// Lipschitz constant of L on the centered ball of radius r.
  Scalar lip_lagrangian(Scalar r) const {
    return kind_ == CostKind::kQuadratic ? r : std::pow(r, p_ - 1);
  }

  /// Lipschitz constant of H on the centered ball of radius r.
  Scalar lip_hamiltonian(Scalar r) const {
    return kind_ == CostKind::kQuadratic ? r : std::pow(r, q_ - 1);
  }

  /// rho * L(m / rho) with the convention 0 * L(0 / 0) = 0.
  template <typename M>
  PerspectiveCost<Scalar> perspective(Scalar rho, const Eigen::MatrixBase<M>& m) const {
    if (rho < 0) throw std::domain_error("perspective cost needs rho >= 0");
    if (rho == 0) {
      if (m.squaredNorm() == 0) return {Scalar(0), false};
      return {Scalar(0), true};
    }
    return {rho * lagrangian(m / rho), false};
  }

  /// Euclidean projection of (a, b) onto {s + H(w) <= 0}.
  ///
  /// Quadratic only: the multiplier solves g(l) = a - l + |b|^2 / (2 (1+l)^2) = 0,
  /// found by Newton from l = 0 (g is convex and decreasing on l >= 0, so the
  /// iterates increase monotonically) with a bisection fallback.
  template <typename B>
  KProjection<Scalar> project_onto_k(Scalar a, const Eigen::MatrixBase<B>& b) const {
    if (kind_ != CostKind::kQuadratic) {
      throw ProjectionError("projection onto K is only implemented for the quadratic cost");
    }
    KProjection<Scalar> out;
    const Scalar b2 = b.squaredNorm();
    if (a + b2 / 2 <= 0) {
      out.s = a;
      out.w = b;
      return out;
    }
    auto g = [&](Scalar l) { return a - l + b2 / (2 * (1 + l) * (1 + l)); };
    constexpr int kMaxIterations = 100;
    const Scalar tol = Scalar(1e-12);
    Scalar lambda = 0;
    bool converged = false;
    int it = 0;
    for (; it < kMaxIterations; ++it) {
      const Scalar onep = 1 + lambda;
      const Scalar gv = g(lambda);
      const Scalar dg = -1 - b2 / (onep * onep * onep);
      const Scalar step = gv / dg;
      lambda -= step;
      if (lambda < 0) lambda = 0;
      if (std::abs(step) <= tol * (1 + lambda)) {
        converged = true;
        ++it;
        break;
      }
    }
    if (!converged) {
      Scalar lo = 0;
      Scalar hi = std::max(a + b2 / 2, Scalar(1));
      int widen = 0;
      while (g(hi) > 0) {
        hi *= 2;
        if (++widen > 200) throw ProjectionError("projection onto K: no bracket for multiplier");
      }
      for (int k = 0; k < 400 && hi - lo > tol * (1 + hi); ++k, ++it) {
        const Scalar mid = (lo + hi) / 2;
        (g(mid) > 0 ? lo : hi) = mid;
      }
      if (!(hi - lo <= tol * (1 + hi))) throw ProjectionError("projection onto K did not converge");
      lambda = (lo + hi) / 2;
    }
    out.multiplier = lambda;
    out.w = b / (1 + lambda);
    // land exactly on the boundary of K
    out.s = -hamiltonian(out.w);
    out.iterations = it;
    return out;
  }

 private:
  CostModel(CostKind kind, Scalar p) : kind_(kind), p_(p), q_(p / (p - 1)) {}

  Scalar young_scale() const { return std::sqrt(2 * std::max(p_, q_)); }

  /// v |v|^(a - 1), with 0 mapped to 0.
  template <typename V>
  static Point<Scalar> vector_power(const Eigen::MatrixBase<V>& v, Scalar a) {
    const Scalar n = v.norm();
    if (n == 0) return Point<Scalar>::Zero(v.size());
    return v * std::pow(n, a - 1);
  }

  CostKind kind_;
  Scalar p_;
  Scalar q_;
};

}  // namespace dualot

#endif  // DUALOT_COST_HPP
