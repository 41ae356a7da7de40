// Independent dense reference constructions used by the unit and acceptance
// tests. Everything here is built from the stencil definitions directly,
// without calling the library operators.
#ifndef DUALOT_TESTS_ORACLES_HPP
#define DUALOT_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline int wrap_index(int j, int n) { return ((j % n) + n) % n; }

/// 1-D periodic shift: (S v)_j = v_{j + off}.
inline Mat shift(int n, int off) {
  Mat s = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) s(j, wrap_index(j + off, n)) = 1;
  return s;
}

inline Mat forward(int n) { return shift(n, 1) - Mat::Identity(n, n); }
inline Mat backward(int n) { return Mat::Identity(n, n) - shift(n, -1); }
inline Mat centered(int n, double dx) { return (shift(n, 1) - shift(n, -1)) / (2 * dx); }
inline Mat laplacian(int n, double dx) {
  return (shift(n, 1) + shift(n, -1) - 2 * Mat::Identity(n, n)) / (dx * dx);
}

/// Dense A for d = 1: rows [t block (n_t n_x); x block (n_t n_x); r block (n_x)],
/// columns Q_D time-major.
inline Mat constraint_matrix(int n_t, int n_x, double dt, double dx, double eps) {
  const int s = n_x;
  Mat a = Mat::Zero(2 * n_t * s + s, (n_t + 1) * s);
  const Mat id = Mat::Identity(s, s);
  for (int i = 0; i < n_t; ++i) {
    a.block(i * s, (i + 1) * s, s, s) += id / dt;
    a.block(i * s, i * s, s, s) += -id / dt - eps * laplacian(s, dx);
    a.block(n_t * s + i * s, i * s, s, s) = centered(s, dx);
  }
  a.block(2 * n_t * s, 0, s, s) = forward(s) / dx;
  return a;
}

/// Scalar bisection for a decreasing function on [lo, hi].
inline double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi, double tol) {
  while (f(hi) > 0) hi *= 2;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Least-squares slope of log(e) against log(h).
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& e) {
  const int n = int(h.size());
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += std::log(h[i]);
    my += std::log(e[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < n; ++i) {
    sxy += (std::log(h[i]) - mx) * (std::log(e[i]) - my);
    sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle

#endif  // DUALOT_TESTS_ORACLES_HPP
