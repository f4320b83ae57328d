#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "ldamix/counts.hpp"

namespace ldamix {

// Geometry of the posterior's exponential rate function.
//
// Normalized coordinates (a,b,c,d) = k/m live in the box
//   [0, 3/10] x [0, 7/10] x [0, 3/5] x [0, 2/5]
// fixed by the benchmark corpus.  The rate function g below is the exact
// m->infinity limit of (1/m) log pi_L along k = (am,bm,cm,dm); its ridge is a
// two-parameter surface on which g is constant and critical, with a rank-2
// negative-definite Hessian transversal to it.

inline constexpr double kBoxA = 3.0 / 10.0;
inline constexpr double kBoxB = 7.0 / 10.0;
inline constexpr double kBoxC = 3.0 / 5.0;
inline constexpr double kBoxD = 2.0 / 5.0;

inline bool in_box(const Norm4& p, double slack = 0.0) {
  return p[0] >= -slack && p[0] <= kBoxA + slack && p[1] >= -slack &&
         p[1] <= kBoxB + slack && p[2] >= -slack && p[2] <= kBoxC + slack &&
         p[3] >= -slack && p[3] <= kBoxD + slack;
}

// Binary entropy H(x) = -x ln x - (1-x) ln(1-x) = ln h(x), extended by its
// continuity limits H(0) = H(1) = 0.
template <typename Scalar>
Scalar ln_h(Scalar x) {
  if (x <= Scalar(0) || x >= Scalar(1)) return Scalar(0);
  using std::log;
  using std::log1p;
  return -x * log(x) - (Scalar(1) - x) * log1p(-x);
}

// h(x) = (x^x (1-x)^{1-x})^{-1} = exp(H(x)); maximum 2 at x = 1/2.
inline double h_entropy(double x) {
  if (x < 0.0 || x > 1.0)
    throw std::invalid_argument("h_entropy: x must lie in [0,1]");
  return std::exp(ln_h(x));
}

// The rate function: writing s for (a+b+c+d)/2,
//   g = 2 H(s) + (3/10) H(10a/3) + (7/10) H(10b/7)
//             + (3/5) H(5c/3)  + (2/5) H(5d/2)
//     - (9/10) H(10(a+c)/9) - (11/10) H(10(b+d)/11) - H(a+b) - H(c+d).
// Each coefficient/argument pair is n/m and k/n of one binomial in the
// lumped density, so (1/m) log pi_L -> g with an O(log(m)/m) defect.
template <typename Scalar>
Scalar g_eval(Scalar a, Scalar b, Scalar c, Scalar d) {
  const Scalar s = (a + b + c + d) / Scalar(2);
  return Scalar(2) * ln_h(s) + Scalar(0.3) * ln_h(a / Scalar(0.3)) +
         Scalar(0.7) * ln_h(b / Scalar(0.7)) +
         Scalar(0.6) * ln_h(c / Scalar(0.6)) +
         Scalar(0.4) * ln_h(d / Scalar(0.4)) -
         Scalar(0.9) * ln_h((a + c) / Scalar(0.9)) -
         Scalar(1.1) * ln_h((b + d) / Scalar(1.1)) - ln_h(a + b) -
         ln_h(c + d);
}

inline double g_value(const Norm4& p) {
  if (!in_box(p))
    throw std::invalid_argument("g_value: point outside the coordinate box");
  return g_eval(p[0], p[1], p[2], p[3]);
}

// Analytic gradient.  Each component is d/dx of the entropy terms touching
// that coordinate; with H'(x) = ln((1-x)/x) every component collapses to a
// single log of a product ratio.  On the ridge the ratio is exactly 1, so
// evaluating one log (instead of a sum of eight) preserves the cancellation
// to machine precision.
inline Eigen::Vector4d g_gradient(const Norm4& p) {
  const double a = p[0], b = p[1], c = p[2], d = p[3];
  const double s = (a + b + c + d) / 2.0;
  const double fa = a / kBoxA, fb = b / kBoxB, fc = c / kBoxC, fd = d / kBoxD;
  const double w1 = (a + c) / 0.9, w2 = (b + d) / 1.1;
  const double r1 = a + b, r2 = c + d;
  const double interior_guard[] = {s, fa, fb, fc, fd, w1, w2, r1, r2};
  for (double x : interior_guard)
    if (!(x > 0.0 && x < 1.0))
      throw std::invalid_argument("g_gradient: point not interior");

  auto comp = [&](double cell, double col, double rowf) {
    return std::log(((1.0 - s) * (1.0 - cell) * col * rowf) /
                    (s * cell * (1.0 - col) * (1.0 - rowf)));
  };
  Eigen::Vector4d grad;
  grad[0] = comp(fa, w1, r1);
  grad[1] = comp(fb, w2, r1);
  grad[2] = comp(fc, w1, r2);
  grad[3] = comp(fd, w2, r2);
  return grad;
}

// Ridge surface parametrization k(u,v), u in (0, 3/10), v in (3/5, 1):
//   k1 = u(v - 3/10)/(v - u),   k2 = (1-u)(v - 3/10)/(v - u),
//   k3 = u(v - 3/5)/(v - u),    k4 = (1-u)(v - 3/5)/(v - u).
struct SurfaceParam {
  double u;
  double v;
};

inline bool surface_param_in_box(const SurfaceParam& s) {
  return s.u > 0.0 && s.u < kBoxA && s.v > kBoxC && s.v < 1.0;
}

inline Norm4 surface_point(const SurfaceParam& s) {
  if (s.v <= s.u) throw std::invalid_argument("surface_point: need v > u");
  if (!surface_param_in_box(s))
    throw std::invalid_argument("surface_point: (u,v) outside the open box");
  const double den = s.v - s.u;
  return Norm4(s.u * (s.v - 0.3) / den, (1.0 - s.u) * (s.v - 0.3) / den,
               s.u * (s.v - 0.6) / den, (1.0 - s.u) * (s.v - 0.6) / den);
}

// b(a,d) and c(a,d) branches of the ridge surface over the closed box
// [0,3/10] x [0,2/5], with
//   r(a,d) = 16a^2 + a(24 - 144 d) + 9(d+1)^2  (positive on the box).
// The limits are finite on the boundary: b(0,d) = (1+d)/2, c(0,d) = 0,
// c(a,0) = 0, b(a,0) = (4a+3)/6.
inline void ridge_bc(double a, double d, double& b, double& c) {
  const double r = 16.0 * a * a + a * (24.0 - 144.0 * d) +
                   9.0 * (d + 1.0) * (d + 1.0);
  if (r <= 0.0) throw std::invalid_argument("ridge_bc: negative discriminant");
  const double sq = std::sqrt(r);
  const double den = -176.0 * a + 162.0 * d - 6.0 + 26.0 * sq;
  if (std::abs(den) < 1e-14)
    throw std::invalid_argument("ridge_bc: vanishing denominator");
  b = (-10.0 * a + 3.0 * d + 3.0 + sq) * (4.0 * a + 17.0 * d + 3.0 + sq) / den;
  c = (sq - 4.0 * a + 9.0 * d - 3.0) * (16.0 * a + 3.0 * d + 3.0 - sq) / den;
}

// The same surface as a graph over its (a,d) coordinates.  Round-trips with
// surface_point: surface_point_ad(k1, k4) recovers (k1,k2,k3,k4).
inline Norm4 surface_point_ad(double a, double d) {
  if (!(a > 0.0 && a < kBoxA && d > 0.0 && d < kBoxD))
    throw std::invalid_argument("surface_point_ad: (a,d) outside open box");
  double b = 0, c = 0;
  ridge_bc(a, d, b, c);
  return Norm4(a, b, c, d);
}

// 4x4 symmetric finite-difference Hessian of g in the (a,b,c,d) coordinates,
// central differences with the given step.
inline Eigen::Matrix4d hessian_fd(const Norm4& p, double step = 1e-4) {
  auto gp = [&](double da, double db, double dc, double dd) {
    return g_eval(p[0] + da, p[1] + db, p[2] + dc, p[3] + dd);
  };
  Eigen::Matrix4d hess;
  const double g0 = gp(0, 0, 0, 0);
  const double h2 = step * step;
  for (int i = 0; i < 4; ++i) {
    Norm4 e = Norm4::Zero();
    e[i] = step;
    hess(i, i) =
        (g_eval(p[0] + e[0], p[1] + e[1], p[2] + e[2], p[3] + e[3]) - 2 * g0 +
         g_eval(p[0] - e[0], p[1] - e[1], p[2] - e[2], p[3] - e[3])) /
        h2;
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      Norm4 ei = Norm4::Zero(), ej = Norm4::Zero();
      ei[i] = step;
      ej[j] = step;
      auto at = [&](double si, double sj) {
        Norm4 q = p + si * ei + sj * ej;
        return g_eval(q[0], q[1], q[2], q[3]);
      };
      hess(i, j) = hess(j, i) =
          (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h2);
    }
  }
  return hess;
}

// Eigen-structure of the Hessian at a ridge point: two transversal negative
// eigenvalues (lambda1 <= lambda2 < 0) and two near-zero residuals along the
// tangent plane.
struct HessianResult {
  double lambda1 = 0;
  double lambda2 = 0;
  Eigen::Vector2d zero_residuals = Eigen::Vector2d::Zero();
};

inline HessianResult hessian_eigen_fd(const SurfaceParam& s,
                                      double step = 1e-4) {
  const Norm4 p = surface_point(s);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(hessian_fd(p, step));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hessian_eigen_fd: eigensolver failed");
  const Eigen::Vector4d ev = es.eigenvalues();  // ascending
  HessianResult r;
  r.lambda1 = ev[0];
  r.lambda2 = ev[1];
  r.zero_residuals = Eigen::Vector2d(ev[2], ev[3]);
  return r;
}

// Stirling-defect factor s(x) = sqrt((x + 1/m)(1 - x + 1/m)); the composite
// ratio of these factors is what separates log pi_L from m*g(k/m) at finite m.
inline double s_smooth(double x, int m) {
  const double e = 1.0 / double(m);
  return std::sqrt((x + e) * (1.0 - x + e));
}

}  // namespace ldamix
