#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldamix/compensated.hpp"
#include "ldamix/landscape.hpp"

namespace ldamix {

// Closed-form curvature certificates for the ridge surface.
//
// The transversal Hessian spectrum of g at k(u,v) has the closed form
//   lambda_{1,2}(u,v) = (alpha0(u,v) -+ sqrt(beta0(u,v))) / delta(u,v)
// where alpha0 = (25/2)(v-u)^2 P(u,v) and beta0 = (25/2)^2 (v-u)^4 Q(u,v)
// for the integer-coefficient symmetric polynomials P, Q tabulated below.
// Two candidate denominators are exposed:
//   - delta_sextic: a 6-factor form that fails validation against the
//     finite-difference oracle by a position-dependent factor, and
//   - delta_dectic: the product of matching quintics in u and v, which the
//     oracle validates to ~1e-9 relative.
// Both are kept so the comparison tests can measure and report the mismatch
// instead of silently patching it; all closed-form eigenvalues returned by
// this module use the validated dectic denominator.

struct PolyTerm {
  int pu;       // power of u
  int pv;       // power of v
  double coef;  // integer-valued, exactly representable
};

// P(u,v): symmetric, degree (4,4); P(0,1) = 0, P(0,0) = -729.
inline constexpr PolyTerm kRidgeCurvP[] = {
    {4, 4, 80000},
    {4, 3, -152000}, {3, 4, -152000},
    {4, 2, 90000},   {3, 3, 252400},  {2, 4, 90000},
    {4, 1, -18000},  {3, 2, -122220}, {2, 3, -122220}, {1, 4, -18000},
    {3, 1, 12420},   {2, 2, 27738},   {1, 3, 12420},
    {3, 0, 3240},    {2, 1, 16182},   {1, 2, 16182},   {0, 3, 3240},
    {2, 0, -6156},   {1, 1, -15633},  {0, 2, -6156},
    {1, 0, 3645},    {0, 1, 3645},
    {0, 0, -729},
};

// Q(u,v): symmetric, degree (8,8); Q(0,0) = 531441 = 729^2.  The (8,1),
// (8,0), (7,0) coefficients (and transposes) are zero and omitted.
inline constexpr PolyTerm kRidgeCurvQ[] = {
    {8, 8, 6400000000},
    {8, 7, -24320000000},  {7, 8, -24320000000},
    {8, 6, 37504000000},   {7, 7, 93568000000},   {6, 8, 37504000000},
    {8, 5, -30240000000},  {7, 6, -146374400000}, {6, 7, -146374400000},
    {5, 8, -30240000000},
    {8, 4, 13572000000},   {7, 5, 120018240000},  {6, 6, 233005760000},
    {5, 7, 120018240000},  {4, 8, 13572000000},
    {8, 3, -3240000000},   {7, 4, -54971856000},  {6, 5, -195046704000},
    {5, 6, -195046704000}, {4, 7, -54971856000},  {3, 8, -3240000000},
    {8, 2, 324000000},     {7, 3, 13500432000},   {6, 4, 91833066000},
    {5, 5, 167842288800},  {4, 6, 91833066000},   {3, 7, 13500432000},
    {2, 8, 324000000},
    {7, 2, -1432080000},   {6, 3, -23668200000},  {5, 4, -82693612080},
    {4, 5, -82693612080},  {3, 6, -23668200000},  {2, 7, -1432080000},
    {7, 1, 11664000},      {6, 2, 2901646800},    {5, 3, 23482334160},
    {4, 4, 44511382260},   {3, 5, 23482334160},   {2, 6, 2901646800},
    {1, 7, 11664000},
    {6, 1, -127720800},    {5, 2, -3799373040},   {4, 3, -15209217720},
    {3, 4, -15209217720},  {2, 5, -3799373040},   {1, 6, -127720800},
    {6, 0, 10497600},      {5, 1, 408414960},     {4, 2, 3551084388},
    {3, 3, 6965123256},    {2, 4, 3551084388},    {1, 5, 408414960},
    {0, 6, 10497600},
    {5, 0, -39890880},     {4, 1, -606551328},    {3, 2, -2281385088},
    {2, 3, -2281385088},   {1, 4, -606551328},    {0, 5, -39890880},
    {4, 0, 61515936},      {3, 1, 485146584},     {2, 2, 933840981},
    {1, 3, 485146584},     {0, 4, 61515936},
    {3, 0, -49601160},     {2, 1, -218074518},    {1, 2, -218074518},
    {0, 3, -49601160},
    {2, 0, 22261473},      {1, 1, 52435512},      {0, 2, 22261473},
    {1, 0, -5314410},      {0, 1, -5314410},
    {0, 0, 531441},
};

template <typename Scalar>
Scalar ipow(Scalar x, int n) {
  Scalar r(1);
  while (n > 0) {
    if (n & 1) r *= x;
    x *= x;
    n >>= 1;
  }
  return r;
}

// Compensated evaluation: coefficients reach ~2.3e11 while the polynomial
// values vanish at the domain corners, so a naive sum loses ~11 digits there.
template <typename Scalar>
Scalar poly_eval(const PolyTerm* terms, std::size_t n, Scalar u, Scalar v) {
  CompensatedSum<Scalar> acc;
  for (std::size_t t = 0; t < n; ++t)
    acc.add(Scalar(terms[t].coef) * ipow(u, terms[t].pu) *
            ipow(v, terms[t].pv));
  return acc.value();
}

template <typename Scalar>
Scalar ridge_poly_p(Scalar u, Scalar v) {
  return poly_eval(kRidgeCurvP, std::size(kRidgeCurvP), u, v);
}

template <typename Scalar>
Scalar ridge_poly_q(Scalar u, Scalar v) {
  return poly_eval(kRidgeCurvQ, std::size(kRidgeCurvQ), u, v);
}

template <typename Scalar>
Scalar alpha0_cert(Scalar u, Scalar v) {
  const Scalar d = v - u;
  return Scalar(12.5) * d * d * ridge_poly_p(u, v);
}

template <typename Scalar>
Scalar beta0_cert(Scalar u, Scalar v) {
  const Scalar d = v - u;
  return Scalar(156.25) * d * d * d * d * ridge_poly_q(u, v);
}

// Normalized forms with the (v-u) powers divided out:
//   alpha = -1e-6 alpha0 / (v-u)^2,   beta = 1e-12 beta0 / (v-u)^4.
// The scales are applied as divisions by exactly representable integers
// (12.5e-6 = 1/80000, 156.25e-12 = 1/6.4e9) so they round at Scalar
// precision, not at the precision of a decimal double literal.
template <typename Scalar>
Scalar alpha_normalized(Scalar u, Scalar v) {
  return -ridge_poly_p(u, v) / Scalar(80000);
}

template <typename Scalar>
Scalar beta_normalized(Scalar u, Scalar v) {
  return ridge_poly_q(u, v) / Scalar(6.4e9);
}

// 6-factor candidate denominator (fails the oracle; kept for the report).
inline double delta_sextic(double u, double v) {
  return u * (0.3 - u) * (0.45 - u) * (v - 0.45) * (v - 0.6) * (1.0 - v);
}

// Quintic with roots {0, 3/10, 9/20, 3/5, 1}; the validated denominator is
// the product form below, positive on the open parameter box.
inline double quintic_psi(double x) {
  return x * (0.3 - x) * (0.45 - x) * (0.6 - x) * (1.0 - x);
}

inline double delta_dectic(double u, double v) {
  return -1e6 * quintic_psi(u) * quintic_psi(v);
}

// Whether all entropy arguments entering g stay at least `delta` away from
// their singular endpoints {0,1} at p.  Near a violated bound the fourth and
// sixth derivatives of g blow up like inverse powers of the distance, so
// finite-difference Hessians are only trustworthy on points passing this
// test; a margin in (u,v) alone does not imply it near the corners of the
// parameter box.
inline bool surface_fd_safe(const Norm4& p, double delta = 0.02) {
  const double a = p[0], b = p[1], c = p[2], d = p[3];
  const double args[9] = {(a + b + c + d) / 2, a / kBoxA, b / kBoxB,
                          c / kBoxC,           d / kBoxD, (a + c) / 0.9,
                          (b + d) / 1.1,       a + b,     c + d};
  for (double x : args)
    if (!(x >= delta && x <= 1.0 - delta)) return false;
  return true;
}

struct ClosedFormEigen {
  double lambda1 = 0;  // (alpha0 - sqrt(beta0)) / delta_dectic
  double lambda2 = 0;  // (alpha0 + sqrt(beta0)) / delta_dectic
  double lambda1_sextic = 0;  // same numerators over delta_sextic
  double lambda2_sextic = 0;
  double beta0 = 0;
};

ClosedFormEigen closed_form_eigen(double u, double v);

// Exact Hessian of g as a sum of nine rank-one terms c * H(L.p) * L L^T with
// H(x) = -1/(x(1-x)); each (c, L) pair is one entropy term of g.
Eigen::Matrix4d hessian_analytic(const Norm4& p);

// Richardson-extrapolated central-difference Hessian, (4 H_h - H_{2h})/3
// with finest step h: kills the O(h^2) term, needed for the <1e-5
// zero-eigenvalue residuals that a single-step stencil cannot reach.
Eigen::Matrix4d hessian_fd_richardson(const Norm4& p, double step = 1e-4);

enum class HessianMethod { kFiniteDifference, kClosedForm, kAnalytic };

// Eigenvalues of the Hessian at k(u,v) by the requested method.  The
// parameter must sit at least `margin` inside the open box (the closed form
// has a removable 0/0 at the boundary).  Closed-form mode throws
// std::domain_error naming (u,v) if beta0 < 0 there.
HessianResult hessian_eigen(const SurfaceParam& s, HessianMethod method,
                            double margin = 1e-3);

// ------------------------------------------------------------------------
// Positivity witness for the small-magnitude curvature family on the unit
// square: gamma(w,z) = scale * alpha(3w/10, 1 - 2z/5), with the scale fixed
// by matching the corner partial derivatives 9625/384 and 1625/64; it
// equals (25/3)^4.
inline constexpr double kGammaScale = 390625.0 / 81.0;

template <typename Scalar>
Scalar gamma_witness(Scalar w, Scalar z) {
  return Scalar(390625) / Scalar(81) *
         alpha_normalized(Scalar(3) * w / Scalar(10),
                          Scalar(1) - Scalar(2) * z / Scalar(5));
}

// Factorization of xi = alpha^2 - beta over the unit square:
//   xi(w,z) = kXiLead * w(1-w)(3-2w)(2-w)(10-3w)
//                     * z(1-z)(11-8z)(7-4z)(5-2z) * h_factor(w,z).
inline constexpr double kXiLead = 729.0 / 1.25e15;

// xi = alpha^2 - beta = (P^2 - Q) / 6.4e9.  P^2 and Q agree to several
// digits near the zero set, so the subtraction is done on the raw integer
// polynomials and the exact scale divided out once; folding the scales into
// alpha and beta first would inject two independent rounding errors that the
// cancellation then amplifies past 1e-12.
template <typename Scalar>
Scalar xi_direct(Scalar w, Scalar z) {
  const Scalar u = Scalar(3) * w / Scalar(10);
  const Scalar v = Scalar(1) - Scalar(2) * z / Scalar(5);
  const Scalar p = ridge_poly_p(u, v);
  const Scalar q = ridge_poly_q(u, v);
  return (p * p - q) / Scalar(6.4e9);
}

template <typename Scalar>
Scalar h_factor(Scalar w, Scalar z) {
  CompensatedSum<Scalar> acc;
  acc.add(Scalar(1744) * w * w * z * z);
  acc.add(Scalar(-4760) * w * w * z);
  acc.add(Scalar(-5280) * w * z * z);
  acc.add(Scalar(3475) * w * w);
  acc.add(Scalar(13800) * w * z);
  acc.add(Scalar(4400) * z * z);
  acc.add(Scalar(-9750) * w);
  acc.add(Scalar(-11000) * z);
  acc.add(Scalar(8125));
  return acc.value();
}

template <typename Scalar>
Scalar xi_product(Scalar w, Scalar z) {
  const Scalar fw = w * (Scalar(1) - w) * (Scalar(3) - Scalar(2) * w) *
                    (Scalar(2) - w) * (Scalar(10) - Scalar(3) * w);
  const Scalar fz = z * (Scalar(1) - z) * (Scalar(11) - Scalar(8) * z) *
                    (Scalar(7) - Scalar(4) * z) * (Scalar(5) - Scalar(2) * z);
  return Scalar(729) / Scalar(1.25e15) * fw * fz * h_factor(w, z);
}

// Critical line of h_factor in w: h'_w = 0 at w = r_crit(z); the numerator,
// denominator, and their difference all have negative discriminants, so
// r_crit > 1 on [0,1] and h_factor is minimized over the square at w = 1.
inline double r_crit(double z) {
  return (2640.0 * z * z - 6900.0 * z + 4875.0) /
         (1744.0 * z * z - 4760.0 * z + 3475.0);
}

struct CheckItem {
  std::string name;
  bool pass = false;
  double observed = 0;   // the measured extremum / residual
  double threshold = 0;  // what it was compared against
  std::string detail;    // offending point or note
};

struct CertificateReport {
  std::vector<CheckItem> items;
  bool all_pass() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
};

// Numeric validation of the certificate transcription:
//  1. gamma(0,0) = gamma(1,1) = 0 and gamma >= 0.038 on a mesh_n x mesh_n
//     mesh outside the corner squares [0,1/20]^2 and [19/20,1]^2;
//  2. one-sided FD partials of gamma at (0,0) match 9625/384 and 1625/64
//     to 1e-6 relative;
//  3. xi_direct == xi_product to 1e-12 relative at `xi_points` random points;
//  4. h_factor(1,z) == 864 z^2 - 1960 z + 1850 as an exact integer
//     coefficient identity;
//  5. h_factor > 0 on the unit square (convex in w with the critical line
//     outside, so the edge minima are certified);
//  6. the r_crit numerator, denominator, and difference quadratics have
//     negative discriminants (exact integer arithmetic).
CertificateReport certificate_checks(int mesh_n = 2000, int xi_points = 10000,
                                     std::uint64_t seed = 20260816);

}  // namespace ldamix
