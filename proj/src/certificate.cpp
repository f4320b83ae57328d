#include "ldamix/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ldamix/rng.hpp"

namespace ldamix {

namespace {

std::string point_str(double x, double y) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "(%.6g, %.6g)", x, y);
  return buf;
}

}  // namespace

ClosedFormEigen closed_form_eigen(double u, double v) {
  ClosedFormEigen r;
  const double a0 = alpha0_cert(u, v);
  r.beta0 = beta0_cert(u, v);
  if (r.beta0 < 0)
    throw std::domain_error("closed_form_eigen: beta0 < 0 at " +
                            point_str(u, v));
  const double sq = std::sqrt(r.beta0);
  const double dd = delta_dectic(u, v);
  const double ds = delta_sextic(u, v);
  r.lambda1 = (a0 - sq) / dd;
  r.lambda2 = (a0 + sq) / dd;
  r.lambda1_sextic = (a0 - sq) / ds;
  r.lambda2_sextic = (a0 + sq) / ds;
  return r;
}

Eigen::Matrix4d hessian_analytic(const Norm4& p) {
  // One rank-one term per entropy summand of g: coefficient n/m and linear
  // form (k -> k/n scaled) reproduce d^2/dk^2 [ (n/m) H(L.k) ] = c H''(L.k)
  // L L^T with H''(x) = -1/(x(1-x)).
  static const struct {
    double c;
    double L[4];
  } kTerms[] = {
      {2.0, {0.5, 0.5, 0.5, 0.5}},
      {0.3, {10.0 / 3.0, 0, 0, 0}},
      {0.7, {0, 10.0 / 7.0, 0, 0}},
      {0.6, {0, 0, 5.0 / 3.0, 0}},
      {0.4, {0, 0, 0, 2.5}},
      {-0.9, {10.0 / 9.0, 0, 10.0 / 9.0, 0}},
      {-1.1, {0, 10.0 / 11.0, 0, 10.0 / 11.0}},
      {-1.0, {1, 1, 0, 0}},
      {-1.0, {0, 0, 1, 1}},
  };
  Eigen::Matrix4d hess = Eigen::Matrix4d::Zero();
  for (const auto& t : kTerms) {
    const Eigen::Vector4d L(t.L[0], t.L[1], t.L[2], t.L[3]);
    const double x = L.dot(Eigen::Vector4d(p[0], p[1], p[2], p[3]));
    if (x <= 0.0 || x >= 1.0)
      throw std::domain_error("hessian_analytic: entropy argument on [0,1] "
                              "boundary; point not interior");
    hess.noalias() += t.c * (-1.0 / (x * (1.0 - x))) * (L * L.transpose());
  }
  return hess;
}

Eigen::Matrix4d hessian_fd_richardson(const Norm4& p, double step) {
  const Eigen::Matrix4d h1 = hessian_fd(p, step);
  const Eigen::Matrix4d h2 = hessian_fd(p, 2.0 * step);
  return (4.0 * h1 - h2) / 3.0;
}

HessianResult hessian_eigen(const SurfaceParam& s, HessianMethod method,
                            double margin) {
  if (!(s.u >= margin && s.u <= kBoxA - margin && s.v >= kBoxC + margin &&
        s.v <= 1.0 - margin))
    throw std::invalid_argument(
        "hessian_eigen: (u,v) within margin of the box boundary at " +
        point_str(s.u, s.v));
  if (method == HessianMethod::kClosedForm) {
    const ClosedFormEigen cf = closed_form_eigen(s.u, s.v);
    HessianResult r;
    r.lambda1 = cf.lambda1;
    r.lambda2 = cf.lambda2;
    r.zero_residuals.setZero();  // exact zeros by construction
    return r;
  }
  const Norm4 p = surface_point(s);
  const Eigen::Matrix4d hess = method == HessianMethod::kAnalytic
                                   ? hessian_analytic(p)
                                   : hessian_fd_richardson(p);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(hess);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hessian_eigen: eigensolver failed at " +
                             point_str(s.u, s.v));
  const Eigen::Vector4d ev = es.eigenvalues();  // ascending
  HessianResult r;
  r.lambda1 = ev[0];
  r.lambda2 = ev[1];
  r.zero_residuals = Eigen::Vector2d(ev[2], ev[3]);
  return r;
}

namespace {

// All certificate identities are validated in long double with compensated
// accumulation: xi is a difference of two ~1e-9 quantities that agree to
// several digits near the square's edges, so double precision alone cannot
// certify 1e-12 relative agreement there.
using LD = long double;

CheckItem check_gamma_mesh(int mesh_n) {
  CheckItem it;
  it.name = "gamma_mesh_positive";
  it.threshold = 0.038;
  const double g00 = double(gamma_witness<LD>(0.0L, 0.0L));
  const double g11 = double(gamma_witness<LD>(1.0L, 1.0L));
  double best = std::numeric_limits<double>::infinity();
  double bw = 0, bz = 0;
  for (int i = 0; i < mesh_n; ++i) {
    const double w = double(i) / double(mesh_n - 1);
    for (int j = 0; j < mesh_n; ++j) {
      const double z = double(j) / double(mesh_n - 1);
      if ((w <= 0.05 && z <= 0.05) || (w >= 0.95 && z >= 0.95)) continue;
      const double gv = gamma_witness(w, z);
      if (gv < best) {
        best = gv;
        bw = w;
        bz = z;
      }
    }
  }
  it.observed = best;
  it.pass = std::abs(g00) < 1e-12 && std::abs(g11) < 1e-12 &&
            best >= it.threshold;
  it.detail = "corner values " + point_str(g00, g11) + ", mesh min at " +
              point_str(bw, bz);
  return it;
}

CheckItem check_gamma_partials() {
  CheckItem it;
  it.name = "gamma_corner_partials";
  it.threshold = 1e-6;
  // gamma(0,0) = 0 exactly, so a second-order one-sided stencil
  // (4 f(h) - f(2h)) / (2h) suffices.
  const LD h = 1e-6L;
  const LD dw =
      (4.0L * gamma_witness<LD>(h, 0.0L) - gamma_witness<LD>(2.0L * h, 0.0L)) /
      (2.0L * h);
  const LD dz =
      (4.0L * gamma_witness<LD>(0.0L, h) - gamma_witness<LD>(0.0L, 2.0L * h)) /
      (2.0L * h);
  const LD tw = 9625.0L / 384.0L;
  const LD tz = 1625.0L / 64.0L;
  const double rw = double(std::abs(dw / tw - 1.0L));
  const double rz = double(std::abs(dz / tz - 1.0L));
  it.observed = std::max(rw, rz);
  it.pass = it.observed <= it.threshold;
  it.detail = "d/dw rel err " + std::to_string(rw) + ", d/dz rel err " +
              std::to_string(rz);
  return it;
}

CheckItem check_xi_identity(int xi_points, std::uint64_t seed) {
  CheckItem it;
  it.name = "xi_factorization";
  it.threshold = 1e-12;
  CounterRng rng(seed, /*stream=*/71);
  // Quad precision: P^2 - Q cancels ~5 digits against its operands, and near
  // the zero set of xi the polynomial sums lose several more, so 64-bit
  // significands bottom out around 1e-10 relative.  Both sides use only
  // +,-,*,/ so __float128 needs no library support.
  using QF = __float128;
  const auto qabs = [](QF x) { return x < 0 ? -x : x; };
  double worst = 0;
  double ww = 0, wz = 0;
  for (int i = 0; i < xi_points; ++i) {
    const QF w = QF(rng.next_double());
    const QF z = QF(rng.next_double());
    const QF lhs = xi_direct(w, z);
    const QF rhs = xi_product(w, z);
    const QF den = std::max(qabs(lhs), qabs(rhs));
    const double rel = den > 0 ? double(qabs(lhs - rhs) / den) : 0.0;
    if (rel > worst) {
      worst = rel;
      ww = double(w);
      wz = double(z);
    }
  }
  it.observed = worst;
  it.pass = worst <= it.threshold;
  it.detail = "worst at " + point_str(ww, wz);
  return it;
}

CheckItem check_h_edge_identity() {
  CheckItem it;
  it.name = "h_factor_edge_quadratic";
  // h_factor(1,z) collapses to 864 z^2 - 1960 z + 1850: exact integer
  // coefficient sums.
  const long long c2 = 1744 - 5280 + 4400;
  const long long c1 = -4760 + 13800 - 11000;
  const long long c0 = 3475 - 9750 + 8125;
  it.pass = (c2 == 864) && (c1 == -1960) && (c0 == 1850);
  it.observed = double(c2);
  it.threshold = 864;
  it.detail = "coefficients (" + std::to_string(c2) + ", " +
              std::to_string(c1) + ", " + std::to_string(c0) + ")";
  return it;
}

CheckItem check_h_positive() {
  CheckItem it;
  it.name = "h_factor_positive";
  it.threshold = 0.0;
  // h_factor is convex in w (leading quadratic has negative discriminant and
  // positive value, see check below) with critical line r_crit(z) > 1, so on
  // the square the w-minimum sits on an edge; scan edges plus the clamped
  // critical line defensively.
  double best = std::numeric_limits<double>::infinity();
  double bw = 0, bz = 0;
  const int kGrid = 4001;
  for (int j = 0; j < kGrid; ++j) {
    const double z = double(j) / double(kGrid - 1);
    const double wc = std::clamp(r_crit(z), 0.0, 1.0);
    for (const double w : {0.0, 1.0, wc}) {
      const double hv = h_factor(w, z);
      if (hv < best) {
        best = hv;
        bw = w;
        bz = z;
      }
    }
  }
  it.observed = best;
  it.pass = best > 0.0;
  it.detail = "min at " + point_str(bw, bz);
  return it;
}

CheckItem check_r_crit_discriminants() {
  CheckItem it;
  it.name = "r_crit_no_real_roots";
  it.threshold = 0.0;
  // numerator 2640 z^2 - 6900 z + 4875, denominator 1744 z^2 - 4760 z + 3475,
  // difference 896 z^2 - 2140 z + 1400; all three discriminants negative
  // means r_crit is finite and stays above 1 on the whole line.
  const long long dn = 6900LL * 6900 - 4LL * 2640 * 4875;
  const long long dd = 4760LL * 4760 - 4LL * 1744 * 3475;
  const long long df = 2140LL * 2140 - 4LL * 896 * 1400;
  it.pass = dn < 0 && dd < 0 && df < 0;
  it.observed = double(std::max({dn, dd, df}));
  it.detail = "discriminants (" + std::to_string(dn) + ", " +
              std::to_string(dd) + ", " + std::to_string(df) + ")";
  return it;
}

}  // namespace

CertificateReport certificate_checks(int mesh_n, int xi_points,
                                     std::uint64_t seed) {
  CertificateReport rep;
  rep.items.push_back(check_gamma_mesh(mesh_n));
  rep.items.push_back(check_gamma_partials());
  rep.items.push_back(check_xi_identity(xi_points, seed));
  rep.items.push_back(check_h_edge_identity());
  rep.items.push_back(check_h_positive());
  rep.items.push_back(check_r_crit_discriminants());
  return rep;
}

}  // namespace ldamix
