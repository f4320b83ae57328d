#include "ldamix/exact.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ldamix/chains.hpp"
#include "ldamix/combinatorics.hpp"
#include "ldamix/rng.hpp"

namespace ldamix {

StateSpace StateSpace::benchmark(int m, int cap) {
  if (m > cap)
    throw std::invalid_argument(
        "StateSpace: m exceeds the exact-analysis cap (" +
        std::to_string(cap) + ")");
  const CorpusCounts corpus = benchmark_corpus(m);
  StateSpace s;
  s.m = m;
  s.n = corpus.cells4();
  for (int c = 0; c < 4; ++c) s.dim[c] = s.n[c] + 1;
  s.stride[3] = 1;
  s.stride[2] = s.dim[3];
  s.stride[1] = s.dim[2] * s.dim[3];
  s.stride[0] = s.dim[1] * s.dim[2] * s.dim[3];
  s.size = s.dim[0] * s.stride[0];
  return s;
}

Eigen::VectorXd log_density_vector(const StateSpace& space,
                                   const DensityTable& table,
                                   KernelKind kind) {
  Eigen::VectorXd lp(space.size);
  for (long i = 0; i < space.size; ++i) {
    const Count4 k = space.state(i);
    lp[i] = (kind == KernelKind::lumped_l) ? table.log_pi_l(k)
                                           : table.log_pi_z(k);
  }
  return lp;
}

Eigen::VectorXd stationary_vector(const StateSpace& space,
                                  const DensityTable& table, KernelKind kind) {
  Eigen::VectorXd lp = log_density_vector(space, table, kind);
  const double lse = logsumexp(lp);
  for (long i = 0; i < space.size; ++i) lp[i] = std::exp(lp[i] - lse);
  return lp;
}

long mode_index(const StateSpace& space, const DensityTable& table,
                KernelKind kind) {
  const Eigen::VectorXd lp = log_density_vector(space, table, kind);
  // The surrogate density is constant along its ridge, so several lattice
  // states can share the maximum up to summation noise (~1e-15 in log units).
  // Tie-break by smallest index inside a 1e-9 band: the band is orders of
  // magnitude wider than the noise and orders narrower than the drop to the
  // first genuinely sub-maximal state, so the choice is reproducible across
  // compilers and evaluation orders.
  const double mx = lp.maxCoeff();
  for (long i = 0; i < long(lp.size()); ++i)
    if (lp[i] >= mx - 1e-9) return i;
  return 0;  // unreachable: the max itself is always inside the band
}

LevelSets level_sets(const StateSpace& space, const DensityTable& table) {
  LevelSets ls;
  ls.two_j = 2 * int(std::ceil(10.0 * std::log(double(space.m))));
  ls.log_rel = log_density_vector(space, table, KernelKind::metropolis_z);
  const double mx = ls.log_rel.maxCoeff();
  ls.log_rel.array() -= mx;
  ls.level.resize(space.size);
  ls.max_level = 1;
  for (long i = 0; i < space.size; ++i) {
    const int lev = std::max(1, int(std::ceil(-ls.log_rel[i])));
    ls.level[i] = lev;
    ls.max_level = std::max(ls.max_level, lev);
  }
  return ls;
}

SparseKernel build_kernel(const StateSpace& space, const DensityTable& table,
                          KernelKind kind, const LevelSets* levels,
                          int restriction_j) {
  const CorpusCounts& corpus = table.corpus();
  const Count4& n = space.n;
  const double total = double(corpus.total);

  // Precompute the surrogate log density once for the Z kernel.
  Eigen::VectorXd logz;
  if (kind == KernelKind::metropolis_z)
    logz = log_density_vector(space, table, kind);

  auto allowed = [&](long idx) {
    return levels == nullptr || levels->level[idx] <= restriction_j;
  };

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(size_t(space.size) * 9);
  for (long i = 0; i < space.size; ++i) {
    const Count4 k = space.state(i);
    double hold = 1.0;
    for (int c = 0; c < 4; ++c) {
      const int d = c / 2, j = c % 2;
      const long ktot = long(k[0]) + k[1] + k[2] + k[3];
      const long krow = (d == 0) ? long(k[0]) + k[1] : long(k[2]) + k[3];
      const long kcol = (j == 0) ? long(k[0]) + k[2] : long(k[1]) + k[3];
      if (kind == KernelKind::lumped_l) {
        // Up-move: a topic-B token of cell c is picked (prob (n_c-k_c)/n..)
        // and resampled to A; removing a B token leaves the k dot sums
        // unchanged.
        if (k[c] < n[c]) {
          const long nb = space.index(k) + space.stride[c];
          const double pa = conditional_prob_a(corpus, d, j, ktot, krow, kcol);
          const double p = (double(n[c] - k[c]) / total) * pa;
          if (allowed(nb)) {
            trips.emplace_back(int(i), int(nb), p);
            hold -= p;
          }
        }
        // Down-move: a topic-A token of cell c is picked (prob k_c/n..) and
        // resampled to B; the removed token lowers each dot sum by one.
        if (k[c] > 0) {
          const long nb = space.index(k) - space.stride[c];
          const double pa = conditional_prob_a(corpus, d, j, ktot - 1,
                                               krow - 1, kcol - 1);
          const double p = (double(k[c]) / total) * (1.0 - pa);
          if (allowed(nb)) {
            trips.emplace_back(int(i), int(nb), p);
            hold -= p;
          }
        }
      } else {
        for (int sgn = -1; sgn <= 1; sgn += 2) {
          Count4 kp = k;
          kp[c] += sgn;
          if (!space.contains(kp)) continue;
          const long nb = i + sgn * space.stride[c];
          if (!allowed(nb)) continue;
          const double p =
              0.125 * sigmoid_log_ratio(logz[nb] - logz[i]);
          trips.emplace_back(int(i), int(nb), p);
          hold -= p;
        }
      }
    }
    trips.emplace_back(int(i), int(i), hold);
  }

  SparseKernel ker;
  ker.kind = kind;
  ker.P.resize(space.size, space.size);
  ker.P.setFromTriplets(trips.begin(), trips.end());
  ker.P.makeCompressed();
  return ker;
}

std::vector<double> tv_curve_from(const SparseKernel& kernel,
                                  const Eigen::VectorXd& pi, Eigen::VectorXd mu,
                                  long t_max, double stop_below) {
  std::vector<double> tv;
  tv.reserve(size_t(t_max) + 1);
  Eigen::RowVectorXd row = mu.transpose();
  for (long t = 0;; ++t) {
    const double d = 0.5 * (row.transpose() - pi).lpNorm<1>();
    tv.push_back(d);
    if (t >= t_max || (stop_below >= 0 && d <= stop_below)) break;
    row = row * kernel.P;
  }
  return tv;
}

std::vector<double> tv_curve(const SparseKernel& kernel,
                             const Eigen::VectorXd& pi, long start, long t_max,
                             double stop_below) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(pi.size());
  mu[start] = 1.0;
  return tv_curve_from(kernel, pi, std::move(mu), t_max, stop_below);
}

long mixing_time(const SparseKernel& kernel, const Eigen::VectorXd& pi,
                 long start, double kappa, long t_max) {
  if (!(kappa > 0 && kappa < 1))
    throw std::invalid_argument("mixing_time: kappa must lie in (0,1)");
  const std::vector<double> tv = tv_curve(kernel, pi, start, t_max, kappa);
  if (tv.back() > kappa) {
    std::ostringstream os;
    os << "mixing_time: TV still " << tv.back() << " > " << kappa
       << " after t_max = " << t_max << " steps";
    throw std::runtime_error(os.str());
  }
  return long(tv.size()) - 1;
}

CutFlow cut_flow(const SparseKernel& kernel, const Eigen::VectorXd& pi,
                 const std::function<bool(long)>& in_set) {
  CutFlow f;
  bool any_in = false, any_out = false;
  for (long x = 0; x < pi.size(); ++x) {
    if (!in_set(x)) {
      any_out = true;
      continue;
    }
    any_in = true;
    f.mass += pi[x];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
             kernel.P, x);
         it; ++it) {
      if (!in_set(it.col())) f.q += pi[x] * it.value();
    }
  }
  if (!any_in || !any_out)
    throw std::invalid_argument("cut_flow: set must be nonempty and proper");
  return f;
}

double conductance_of(const std::vector<char>& mask,
                      const SparseKernel& kernel, const Eigen::VectorXd& pi) {
  if (long(mask.size()) != pi.size())
    throw std::invalid_argument("conductance_of: mask size mismatch");
  return cut_flow(kernel, pi, [&](long x) { return mask[size_t(x)] != 0; })
      .phi();
}

std::vector<CutRecord> conductance_cuts(const StateSpace& space,
                                        const SparseKernel& kernel,
                                        const Eigen::VectorXd& pi,
                                        const LevelSets& levels) {
  std::vector<CutRecord> cuts;
  // Level-set cuts B_j; j >= max_level is the full grid, so stop before.
  for (int j = 1; j < levels.max_level && j <= levels.two_j; ++j) {
    auto inside = [&](long x) { return levels.level[x] <= j; };
    CutFlow f = cut_flow(kernel, pi, inside);
    CutRecord r;
    if (f.mass <= 0.5) {
      r.mass = f.mass;
      r.phi = f.phi();
    } else {
      // Test the complement side; Q is the same by reversibility.
      r.mass = 1.0 - f.mass;
      r.phi = f.q / r.mass;
    }
    r.name = "levelset_j=" + std::to_string(j);
    cuts.push_back(r);
  }
  // Axis-aligned halfspaces {k_c <= t}.
  const char* coord_name[4] = {"k11", "k12", "k21", "k22"};
  for (int c = 0; c < 4; ++c) {
    for (long thr = 0; thr + 1 < space.dim[c]; ++thr) {
      auto inside = [&](long x) {
        return (x / space.stride[c]) % space.dim[c] <= thr;
      };
      CutFlow f = cut_flow(kernel, pi, inside);
      CutRecord r;
      if (f.mass <= 0.5) {
        r.mass = f.mass;
        r.phi = f.phi();
      } else {
        r.mass = 1.0 - f.mass;
        r.phi = f.q / r.mass;
      }
      r.name = std::string("axis_") + coord_name[c] + "<=" +
               std::to_string(thr);
      cuts.push_back(r);
    }
  }
  return cuts;
}

namespace {

// Symmetrization S = D^{1/2} P D^{-1/2}: s_xy = sqrt(P(x,y) P(y,x)), which is
// symmetric by construction and equals the similarity transform exactly when
// detailed balance holds.
Eigen::SparseMatrix<double, Eigen::RowMajor> symmetrize(
    const SparseKernel& kernel) {
  using Iter = Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator;
  const auto& P = kernel.P;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(size_t(P.nonZeros()));
  for (long x = 0; x < P.rows(); ++x) {
    for (Iter it(P, x); it; ++it) {
      const long y = it.col();
      if (y == x) {
        trips.emplace_back(int(x), int(x), it.value());
      } else {
        const double pyx = P.coeff(y, x);
        trips.emplace_back(int(x), int(y), std::sqrt(it.value() * pyx));
      }
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> S(P.rows(), P.cols());
  S.setFromTriplets(trips.begin(), trips.end());
  S.makeCompressed();
  return S;
}

// Flat-index permutation of the label-swap involution k -> n - k.  Both
// kernels inherit the posterior's invariance under swapping the two topic
// labels, so they commute with this permutation and their eigenvectors split
// into symmetric (even) and antisymmetric (odd) sectors.
std::vector<long> complement_permutation(const StateSpace& space) {
  std::vector<long> perm(size_t(space.size));
  for (long i = 0; i < space.size; ++i) {
    const Count4 comp = space.n - space.state(i);
    perm[size_t(i)] = space.index(comp);
  }
  return perm;
}

// Largest eigenvalue of S restricted to one symmetry sector, by thick-restart
// Lanczos with full reorthogonalization (T is maintained as the explicit
// projection V^T S V, which keeps the restart bookkeeping trivial).  In the
// even sector sqrt(pi) is deflated first, so the result is the second-largest
// even eigenvalue; the odd sector needs no deflation.  Splitting by sector is
// what makes the residual certificate trustworthy here: the two slowest
// non-trivial modes of these kernels sit in opposite sectors with nearly equal
// eigenvalues, and a sector-blind iteration can pass its residual test on one
// of the pair while the basis has not yet resolved the other.
double sector_top_eigenvalue(const Eigen::SparseMatrix<double, Eigen::RowMajor>& S,
                             const std::vector<long>& perm, double sign,
                             const Eigen::VectorXd& v1,
                             const LanczosOptions& opt) {
  const long n = S.rows();
  const bool deflate = sign > 0;
  Eigen::VectorXd scratch(n);
  const auto project = [&](Eigen::VectorXd& v) {
    scratch = v;
    for (long i = 0; i < n; ++i)
      v[i] = 0.5 * (scratch[i] + sign * scratch[size_t(perm[size_t(i)])]);
    if (deflate) v -= v1 * v1.dot(v);
  };

  const int mb = int(std::min<long>(opt.max_basis, n - 1));
  const int keep = std::min(opt.keep, mb - 2);
  std::vector<Eigen::VectorXd> V;
  V.reserve(size_t(mb) + 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(mb, mb);

  CounterRng rng(opt.seed, sign > 0 ? 17 : 18);
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = rng.next_double() - 0.5;
  project(v);
  v.normalize();
  V.push_back(v);

  double beta_last = 0;
  double last_top = -2.0;  // below any eigenvalue of a stochastic kernel
  Eigen::VectorXd resid;
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    // Grow the basis to mb columns.
    while (int(V.size()) < mb) {
      const int j = int(V.size()) - 1;
      Eigen::VectorXd u = S * V[size_t(j)];
      project(u);
      // Two classical Gram-Schmidt passes against the whole basis.
      Eigen::VectorXd h = Eigen::VectorXd::Zero(j + 1);
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const double c = V[size_t(i)].dot(u);
          u -= c * V[size_t(i)];
          h[i] += c;
        }
        if (deflate) u -= v1 * v1.dot(u);
      }
      for (int i = 0; i <= j; ++i) T(i, j) = T(j, i) = h[i];
      beta_last = u.norm();
      if (beta_last < 1e-14) break;  // sector exhausted: subspace invariant
      u /= beta_last;
      V.push_back(u);
    }
    const int M = int(V.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(M, M));
    const Eigen::VectorXd& theta = es.eigenvalues();  // ascending
    const Eigen::MatrixXd& Y = es.eigenvectors();

    const double top = theta[M - 1];
    const double res_bound = (M == mb && beta_last >= 1e-14)
                                 ? std::abs(beta_last * Y(M - 1, M - 1))
                                 : 0.0;
    const double tol = std::max(1e-13, opt.rel_tol * std::abs(1.0 - top));
    // Accept only when the top Ritz pair has a certified-small residual AND
    // has stopped moving between restarts: a small residual alone certifies
    // closeness to *some* eigenvalue, and inside a cluster that eigenvalue
    // can be an interior one while the true top is still being pulled in.
    if (res_bound <= tol && sweep > 0 && top - last_top <= tol) return top;
    last_top = top;

    // Thick restart: keep the top Ritz vectors plus the residual direction.
    std::vector<Eigen::VectorXd> W;
    W.reserve(size_t(keep) + 1);
    for (int r = 0; r < keep; ++r) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < M; ++i) w += Y(i, M - 1 - r) * V[size_t(i)];
      w.normalize();
      W.push_back(w);
    }
    // resid = the would-be next basis vector (u/beta from the growth loop).
    {
      const int j = M - 1;
      Eigen::VectorXd u = S * V[size_t(j)];
      project(u);
      for (int pass = 0; pass < 2; ++pass) {
        for (auto& w : W) u -= w.dot(u) * w;
        for (int i = 0; i <= j; ++i) u -= V[size_t(i)].dot(u) * V[size_t(i)];
        if (deflate) u -= v1 * v1.dot(u);
      }
      const double nb = u.norm();
      if (nb < 1e-14) {
        // Fully converged subspace; top Ritz value is exact to roundoff.
        return top;
      }
      resid = u / nb;
    }
    V = std::move(W);
    V.push_back(resid);
    T.setZero();
    for (int r = 0; r < keep; ++r) T(r, r) = theta[M - 1 - r];
  }
  throw std::runtime_error("spectral_gap: Lanczos did not converge within budget");
}

}  // namespace

double spectral_gap(const StateSpace& space, const SparseKernel& kernel,
                    const Eigen::VectorXd& pi, const LanczosOptions& opt) {
  const long n = pi.size();
  const Eigen::SparseMatrix<double, Eigen::RowMajor> S = symmetrize(kernel);

  if (n <= 64) {
    Eigen::MatrixXd dense(S);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    return 1.0 - es.eigenvalues()[n - 2];
  }

  Eigen::VectorXd v1 = pi.cwiseSqrt();
  v1.normalize();
  const std::vector<long> perm = complement_permutation(space);
  const double even = sector_top_eigenvalue(S, perm, +1.0, v1, opt);
  const double odd = sector_top_eigenvalue(S, perm, -1.0, v1, opt);
  return 1.0 - std::max(even, odd);
}

}  // namespace ldamix
