#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

#include "ldamix/counts.hpp"
#include "ldamix/posterior.hpp"

namespace ldamix {

// Exact finite-state analysis of the lumped chain L and the Metropolis chain
// Z: enumeration of the count grid, analytic one-step kernels, stationary
// vectors, TV mixing curves, spectral gaps, level sets and conductance.

// Enumerated count grid {0..n11} x {0..n12} x {0..n21} x {0..n22} with a
// row-major bijective index (k22 fastest).
struct StateSpace {
  int m = 0;
  Count4 n = Count4::Zero();
  std::array<long, 4> dim{};     // n_c + 1 per coordinate
  std::array<long, 4> stride{};  // index delta of +1 in coordinate c
  long size = 0;

  // Grid of the benchmark corpus; m above `cap` is rejected to bound memory.
  static StateSpace benchmark(int m, int cap = 60);

  long index(const Count4& k) const {
    return k[0] * stride[0] + k[1] * stride[1] + k[2] * stride[2] +
           k[3] * stride[3];
  }

  Count4 state(long idx) const {
    Count4 k;
    for (int c = 0; c < 4; ++c) {
      k[c] = int(idx / stride[c]);
      idx %= stride[c];
    }
    return k;
  }

  bool contains(const Count4& k) const {
    return (k >= 0).all() && (k <= n).all();
  }
};

enum class KernelKind { lumped_l, metropolis_z };

// Row-stochastic sparse transition matrix; at most 9 nonzeros per row
// (8 unit moves + holding).
struct SparseKernel {
  KernelKind kind = KernelKind::lumped_l;
  Eigen::SparseMatrix<double, Eigen::RowMajor> P;
};

// Nested level sets B_j = {k : pi_Z(k)/max pi_Z >= e^{-j}}, j = 1..2J with
// 2J = 2*ceil(10 ln m).  level[x] is the smallest j whose B_j contains x, so
// membership is level[x] <= j.
struct LevelSets {
  int two_j = 0;
  int max_level = 0;           // deepest occupied level on the grid
  Eigen::VectorXi level;       // per state
  Eigen::VectorXd log_rel;     // log pi_Z - max log pi_Z per state
  bool contains(long idx, int j) const { return level[idx] <= j; }
};

LevelSets level_sets(const StateSpace& space, const DensityTable& table);

// Exact analytic kernel of lumped_step_l / metropolis_step_z.  When `levels`
// and `restriction_j` are given, moves leaving B_j are redirected to holding.
SparseKernel build_kernel(const StateSpace& space, const DensityTable& table,
                          KernelKind kind, const LevelSets* levels = nullptr,
                          int restriction_j = 0);

// exp(log pi - logsumexp(log pi)) over the enumerated grid.
Eigen::VectorXd stationary_vector(const StateSpace& space,
                                  const DensityTable& table, KernelKind kind);

// Per-state unnormalized log density for the given kind.
Eigen::VectorXd log_density_vector(const StateSpace& space,
                                   const DensityTable& table, KernelKind kind);

long mode_index(const StateSpace& space, const DensityTable& table,
                KernelKind kind);

// TV(mu_t, pi) for t = 0..t_max from an initial distribution (or the point
// mass at `start`), iterating mu P exactly.  Stops early once the curve
// drops to `stop_below` (pass a negative value to disable).
std::vector<double> tv_curve_from(const SparseKernel& kernel,
                                  const Eigen::VectorXd& pi,
                                  Eigen::VectorXd mu, long t_max,
                                  double stop_below = -1.0);
std::vector<double> tv_curve(const SparseKernel& kernel,
                             const Eigen::VectorXd& pi, long start, long t_max,
                             double stop_below = -1.0);

// First t with TV(mu_t, pi) <= kappa; throws with a diagnostic if t_max is
// reached first.
long mixing_time(const SparseKernel& kernel, const Eigen::VectorXd& pi,
                 long start, double kappa, long t_max);

// Q(A, A^c) = sum_{x in A, y not in A} pi(x) P(x,y) and the conductance
// Q/pi(A) for the set selected by `in_set`.
struct CutFlow {
  double q = 0;        // boundary flow Q(A, A^c)
  double mass = 0;     // pi(A)
  double phi() const { return q / mass; }
};
CutFlow cut_flow(const SparseKernel& kernel, const Eigen::VectorXd& pi,
                 const std::function<bool(long)>& in_set);
double conductance_of(const std::vector<char>& mask, const SparseKernel& kernel,
                      const Eigen::VectorXd& pi);

// Named conductance test cuts: every level set B_j (proper ones) and every
// axis-aligned halfspace {k_c <= t}, each evaluated on its small-mass side
// (the side with pi <= 1/2), which is the side conductance profiles speak
// about.
struct CutRecord {
  std::string name;
  double mass = 0;  // pi of the tested (small) side
  double phi = 0;
};
std::vector<CutRecord> conductance_cuts(const StateSpace& space,
                                        const SparseKernel& kernel,
                                        const Eigen::VectorXd& pi,
                                        const LevelSets& levels);

// 1 - lambda_2 of the symmetrized kernel D^{1/2} P D^{-1/2}, computed by a
// deflated thick-restart Lanczos iteration (dense solve for tiny spaces).
// The iteration runs once per symmetry sector of the label-swap involution
// k -> n - k, which separates the near-degenerate pair of slowest modes.
// The kept window must exceed the top cluster's size: the ridge carries a
// ladder of diffusion modes spaced ~1/m^2 apart, and a window smaller than
// the ladder can truncate the true second eigenvector out of the basis while
// an interior pair passes the residual test.
struct LanczosOptions {
  int max_basis = 200;
  int keep = 48;
  int max_sweeps = 600;
  double rel_tol = 1e-8;
  std::uint64_t seed = 0x5eed;
};
double spectral_gap(const StateSpace& space, const SparseKernel& kernel,
                    const Eigen::VectorXd& pi,
                    const LanczosOptions& options = {});

}  // namespace ldamix
