#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ldamix/exact.hpp"

namespace ldamix {

// Canonical lattice paths between all ordered state pairs, path congestion,
// and the two mixing-time bound calculators driven by conductance.
//
// A path from x1 to x2 is built in three phases around the ridge surface:
// after an initial parity adjustment (to odd a- and d-coordinates), (i) a
// monotone b-walk and (ii) a monotone c-walk move onto the level-set fiber
// of x2 (the point at angle omega2 and radius fraction alpha of the fiber
// through x2), then (iii) a-steps and d-steps track that fiber, with b/c
// corrections applied only at even (a,d) lattice points, and a final landing
// walk pins the exact endpoint.  Pairs whose rounded tracking exits the
// smallest level set containing both endpoints fall back to through-mode
// routing on a minimax-level spanning tree (see tree_excess()); fallbacks
// are counted and reported, never hidden.

struct PathStats {
  long long pairs = 0;        // ordered pairs routed (x != y)
  long long fallbacks = 0;    // pairs that used the tree fallback
  long long alpha_clamps = 0; // fiber fraction clamped into [0,1]
  long long clipped_rays = 0; // fiber rays cut by the box before the level
  long long fail_level = 0;   // fallback cause: step left the pair level set
  long long fail_box = 0;     // fallback cause: step left the count box
  long long fail_phase[8] = {0, 0, 0, 0, 0, 0, 0, 0};  // by PathPhase value
  long max_len = 0;           // longest path (unit moves)
};

// Move labels for audits; b/c moves are tagged by the phase that used them.
enum class PathPhase : std::uint8_t {
  kParity = 0,
  kWalkB = 1,
  kWalkC = 2,
  kWalkA = 3,
  kWalkD = 4,
  kAdjust = 5,   // phase-(iii) b/c corrections at even (a,d)
  kLanding = 6,
  kTree = 7,     // fallback moves along the minimax-level tree
};

class PathFamily {
 public:
  // `levels` and `log_pi_z` must come from the same space; the continuous
  // level-set fibers are anchored to the grid maximum of log pi_Z so the
  // discrete and continuous membership tests agree.
  //
  // `level_slack` is the lattice-quantum latitude of the containment test: a
  // routed path may pass through states up to `level_slack` shells outside
  // the smallest B_j holding both endpoints.  Slack 0 (the continuum ideal)
  // is unreachable on a coarse grid: one unit move changes log pi_Z by up to
  // a full shell, rounding a fiber point displaces it by up to half a step
  // in b and c, and the corrected (b,c) is held for a column on either side
  // of each fiber correction.  The default budgets one shell for each
  // effect; at m=10 it routes >99% of all ordered pairs in-level.
  PathFamily(const StateSpace& space, const LevelSets& levels,
             const Eigen::VectorXd& log_pi_z, int level_slack = 3);
  PathFamily(PathFamily&&) noexcept;
  PathFamily& operator=(PathFamily&&) noexcept;
  ~PathFamily();

  const StateSpace& space() const { return space_; }
  const LevelSets& levels() const { return levels_; }

  // Vertex list x1 -> x2 including both endpoints (a single vertex when
  // x1 == x2).  `phases` (optional) receives one label per unit move.
  std::vector<long> path(long x1, long x2, bool* used_fallback = nullptr,
                         std::vector<PathPhase>* phases = nullptr) const;

  // Reusable-buffer form of path(); returns true when the pair fell back to
  // the tree route.  Updates the running stats().
  bool route(long x1, long x2, std::vector<long>& verts,
             std::vector<PathPhase>& phases) const;

  // Smallest j with both endpoints in B_j, the set the path is required to
  // stay inside (up to level_slack()).
  int pair_level(long x1, long x2) const;

  int level_slack() const { return level_slack_; }

  // Containment certificate for fallback routes.  The tree is rooted at the
  // density mode and minimizes, over all lattice paths root -> x, the
  // maximum level M(x) visited en route (ties broken toward shorter paths,
  // then smaller indices, so the tree is deterministic).  A fallback pair
  // (x1, x2) is routed x1 -> meet -> x2 through the tree, every vertex of
  // which has level <= max(M(x1), M(x2)).  tree_excess() = max over states
  // of M(x) - level(x): fallback routes stay within
  // B_{pair_level + tree_excess}.
  int tree_excess() const { return tree_excess_; }

  PathStats& stats() const { return stats_; }

 private:
  StateSpace space_;
  LevelSets levels_;
  int level_slack_;
  double g_max_;           // (1/m) max log pi_Z over the grid
  double ridge_b(double a, double d) const;
  double ridge_c(double a, double d) const;

  // Per-x2 fiber cache: ray-marched g profiles along direction omega2 from
  // each ridge point (a,d), inverted per level on demand.  Single-threaded
  // by design; the cache tracks one x2 block at a time.
  struct FiberCache;
  std::unique_ptr<FiberCache> cache_;
  mutable PathStats stats_;

  // Minimax-level spanning tree rooted at the density mode (see
  // tree_excess()).  Built once in the constructor by a bottleneck Dijkstra
  // sweep over the 8-neighbor lattice.
  std::vector<long> tree_parent_;     // -1 at the root
  std::vector<int> tree_depth_;       // unit moves to the root
  std::vector<int> tree_minimax_;     // M(x): max level on the tree path
  int tree_excess_ = 0;

  bool build_vertices(long x1, long x2, std::vector<long>& verts,
                      std::vector<PathPhase>& phases) const;
  void build_tree();
  void tree_route(long x1, long x2, std::vector<long>& verts,
                  std::vector<PathPhase>& phases) const;
};

PathFamily build_paths(const StateSpace& space, const LevelSets& levels,
                       const Eigen::VectorXd& log_pi_z, int level_slack = 3);

struct EdgeLoad {
  long x = -1;      // lower endpoint state index
  int axis = -1;    // coordinate of the unit move
  double q = 0;     // Q(e) = pi(x) P(x, x + e_axis)
  double load = 0;  // sum of pi(s) pi(t) over ordered pairs routed through e
  double rho() const { return load / q; }
};

struct CongestionResult {
  double rho = 0;                   // max over edges of load/Q
  EdgeLoad argmax;                  // the congested edge
  std::vector<EdgeLoad> top_edges;  // the `top_k` most congested
  PathStats stats;                  // audit of the enumerated family
};

// rho(Gamma) = max_e (1/Q(e)) sum_{e in gamma_xy} pi(x) pi(y) by exact
// enumeration of all ordered pairs.  Q comes from the given kernel (the
// Metropolis kernel by default per the surrounding argument; the lumped
// kernel is the supported alternative).
CongestionResult path_congestion(const PathFamily& paths,
                                 const SparseKernel& kernel,
                                 const Eigen::VectorXd& pi, int top_k = 10);

// Per-edge phase-usage audit over the whole family: counts undirected edges
// used by more than one phase class (the construction promises this is a
// bounded exception, not the rule).
struct EdgeAudit {
  long long edges_used = 0;
  long long edges_multi_phase = 0;
  int max_phase_classes = 0;
};
EdgeAudit audit_edge_phases(const PathFamily& paths);

// Conductance lower bound 1/(2 rho) from path congestion.
double conductance_from_congestion(double rho);

// Tabulated conductance profile Phi(r): linear interpolation in ln r between
// knots, constant extension below the first knot and beyond r = 1/2 (the
// profile convention Phi(r) = Phi(1/2) for r > 1/2).
struct ConductanceProfile {
  std::vector<double> r;    // increasing masses in (0, 1/2]
  std::vector<double> phi;  // positive, nonincreasing
  double eval(double rr) const;
};

// Evolving-sets mixing bound 1 + int_{pi_star}^{4/kappa} 4/(r Phi(r)^2) dr
// by adaptive quadrature; rejects nonpositive profile values.
double bound_morris_peres(const ConductanceProfile& profile, double pi_star,
                          double kappa);

// Spectral/conductance mixing bound phi_hat^{-2} (ln(1/pi_x) + ln(1/kappa)).
double bound_sinclair_jerrum(double phi_hat, double pi_x, double kappa);

}  // namespace ldamix
