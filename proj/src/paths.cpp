#include "ldamix/paths.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "ldamix/landscape.hpp"

namespace ldamix {

namespace {

constexpr int kRaySamples = 160;  // marching resolution of a fiber ray

// Nearest-lattice rounding with ties toward the smaller coordinate.
long round_tie_down(double v) {
  const double f = std::floor(v);
  return long(f) + ((v - f) > 0.5 ? 1 : 0);
}

}  // namespace

// Ray-marched g profiles along the block direction omega2 from each ridge
// point (a,d), plus the per-level rounded target tables derived from them.
// One block serves one x2 at a time; path enumeration iterates x2 in the
// outer loop, so blocks are rebuilt N times total, not N^2.
struct PathFamily::FiberCache {
  struct Ray {
    bool built = false;
    bool clipped = false;  // box boundary reached before the deepest level
    double t_max = 0;
    std::array<double, kRaySamples + 1> g{};
  };
  struct Table {
    double alpha = 0;
    std::vector<long> tb, tc;  // rounded b/c targets per (ka, kd)
  };

  long x2 = -1;
  double cw = 1, sw = 0;    // cos/sin omega2
  double delta_norm = 0;    // bc displacement of x2 from its ridge point
  std::vector<Ray> rays;    // dim_a * dim_d
  std::unordered_map<int, Table> tables;  // keyed by level j

  // March g outward from the ridge point (a,d) in direction (cw,sw) of the
  // bc-plane until the box boundary; the profile starts at the ridge value
  // and decreases (up to lattice-scale wiggles handled by the first-crossing
  // rule).
  static void march_ray(Ray& ray, double a, double d, double bs, double cs,
                        double cw, double sw) {
    double t_max = std::numeric_limits<double>::infinity();
    if (cw > 0) t_max = std::min(t_max, (kBoxB - bs) / cw);
    if (cw < 0) t_max = std::min(t_max, bs / -cw);
    if (sw > 0) t_max = std::min(t_max, (kBoxC - cs) / sw);
    if (sw < 0) t_max = std::min(t_max, cs / -sw);
    if (!std::isfinite(t_max)) t_max = 0;  // degenerate direction
    ray.t_max = std::max(0.0, t_max);
    for (int i = 0; i <= kRaySamples; ++i) {
      const double t = ray.t_max * double(i) / double(kRaySamples);
      ray.g[i] = g_eval(a, bs + t * cw, cs + t * sw, d);
    }
    ray.built = true;
  }

  // Distance to the continuous level-j boundary along the marched ray: first
  // crossing of g below the threshold, linearly interpolated in the bracket;
  // the full ray length if the box cuts the fiber first (clipped).
  static double ray_radius(const Ray& ray, double thr, bool* clipped) {
    for (int i = 1; i <= kRaySamples; ++i) {
      if (ray.g[i] < thr) {
        const double t0 = ray.t_max * double(i - 1) / double(kRaySamples);
        const double t1 = ray.t_max * double(i) / double(kRaySamples);
        const double g0 = ray.g[i - 1], g1 = ray.g[i];
        return t0 + (t1 - t0) * (g0 - thr) / (g0 - g1);
      }
    }
    *clipped = true;
    return ray.t_max;
  }
};

PathFamily::PathFamily(PathFamily&&) noexcept = default;
PathFamily& PathFamily::operator=(PathFamily&&) noexcept = default;
PathFamily::~PathFamily() = default;

PathFamily::PathFamily(const StateSpace& space, const LevelSets& levels,
                       const Eigen::VectorXd& log_pi_z, int level_slack)
    : space_(space),
      levels_(levels),
      level_slack_(level_slack),
      g_max_(log_pi_z.maxCoeff() / double(space.m)),
      cache_(new FiberCache) {
  if (log_pi_z.size() != space.size)
    throw std::invalid_argument("PathFamily: density/space size mismatch");
  if (level_slack < 0)
    throw std::invalid_argument("PathFamily: level_slack must be >= 0");
  cache_->rays.resize(std::size_t(space_.dim[0]) * space_.dim[3]);
  build_tree();
}

double PathFamily::ridge_b(double a, double d) const {
  double b = 0, c = 0;
  ldamix::ridge_bc(a, d, b, c);
  return b;
}

double PathFamily::ridge_c(double a, double d) const {
  double b = 0, c = 0;
  ldamix::ridge_bc(a, d, b, c);
  return c;
}

int PathFamily::pair_level(long x1, long x2) const {
  return std::max(levels_.level[x1], levels_.level[x2]);
}

bool PathFamily::build_vertices(long x1, long x2, std::vector<long>& verts,
                                std::vector<PathPhase>& phases) const {
  verts.clear();
  phases.clear();
  verts.push_back(x1);
  if (x1 == x2) return true;

  const Count4 k1 = space_.state(x1);
  const Count4 k2 = space_.state(x2);
  const int j_eff = pair_level(x1, x2);
  const double m = double(space_.m);

  Count4 cur = k1;
  long cur_idx = x1;
  auto emit = [&](int axis, int dir, PathPhase ph) -> bool {
    cur[axis] += dir;
    cur_idx += dir * space_.stride[axis];
    if (cur[axis] < 0 || cur[axis] > space_.n[axis]) {
      ++stats_.fail_box;
      ++stats_.fail_phase[int(ph)];
      return false;
    }
    if (levels_.level[cur_idx] > j_eff + level_slack_) {
      ++stats_.fail_level;
      ++stats_.fail_phase[int(ph)];
      return false;
    }
    verts.push_back(cur_idx);
    phases.push_back(ph);
    return true;
  };
  auto walk_to = [&](int axis, long target, PathPhase ph) -> bool {
    while (cur[axis] != target)
      if (!emit(axis, target > cur[axis] ? +1 : -1, ph)) return false;
    return true;
  };

  // Degenerate construction: endpoints share their (a,d) coordinates, so the
  // whole path is the phase-(i)/(ii) rectangle and no fiber or parity
  // machinery is involved (a b-only pair yields a path of length |db|).
  if (k1[0] == k2[0] && k1[3] == k2[3])
    return walk_to(1, k2[1], PathPhase::kWalkB) &&
           walk_to(2, k2[2], PathPhase::kWalkC);

  // ---- fiber block for x2 (reused across all x1 with the same x2) ----
  FiberCache& fc = *cache_;
  const int dim_d = int(space_.dim[3]);
  if (fc.x2 != x2) {
    fc.x2 = x2;
    fc.tables.clear();
    for (auto& r : fc.rays) r.built = false;
    const double a2 = double(k2[0]) / m, d2 = double(k2[3]) / m;
    double bs = 0, cs = 0;
    ldamix::ridge_bc(a2, d2, bs, cs);
    const double db = double(k2[1]) / m - bs;
    const double dc = double(k2[2]) / m - cs;
    fc.delta_norm = std::hypot(db, dc);
    if (fc.delta_norm < 1e-12) {
      fc.cw = 1;  // on the ridge: alpha = 0 and the direction is immaterial;
      fc.sw = 0;  // omega2 = 0 by convention
      fc.delta_norm = 0;
    } else {
      fc.cw = db / fc.delta_norm;
      fc.sw = dc / fc.delta_norm;
    }
  }
  auto ray_at = [&](int ka, int kd) -> const FiberCache::Ray& {
    FiberCache::Ray& ray = fc.rays[std::size_t(ka) * dim_d + kd];
    if (!ray.built) {
      const double a = double(ka) / m, d = double(kd) / m;
      double bs = 0, cs = 0;
      ldamix::ridge_bc(a, d, bs, cs);
      FiberCache::march_ray(ray, a, d, bs, cs, fc.cw, fc.sw);
    }
    return ray;
  };
  auto table_at = [&](int j) -> const FiberCache::Table& {
    auto it = fc.tables.find(j);
    if (it != fc.tables.end()) return it->second;
    FiberCache::Table tab;
    const double thr = g_max_ - double(j) / m;
    bool clipped = false;
    const double h2 = FiberCache::ray_radius(ray_at(k2[0], k2[3]), thr, &clipped);
    if (clipped) ++stats_.clipped_rays;
    if (fc.delta_norm == 0) {
      tab.alpha = 0;
    } else if (h2 <= 0 || fc.delta_norm > h2) {
      tab.alpha = 1;
      ++stats_.alpha_clamps;
    } else {
      tab.alpha = fc.delta_norm / h2;
    }
    const int dim_a = int(space_.dim[0]);
    tab.tb.resize(std::size_t(dim_a) * dim_d);
    tab.tc.resize(std::size_t(dim_a) * dim_d);
    for (int ka = 0; ka < dim_a; ++ka) {
      for (int kd = 0; kd < dim_d; ++kd) {
        const double a = double(ka) / m, d = double(kd) / m;
        double bs = 0, cs = 0;
        ldamix::ridge_bc(a, d, bs, cs);
        bool clip = false;
        const double rad = FiberCache::ray_radius(ray_at(ka, kd), thr, &clip);
        if (clip) ++stats_.clipped_rays;
        const std::size_t at = std::size_t(ka) * dim_d + kd;
        tab.tb[at] = std::clamp(
            round_tie_down(m * (bs + tab.alpha * rad * fc.cw)), 0L,
            long(space_.n[1]));
        tab.tc[at] = std::clamp(
            round_tie_down(m * (cs + tab.alpha * rad * fc.sw)), 0L,
            long(space_.n[2]));
      }
    }
    return fc.tables.emplace(j, std::move(tab)).first->second;
  };

  const FiberCache::Table& tab = table_at(j_eff);
  auto target_b = [&](int ka, int kd) {
    return tab.tb[std::size_t(ka) * dim_d + kd];
  };
  auto target_c = [&](int ka, int kd) {
    return tab.tc[std::size_t(ka) * dim_d + kd];
  };

  // Rectangle walk in the bc-plane to (tb, tc).  The corner can poke outside
  // the level slice even in the continuum (two boundary points at large
  // angular separation), but of the two corner orders at most one can be
  // deep outside, so take the shallower one.
  auto walk_rect = [&](long tb, long tc, PathPhase ph_b,
                       PathPhase ph_c) -> bool {
    const long corner_b_first = cur_idx + (tb - cur[1]) * space_.stride[1];
    const long corner_c_first = cur_idx + (tc - cur[2]) * space_.stride[2];
    if (levels_.level[corner_b_first] <= levels_.level[corner_c_first])
      return walk_to(1, tb, ph_b) && walk_to(2, tc, ph_c);
    return walk_to(2, tc, ph_c) && walk_to(1, tb, ph_b);
  };

  // Parity adjustment: step a and/or d to odd coordinates so phase-(i)/(ii)
  // b/c edges sit at odd (a,d) while the phase-(iii) corrections below only
  // use even walked coordinates.  Of the available odd neighbors, prefer the
  // shallower one (ties toward x2).
  for (const int axis : {0, 3}) {
    if (cur[axis] % 2 == 0) {
      const int toward = k2[axis] >= cur[axis] ? +1 : -1;
      int dir = toward;
      if (cur[axis] + dir < 0 || cur[axis] + dir > space_.n[axis]) {
        dir = -dir;
      } else if (cur[axis] - dir >= 0 && cur[axis] - dir <= space_.n[axis] &&
                 levels_.level[cur_idx - dir * space_.stride[axis]] <
                     levels_.level[cur_idx + dir * space_.stride[axis]]) {
        dir = -dir;
      }
      if (!emit(axis, dir, PathPhase::kParity)) return false;
    }
  }

  // Phases (i) and (ii): onto the fiber point above the start's (a,d).
  if (!walk_rect(target_b(cur[0], cur[3]), target_c(cur[0], cur[3]),
                 PathPhase::kWalkB, PathPhase::kWalkC))
    return false;

  // Phase (iii): a-steps then d-steps tracking the fiber.  b/c corrections
  // fire only at even values of the coordinate currently being walked; the
  // start was parity-adjusted to odd (a,d), so correction edges can never
  // coincide with the phase-(i)/(ii) edges of any path sharing this fiber.
  // Corrections aim at the fiber point one column ahead — the midpoint of
  // the two-column span over which the corrected (b,c) is then held — so the
  // tracking error is one column on either side rather than two behind.
  auto adjust = [&](int moving_axis) -> bool {
    if (cur[moving_axis] % 2 != 0) return true;
    Count4 look = cur;
    const long tgt = k2[moving_axis];
    look[moving_axis] += tgt > look[moving_axis]
                             ? +1
                             : (tgt < look[moving_axis] ? -1 : 0);
    return walk_rect(target_b(look[0], look[3]), target_c(look[0], look[3]),
                     PathPhase::kAdjust, PathPhase::kAdjust);
  };
  while (cur[0] != k2[0]) {
    if (!emit(0, k2[0] > cur[0] ? +1 : -1, PathPhase::kWalkA)) return false;
    if (!adjust(0)) return false;
  }
  while (cur[3] != k2[3]) {
    if (!emit(3, k2[3] > cur[3] ? +1 : -1, PathPhase::kWalkD)) return false;
    if (!adjust(3)) return false;
  }

  // Landing: pin the exact endpoint (a no-op when the final correction
  // already rounded onto it).
  return walk_rect(k2[1], k2[2], PathPhase::kLanding, PathPhase::kLanding);
}

void PathFamily::build_tree() {
  const long n = space_.size;
  tree_parent_.assign(std::size_t(n), -1);
  tree_depth_.assign(std::size_t(n), 0);
  tree_minimax_.assign(std::size_t(n), std::numeric_limits<int>::max());
  // Root at the density mode: smallest index inside a tie band one part in
  // 1e9 wide (log_rel peaks at exactly 0), matching mode_index().
  long root = 0;
  while (root + 1 < n && levels_.log_rel[root] < -1e-9) ++root;
  // Bottleneck Dijkstra over unit lattice moves.  The key (max level en
  // route, unit moves, index) is totally ordered, and ties between equal
  // keys resolve toward the smaller parent index, so the tree is a pure
  // function of the level-set geometry.
  using Key = std::tuple<int, int, long>;
  std::priority_queue<Key, std::vector<Key>, std::greater<Key>> heap;
  std::vector<char> done(std::size_t(n), 0);
  tree_minimax_[root] = levels_.level[root];
  heap.emplace(tree_minimax_[root], 0, root);
  while (!heap.empty()) {
    const auto [lev, dep, u] = heap.top();
    heap.pop();
    if (done[u]) continue;
    done[u] = 1;
    const Count4 k = space_.state(u);
    for (int axis = 0; axis < 4; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        const int coord = k[axis] + dir;
        if (coord < 0 || coord >= space_.dim[axis]) continue;
        const long v = u + dir * space_.stride[axis];
        if (done[v]) continue;
        const int vlev = std::max(lev, levels_.level[v]);
        const int vdep = dep + 1;
        const bool better =
            vlev < tree_minimax_[v] ||
            (vlev == tree_minimax_[v] &&
             (vdep < tree_depth_[v] ||
              (vdep == tree_depth_[v] && u < tree_parent_[v])));
        if (better) {
          tree_minimax_[v] = vlev;
          tree_depth_[v] = vdep;
          tree_parent_[v] = u;
          heap.emplace(vlev, vdep, v);
        }
      }
    }
  }
  tree_excess_ = 0;
  for (long i = 0; i < n; ++i)
    tree_excess_ = std::max(tree_excess_, tree_minimax_[i] - levels_.level[i]);
}

void PathFamily::tree_route(long x1, long x2, std::vector<long>& verts,
                            std::vector<PathPhase>& phases) const {
  verts.clear();
  phases.clear();
  // Walk both endpoints up to their lowest common tree ancestor, then stitch
  // the two legs: x1 -> meet -> x2.  Every vertex on the route lies on a
  // root path, so its level is at most max(M(x1), M(x2)).
  long a = x1, b = x2;
  std::vector<long> up2;
  while (tree_depth_[a] > tree_depth_[b]) {
    verts.push_back(a);
    a = tree_parent_[a];
  }
  while (tree_depth_[b] > tree_depth_[a]) {
    up2.push_back(b);
    b = tree_parent_[b];
  }
  while (a != b) {
    verts.push_back(a);
    up2.push_back(b);
    a = tree_parent_[a];
    b = tree_parent_[b];
  }
  verts.push_back(a);  // the meeting vertex
  verts.insert(verts.end(), up2.rbegin(), up2.rend());
  phases.assign(verts.size() - 1, PathPhase::kTree);
}

bool PathFamily::route(long x1, long x2, std::vector<long>& verts,
                       std::vector<PathPhase>& phases) const {
  if (x1 < 0 || x1 >= space_.size || x2 < 0 || x2 >= space_.size)
    throw std::out_of_range("PathFamily::route: state index out of range");
  const bool ok = build_vertices(x1, x2, verts, phases);
  if (!ok) {
    tree_route(x1, x2, verts, phases);
    ++stats_.fallbacks;
  }
  if (x1 != x2) ++stats_.pairs;
  stats_.max_len = std::max(stats_.max_len, long(verts.size()) - 1);
  return !ok;
}

std::vector<long> PathFamily::path(long x1, long x2, bool* used_fallback,
                                   std::vector<PathPhase>* phases) const {
  std::vector<long> verts;
  std::vector<PathPhase> ph;
  const bool fell_back = route(x1, x2, verts, ph);
  if (used_fallback) *used_fallback = fell_back;
  if (phases) *phases = std::move(ph);
  return verts;
}

PathFamily build_paths(const StateSpace& space, const LevelSets& levels,
                       const Eigen::VectorXd& log_pi_z, int level_slack) {
  return PathFamily(space, levels, log_pi_z, level_slack);
}

namespace {

// Per-edge Q(e) = pi(x) P(x,y) for the +1 unit move in each axis, indexed
// edge_id = x*4 + axis.  Reversibility makes the two directions agree.
std::vector<double> edge_q(const StateSpace& space, const SparseKernel& kernel,
                           const Eigen::VectorXd& pi) {
  std::vector<double> q(std::size_t(space.size) * 4, 0.0);
  for (long x = 0; x < space.size; ++x) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
             kernel.P, x);
         it; ++it) {
      const long y = it.col();
      if (y <= x) continue;
      for (int axis = 0; axis < 4; ++axis) {
        if (y - x == space.stride[axis]) {
          q[std::size_t(x) * 4 + axis] = pi[x] * it.value();
          break;
        }
      }
    }
  }
  return q;
}

int axis_of_move(const StateSpace& space, long delta) {
  for (int axis = 0; axis < 4; ++axis)
    if (delta == space.stride[axis] || -delta == space.stride[axis])
      return axis;
  throw std::logic_error("axis_of_move: not a unit move");
}

}  // namespace

CongestionResult path_congestion(const PathFamily& paths,
                                 const SparseKernel& kernel,
                                 const Eigen::VectorXd& pi, int top_k) {
  const StateSpace& space = paths.space();
  const long n = space.size;
  const std::vector<double> q = edge_q(space, kernel, pi);
  std::vector<double> load(std::size_t(n) * 4, 0.0);

  paths.stats() = PathStats{};
  std::vector<long> verts;
  std::vector<PathPhase> phases;
  verts.reserve(1024);
  // x2 outer so each fiber block is built once per target state.
  for (long x2 = 0; x2 < n; ++x2) {
    for (long x1 = 0; x1 < n; ++x1) {
      if (x1 == x2) continue;
      const double w = pi[x1] * pi[x2];
      paths.route(x1, x2, verts, phases);
      for (std::size_t i = 1; i < verts.size(); ++i) {
        const long a = verts[i - 1], b = verts[i];
        const long lo = std::min(a, b);
        const int axis = axis_of_move(space, b - a);
        load[std::size_t(lo) * 4 + axis] += w;
      }
    }
  }

  CongestionResult res;
  res.stats = paths.stats();
  std::vector<EdgeLoad> used;
  for (long x = 0; x < n; ++x) {
    for (int axis = 0; axis < 4; ++axis) {
      const std::size_t e = std::size_t(x) * 4 + axis;
      if (load[e] <= 0) continue;
      if (q[e] <= 0)
        throw std::runtime_error(
            "path_congestion: routed edge with zero kernel flow");
      used.push_back(EdgeLoad{x, axis, q[e], load[e]});
    }
  }
  if (used.empty()) throw std::runtime_error("path_congestion: no paths");
  const auto heavier = [](const EdgeLoad& a, const EdgeLoad& b) {
    return a.rho() > b.rho();
  };
  std::sort(used.begin(), used.end(), heavier);
  res.argmax = used.front();
  res.rho = res.argmax.rho();
  res.top_edges.assign(used.begin(),
                       used.begin() + std::min<std::size_t>(top_k,
                                                            used.size()));
  return res;
}

EdgeAudit audit_edge_phases(const PathFamily& paths) {
  const StateSpace& space = paths.space();
  const long n = space.size;
  // Phase classes: 0 = phase-(i) b-walk, 1 = phase-(ii) c-walk, 2 = a/d
  // moves (parity included), 3 = phase-(iii) b/c corrections + landing,
  // 4 = staircase fallback.
  std::vector<std::uint8_t> mask(std::size_t(n) * 4, 0);
  std::vector<long> verts;
  std::vector<PathPhase> phases;
  for (long x2 = 0; x2 < n; ++x2) {
    for (long x1 = 0; x1 < n; ++x1) {
      if (x1 == x2) continue;
      paths.route(x1, x2, verts, phases);
      for (std::size_t i = 1; i < verts.size(); ++i) {
        const long lo = std::min(verts[i - 1], verts[i]);
        const int axis = axis_of_move(space, verts[i] - verts[i - 1]);
        int cls = 4;
        switch (phases[i - 1]) {
          case PathPhase::kWalkB: cls = 0; break;
          case PathPhase::kWalkC: cls = 1; break;
          case PathPhase::kParity:
          case PathPhase::kWalkA:
          case PathPhase::kWalkD: cls = 2; break;
          case PathPhase::kAdjust:
          case PathPhase::kLanding: cls = 3; break;
          case PathPhase::kStaircase: cls = 4; break;
        }
        mask[std::size_t(lo) * 4 + axis] |= std::uint8_t(1u << cls);
      }
    }
  }
  EdgeAudit audit;
  for (const std::uint8_t m : mask) {
    if (!m) continue;
    ++audit.edges_used;
    const int classes = __builtin_popcount(unsigned(m));
    audit.max_phase_classes = std::max(audit.max_phase_classes, classes);
    if (classes > 1) ++audit.edges_multi_phase;
  }
  return audit;
}

double conductance_from_congestion(double rho) {
  if (!(rho > 0))
    throw std::invalid_argument("conductance_from_congestion: rho must be > 0");
  return 0.5 / rho;
}

double ConductanceProfile::eval(double rr) const {
  if (r.empty() || r.size() != phi.size())
    throw std::invalid_argument("ConductanceProfile: empty or ragged table");
  rr = std::min(rr, 0.5);  // constant extension beyond one-half mass
  if (rr <= r.front()) return phi.front();
  if (rr >= r.back()) return phi.back();
  const auto it = std::upper_bound(r.begin(), r.end(), rr);
  const std::size_t i = std::size_t(it - r.begin()) - 1;
  const double t =
      (std::log(rr) - std::log(r[i])) / (std::log(r[i + 1]) - std::log(r[i]));
  return phi[i] + t * (phi[i + 1] - phi[i]);
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double whole,
                        double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double bound_morris_peres(const ConductanceProfile& profile, double pi_star,
                          double kappa) {
  if (profile.r.empty() || profile.r.size() != profile.phi.size())
    throw std::invalid_argument("bound_morris_peres: empty or ragged profile");
  for (const double p : profile.phi)
    if (!(p > 0))
      throw std::invalid_argument(
          "bound_morris_peres: profile values must be positive");
  if (!(pi_star > 0) || !(kappa > 0))
    throw std::invalid_argument("bound_morris_peres: need pi_star, kappa > 0");
  const double hi = 4.0 / kappa;
  if (pi_star >= hi) return 1.0;
  const auto f = [&](double r) {
    const double p = profile.eval(r);
    return 4.0 / (r * p * p);
  };
  // Split at the knots (and at 1/2) so the integrand is smooth per piece.
  std::vector<double> cuts{pi_star};
  for (const double rk : profile.r)
    if (rk > pi_star && rk < hi) cuts.push_back(rk);
  if (0.5 > pi_star && 0.5 < hi) cuts.push_back(0.5);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i)
    total += integrate(f, cuts[i - 1], cuts[i], 1e-12);
  return 1.0 + total;
}

double bound_sinclair_jerrum(double phi_hat, double pi_x, double kappa) {
  if (!(phi_hat > 0) || !(phi_hat <= 1))
    throw std::invalid_argument("bound_sinclair_jerrum: phi_hat in (0,1]");
  if (!(pi_x > 0) || !(pi_x <= 1))
    throw std::invalid_argument("bound_sinclair_jerrum: pi_x in (0,1]");
  if (!(kappa > 0))
    throw std::invalid_argument("bound_sinclair_jerrum: kappa > 0");
  return (std::log(1.0 / pi_x) + std::log(1.0 / kappa)) / (phi_hat * phi_hat);
}

}  // namespace ldamix
