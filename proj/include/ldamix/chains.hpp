#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ldamix/assignment.hpp"
#include "ldamix/posterior.hpp"
#include "ldamix/rng.hpp"

namespace ldamix {

// Stochastic simulators for the three chains:
//   R : full per-position Gibbs chain on topic assignments,
//   L : its lumping through the count table k (distributionally identical),
//   Z : Metropolis random walk targeting the smooth surrogate pi_Z.

enum class ChainKind { full_r, lumped_l, metropolis_z };

struct ChainConfig {
  ChainKind kind = ChainKind::lumped_l;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  // Optional level-set confinement (valid for lumped_l / metropolis_z only).
  std::optional<int> restriction_j;
};

// Exact conditional probability that a resampled position takes topic A,
// given the dot sums (t,r,c) = (k.., k_d., k_.j) of the assignment with that
// position removed.  Both completions' weights are small exact integer
// products, so no log-space round trip is needed:
//   w_A = (n..-t+1)(r+1)(c+1),  w_B = (t+2)(n_d.-r)(n_.j-c).
inline double conditional_prob_a(const CorpusCounts& corpus, int d, int j,
                                 long t, long r, long c) {
  const double wa =
      double(corpus.total - t + 1) * double(r + 1) * double(c + 1);
  const double wb = double(t + 2) * double(corpus.row[d] - r) *
                    double(corpus.col[j] - c);
  return wa / (wa + wb);
}

// One full-chain update: uniform position, exact conditional resample.
void gibbs_step_r(AssignmentState& state, CounterRng& rng);

// One lumped update: pick a (cell, current-label) class with probability
// proportional to its token count, then the same conditional as the full
// chain; this is exactly the projection of gibbs_step_r through k(z).
void lumped_step_l(Count4& k, const DensityTable& table, CounterRng& rng);

using GridPredicate = std::function<bool(const Count4&)>;

// One Metropolis update for Z: uniform proposal among the 8 unit moves,
// accepted with probability pi_Z(k')/(pi_Z(k') + pi_Z(k)); proposals leaving
// the grid or the restriction set are rejected in place.
void metropolis_step_z(Count4& k, const DensityTable& table, CounterRng& rng,
                       const GridPredicate* restriction = nullptr);

struct Trajectory {
  std::vector<long> t;
  std::vector<Count4> k;
};

// Runs `steps` updates of the configured chain from the canonical assignment
// representative of start_counts, recording the count vector every `thin`
// steps (t = 0 included).
Trajectory simulate_trajectory(const ChainConfig& config,
                               const CorpusCounts& corpus,
                               const Eigen::MatrixXi& start_counts, long steps,
                               long thin,
                               const GridPredicate* restriction = nullptr);

}  // namespace ldamix
