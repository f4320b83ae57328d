#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldamix/assignment.hpp"
#include "ldamix/exact.hpp"
#include "ldamix/rng.hpp"

namespace ldamix {

// Two-phase coupling of the full Gibbs chain: run two copies independently
// until their count vectors meet (phase 1), then couple them through a
// position pairing so the disagreement count D_t can only shrink (phase 2).
// P(T > t) for the coupling time T upper-bounds TV distance at time t.

struct CoupledPair {
  AssignmentState chain1;
  AssignmentState chain2;
  // Position bijection, valid in phase 2: agreeing positions map to
  // themselves, each disagreeing position maps to one in the same cell with
  // the two chains' labels swapped.  An involution.
  std::vector<int> pairing;
  long disagreements = 0;  // D_t; always even in phase 2
  bool phase2 = false;

  static CoupledPair make(AssignmentState a, AssignmentState b);
};

// Count of positions whose labels differ between the chains.
long count_disagreements(const AssignmentState& a, const AssignmentState& b);

// Exhaustive check of the pairing invariants (involution, same-cell,
// self-map iff agreeing, swapped labels on disagreeing pairs).
bool pairing_valid(const CoupledPair& pair);

// Phase 1: evolve both chains with independent full-chain updates until
// their count tables coincide; returns the meeting time in parallel steps,
// or -1 (sentinel) if t_limit is reached first.
long phase1_until_lumped_meet(CoupledPair& pair, long t_limit, CounterRng& rng);

// Install the phase-2 pairing (lowest-index matching within each cell).
// Requires equal count tables.
void begin_phase2(CoupledPair& pair);

// One coupled update: chain1 resamples a uniform position, chain2 resamples
// the paired position; the removed tokens match in cell and label, so both
// conditionals coincide and a single shared threshold drives both updates.
// D_t never increases; it drops by 2 exactly when a disagreeing pair
// resamples away from its removed label.  Requires phase 2.
void phase2_pairing_step(CoupledPair& pair, CounterRng& rng);

// Run phase 2 to coalescence (D = 0); returns the number of steps, or -1 if
// t_limit is reached first.  With `audit` set, validates the pairing and
// count-table equality after every step and throws on violation.
long phase2_until_coalesced(CoupledPair& pair, long t_limit, CounterRng& rng,
                            bool audit = false);

// Exact stationary sampler: inverse-CDF draw of k from pi_L, then uniform
// placement of the topic-A labels within each cell -- an exact draw from the
// full chain's stationary law.  The CDF is cached across draws.
class StationaryAssignmentSampler {
 public:
  StationaryAssignmentSampler(const StateSpace& space,
                              const Eigen::VectorXd& pi_l,
                              const CorpusCounts& corpus);

  AssignmentState draw(CounterRng& rng) const;
  // The k draw alone (index into the state space).
  long draw_index(CounterRng& rng) const;
  // Uniform within-cell placement for a given count vector.
  AssignmentState place(const Count4& k, CounterRng& rng) const;

 private:
  const StateSpace* space_;
  CorpusCounts corpus_;
  std::vector<double> cdf_;
};

AssignmentState sample_stationary_assignment(const StateSpace& space,
                                             const Eigen::VectorXd& pi_l,
                                             const CorpusCounts& corpus,
                                             std::uint64_t seed,
                                             std::uint64_t stream = 0);

// Empirical survival estimate P(T > t) with a 95% Wilson confidence band:
// the coupling inequality makes `hi` a certified-up-to-MC-error TV bound.
struct TvBound {
  double estimate = 0;
  double lo = 0;
  double hi = 0;
};
TvBound coupling_tv_bound(const std::vector<long>& samples, long t);

// Phase-2 experiment from fresh lumped-agreement starts: chain1 is a
// stationary draw, chain2 shares its k with fresh uniform placement.  For m
// within the exact cap the k comes from the inverse CDF; above it, from a
// long stationary run of the lumped chain (burn-in plus thinning), which is
// reported in the summary.
struct CouplingRunConfig {
  int m = 50;
  int replicas = 1000;
  std::uint64_t seed = 1;
  long t_limit = 100000000;  // per-replica phase-2 step cap
  int exact_cap = 100;       // largest m enumerated exactly
  long burn_in = 0;          // 0: auto (only used above exact_cap)
  long thin = 0;             // 0: auto
  bool audit = false;        // per-step invariant validation
};

struct CouplingSummary {
  int m = 0;
  int replicas = 0;
  bool exact_starts = true;
  std::vector<long> times;     // phase-2 coalescence steps per replica
  std::vector<long> initial_d; // D_0 per replica
  double mean = 0;
  double variance = 0;
  long t_max = 0;
  bool any_d_increase = false;  // audited during the runs
};

CouplingSummary run_phase2_experiment(const CouplingRunConfig& config);

}  // namespace ldamix
