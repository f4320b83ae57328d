#include "ldamix/chains.hpp"

#include <stdexcept>

namespace ldamix {

void gibbs_step_r(AssignmentState& s, CounterRng& rng) {
  const int pos = int(rng.next_below(std::uint64_t(s.num_positions())));
  const int cell = s.cell_of(pos);
  const int d = cell / s.corpus.V, j = cell % s.corpus.V;
  const bool was_a = s.label[pos] != 0;
  // Dot sums with this position removed.
  const long t = s.ktot - (was_a ? 1 : 0);
  const long r = s.krow[d] - (was_a ? 1 : 0);
  const long c = s.kcol[j] - (was_a ? 1 : 0);
  const double pa = conditional_prob_a(s.corpus, d, j, t, r, c);
  s.set_label(pos, rng.next_double() < pa ? 1 : 0);
}

void lumped_step_l(Count4& k, const DensityTable& table, CounterRng& rng) {
  const Count4& n = table.cells();
  const CorpusCounts& corpus = table.corpus();
  // Pick a (cell, label) class proportional to its token count, walking the
  // classes in the same order the full chain's position layout uses.
  long u = long(rng.next_below(std::uint64_t(corpus.total)));
  int cell = 0;
  bool was_a = false;
  for (; cell < 4; ++cell) {
    if (u < k[cell]) {
      was_a = true;
      break;
    }
    u -= k[cell];
    if (u < n[cell] - k[cell]) {
      was_a = false;
      break;
    }
    u -= n[cell] - k[cell];
  }
  const int d = cell / 2, j = cell % 2;
  const long ktot = long(k[0]) + k[1] + k[2] + k[3];
  const long krow = (d == 0) ? long(k[0]) + k[1] : long(k[2]) + k[3];
  const long kcol = (j == 0) ? long(k[0]) + k[2] : long(k[1]) + k[3];
  const long t = ktot - (was_a ? 1 : 0);
  const long r = krow - (was_a ? 1 : 0);
  const long c = kcol - (was_a ? 1 : 0);
  const double pa = conditional_prob_a(corpus, d, j, t, r, c);
  const bool now_a = rng.next_double() < pa;
  k[cell] += (now_a ? 1 : 0) - (was_a ? 1 : 0);
}

void metropolis_step_z(Count4& k, const DensityTable& table, CounterRng& rng,
                       const GridPredicate* restriction) {
  const int dir = int(rng.next_below(8));
  Count4 kp = k;
  kp[dir >> 1] += (dir & 1) ? 1 : -1;
  if (!table.in_grid(kp)) return;  // reflect by rejection
  if (restriction && !(*restriction)(kp)) return;
  const double delta = table.log_pi_z(kp) - table.log_pi_z(k);
  if (rng.next_double() < sigmoid_log_ratio(delta)) k = kp;
}

Trajectory simulate_trajectory(const ChainConfig& config,
                               const CorpusCounts& corpus,
                               const Eigen::MatrixXi& start_counts, long steps,
                               long thin,
                               const GridPredicate* restriction) {
  if (steps < 0 || thin <= 0)
    throw std::invalid_argument("simulate_trajectory: bad steps/thin");
  if (restriction && config.kind == ChainKind::full_r)
    throw std::invalid_argument(
        "simulate_trajectory: restriction only valid for lumped/metropolis");
  CounterRng rng(config.seed, config.stream);
  DensityTable table(corpus);
  Trajectory out;
  out.t.reserve(size_t(steps / thin) + 1);
  out.k.reserve(size_t(steps / thin) + 1);

  if (config.kind == ChainKind::full_r) {
    AssignmentState state = AssignmentState::from_counts(corpus, start_counts);
    out.t.push_back(0);
    out.k.push_back(state.count4());
    for (long s = 1; s <= steps; ++s) {
      gibbs_step_r(state, rng);
      if (s % thin == 0) {
        out.t.push_back(s);
        out.k.push_back(state.count4());
      }
    }
    return out;
  }

  if (start_counts.rows() != 2 || start_counts.cols() != 2)
    throw std::invalid_argument("simulate_trajectory: start must be 2x2");
  Count4 k(start_counts(0, 0), start_counts(0, 1), start_counts(1, 0),
           start_counts(1, 1));
  out.t.push_back(0);
  out.k.push_back(k);
  for (long s = 1; s <= steps; ++s) {
    if (config.kind == ChainKind::lumped_l)
      lumped_step_l(k, table, rng);
    else
      metropolis_step_z(k, table, rng, restriction);
    if (s % thin == 0) {
      out.t.push_back(s);
      out.k.push_back(k);
    }
  }
  return out;
}

}  // namespace ldamix
