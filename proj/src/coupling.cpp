#include "ldamix/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ldamix/chains.hpp"

namespace ldamix {

namespace {

bool same_corpus(const AssignmentState& a, const AssignmentState& b) {
  return a.corpus.D == b.corpus.D && a.corpus.V == b.corpus.V &&
         (a.corpus.n.array() == b.corpus.n.array()).all();
}

bool counts_equal(const AssignmentState& a, const AssignmentState& b) {
  return (a.k.array() == b.k.array()).all();
}

// Uniformly random assignment with the given count table: per cell, a
// partial Fisher-Yates draw of a k-subset carrying the topic-A labels.
AssignmentState place_uniform(const CorpusCounts& corpus,
                              const Eigen::MatrixXi& counts, CounterRng& rng) {
  if (counts.rows() != corpus.D || counts.cols() != corpus.V ||
      (counts.array() < 0).any() || (counts.array() > corpus.n.array()).any())
    throw std::invalid_argument("place_uniform: counts outside bounds");
  AssignmentState s = AssignmentState::empty(corpus);
  std::vector<int> scratch;
  for (int d = 0; d < corpus.D; ++d)
    for (int j = 0; j < corpus.V; ++j) {
      const int cell = d * corpus.V + j;
      const int nc = corpus.n(d, j), kc = counts(d, j);
      scratch.resize(size_t(nc));
      std::iota(scratch.begin(), scratch.end(), 0);
      for (int i = 0; i < kc; ++i) {
        const int r = i + int(rng.next_below(std::uint64_t(nc - i)));
        std::swap(scratch[size_t(i)], scratch[size_t(r)]);
        s.set_label(s.cell_off[size_t(cell)] + scratch[size_t(i)], 1);
      }
    }
  return s;
}

Eigen::MatrixXi counts_matrix(const Count4& k) {
  Eigen::MatrixXi c(2, 2);
  c << k[0], k[1], k[2], k[3];
  return c;
}

}  // namespace

CoupledPair CoupledPair::make(AssignmentState a, AssignmentState b) {
  if (!same_corpus(a, b))
    throw std::invalid_argument("CoupledPair: chains over different corpora");
  CoupledPair pair;
  pair.chain1 = std::move(a);
  pair.chain2 = std::move(b);
  pair.disagreements = count_disagreements(pair.chain1, pair.chain2);
  return pair;
}

long count_disagreements(const AssignmentState& a, const AssignmentState& b) {
  if (a.label.size() != b.label.size())
    throw std::invalid_argument("count_disagreements: size mismatch");
  long d = 0;
  for (size_t p = 0; p < a.label.size(); ++p) d += a.label[p] != b.label[p];
  return d;
}

bool pairing_valid(const CoupledPair& pair) {
  const AssignmentState& c1 = pair.chain1;
  const AssignmentState& c2 = pair.chain2;
  const int n = c1.num_positions();
  if (int(pair.pairing.size()) != n) return false;
  long d = 0;
  for (int p = 0; p < n; ++p) {
    const int q = pair.pairing[size_t(p)];
    if (q < 0 || q >= n) return false;
    if (pair.pairing[size_t(q)] != p) return false;  // involution
    const bool agree = c1.label[size_t(p)] == c2.label[size_t(p)];
    if (agree != (q == p)) return false;  // self-map exactly on agreement
    if (q == p) continue;
    ++d;
    if (c1.cell_of(p) != c1.cell_of(q)) return false;  // same cell
    // Matched pairs carry the two chains' labels swapped, so the pair
    // contributes one topic-A token per chain within its cell.
    if (c1.label[size_t(q)] == c1.label[size_t(p)]) return false;
    if (c2.label[size_t(q)] == c2.label[size_t(p)]) return false;
    if (c2.label[size_t(p)] != c1.label[size_t(q)]) return false;
  }
  return d == pair.disagreements;
}

long phase1_until_lumped_meet(CoupledPair& pair, long t_limit,
                              CounterRng& rng) {
  if (pair.phase2)
    throw std::logic_error("phase1_until_lumped_meet: already in phase 2");
  if (counts_equal(pair.chain1, pair.chain2)) return 0;
  for (long t = 1; t <= t_limit; ++t) {
    gibbs_step_r(pair.chain1, rng);
    gibbs_step_r(pair.chain2, rng);
    if (counts_equal(pair.chain1, pair.chain2)) return t;
  }
  return -1;
}

void begin_phase2(CoupledPair& pair) {
  if (!counts_equal(pair.chain1, pair.chain2))
    throw std::invalid_argument("begin_phase2: count tables differ");
  const AssignmentState& c1 = pair.chain1;
  const AssignmentState& c2 = pair.chain2;
  const int n = c1.num_positions();
  pair.pairing.resize(size_t(n));
  for (int p = 0; p < n; ++p) pair.pairing[size_t(p)] = p;
  std::vector<int> ab, ba;  // (1,0)-typed and (0,1)-typed positions
  const int cells = int(c1.cell_off.size()) - 1;
  for (int cell = 0; cell < cells; ++cell) {
    ab.clear();
    ba.clear();
    for (int p = c1.cell_off[size_t(cell)]; p < c1.cell_off[size_t(cell) + 1];
         ++p) {
      if (c1.label[size_t(p)] == c2.label[size_t(p)]) continue;
      (c1.label[size_t(p)] ? ab : ba).push_back(p);
    }
    // Equal per-cell counts force the two disagreement types to balance.
    if (ab.size() != ba.size())
      throw std::logic_error("begin_phase2: unbalanced disagreement types");
    for (size_t i = 0; i < ab.size(); ++i) {
      pair.pairing[size_t(ab[i])] = ba[i];
      pair.pairing[size_t(ba[i])] = ab[i];
    }
  }
  pair.disagreements = count_disagreements(c1, c2);
  pair.phase2 = true;
}

void phase2_pairing_step(CoupledPair& pair, CounterRng& rng) {
  if (!pair.phase2)
    throw std::logic_error("phase2_pairing_step: phase 2 not started");
  if (!counts_equal(pair.chain1, pair.chain2))
    throw std::logic_error("phase2_pairing_step: count tables diverged");
  AssignmentState& c1 = pair.chain1;
  AssignmentState& c2 = pair.chain2;
  const int p1 = int(rng.next_below(std::uint64_t(c1.num_positions())));
  const int p2 = pair.pairing[size_t(p1)];
  // The pairing matches tokens of equal label across the chains (trivially
  // at agreeing positions, by the swap structure at disagreeing ones), so
  // one removal leaves both chains with identical dot sums.
  const std::uint8_t l = c1.label[size_t(p1)];
  const int cell = c1.cell_of(p1);
  const int d = cell / c1.corpus.V, j = cell % c1.corpus.V;
  const long t = c1.ktot - l;
  const long r = c1.krow[d] - l;
  const long c = c1.kcol[j] - l;
  const double pa = conditional_prob_a(c1.corpus, d, j, t, r, c);
  const std::uint8_t b = rng.next_double() < pa ? 1 : 0;
  c1.set_label(p1, b);
  c2.set_label(p2, b);
  if (p1 != p2 && b != l) {
    // Both members of the disagreeing pair flipped to the shared value.
    pair.pairing[size_t(p1)] = p1;
    pair.pairing[size_t(p2)] = p2;
    pair.disagreements -= 2;
  }
}

long phase2_until_coalesced(CoupledPair& pair, long t_limit, CounterRng& rng,
                            bool audit) {
  if (!pair.phase2)
    throw std::logic_error("phase2_until_coalesced: phase 2 not started");
  if (pair.disagreements == 0) return 0;
  for (long t = 1; t <= t_limit; ++t) {
    const long before = pair.disagreements;
    phase2_pairing_step(pair, rng);
    if (pair.disagreements > before)
      throw std::logic_error("phase2_until_coalesced: disagreements grew");
    if (audit) {
      if (!counts_equal(pair.chain1, pair.chain2))
        throw std::logic_error("phase2 audit: count tables diverged");
      if (!pairing_valid(pair))
        throw std::logic_error("phase2 audit: pairing invariant violated");
    }
    if (pair.disagreements == 0) return t;
  }
  return -1;
}

StationaryAssignmentSampler::StationaryAssignmentSampler(
    const StateSpace& space, const Eigen::VectorXd& pi_l,
    const CorpusCounts& corpus)
    : space_(&space), corpus_(corpus) {
  if (!corpus.is_two_by_two())
    throw std::invalid_argument("StationaryAssignmentSampler: corpus not 2x2");
  if ((corpus.cells4() != space.n).any())
    throw std::invalid_argument(
        "StationaryAssignmentSampler: corpus does not match state space");
  if (pi_l.size() != space.size || (pi_l.array() < 0).any())
    throw std::invalid_argument("StationaryAssignmentSampler: bad pi vector");
  cdf_.resize(size_t(space.size));
  double acc = 0;
  for (long i = 0; i < space.size; ++i) {
    acc += pi_l[i];
    cdf_[size_t(i)] = acc;
  }
  if (!(acc > 0))
    throw std::invalid_argument("StationaryAssignmentSampler: zero mass");
  for (double& v : cdf_) v /= acc;
  cdf_.back() = 1.0;
}

long StationaryAssignmentSampler::draw_index(CounterRng& rng) const {
  const double u = rng.next_double();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min(long(it - cdf_.begin()), space_->size - 1);
}

AssignmentState StationaryAssignmentSampler::place(const Count4& k,
                                                   CounterRng& rng) const {
  return place_uniform(corpus_, counts_matrix(k), rng);
}

AssignmentState StationaryAssignmentSampler::draw(CounterRng& rng) const {
  return place(space_->state(draw_index(rng)), rng);
}

AssignmentState sample_stationary_assignment(const StateSpace& space,
                                             const Eigen::VectorXd& pi_l,
                                             const CorpusCounts& corpus,
                                             std::uint64_t seed,
                                             std::uint64_t stream) {
  StationaryAssignmentSampler sampler(space, pi_l, corpus);
  CounterRng rng(seed, stream);
  return sampler.draw(rng);
}

TvBound coupling_tv_bound(const std::vector<long>& samples, long t) {
  if (samples.empty())
    throw std::invalid_argument("coupling_tv_bound: no samples");
  const double n = double(samples.size());
  long exceed = 0;
  for (long s : samples) exceed += s > t;
  const double p = double(exceed) / n;
  const double z = 1.959963984540054;  // 97.5% normal quantile
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  TvBound out;
  out.estimate = p;
  out.lo = std::max(0.0, center - half);
  out.hi = std::min(1.0, center + half);
  return out;
}

CouplingSummary run_phase2_experiment(const CouplingRunConfig& config) {
  if (config.replicas < 1)
    throw std::invalid_argument("run_phase2_experiment: replicas < 1");
  const CorpusCounts corpus = benchmark_corpus(config.m);
  const int m = config.m;
  CouplingSummary out;
  out.m = m;
  out.replicas = config.replicas;
  out.exact_starts = m <= config.exact_cap;

  // Per-replica stationary k draws: inverse CDF when the grid fits in
  // memory, thinned draws from a long stationary run of the lumped chain
  // otherwise.
  std::vector<Count4> starts;
  starts.reserve(size_t(config.replicas));
  if (out.exact_starts) {
    const StateSpace space = StateSpace::benchmark(m, config.exact_cap);
    const DensityTable table(corpus);
    const Eigen::VectorXd pi = stationary_vector(space, table,
                                                 KernelKind::lumped_l);
    StationaryAssignmentSampler sampler(space, pi, corpus);
    CounterRng rng(config.seed, /*stream=*/999);
    for (int rep = 0; rep < config.replicas; ++rep)
      starts.push_back(space.state(sampler.draw_index(rng)));
  } else {
    const DensityTable table(corpus);
    const long burn =
        config.burn_in > 0 ? config.burn_in : std::max<long>(2000000, 50L * m * m);
    const long thin =
        config.thin > 0 ? config.thin : std::max<long>(400000, 10L * m * m);
    CounterRng rng(config.seed, /*stream=*/999);
    Count4 k(corpus.n(0, 0) / 2, corpus.n(0, 1) / 2, corpus.n(1, 0) / 2,
             corpus.n(1, 1) / 2);
    for (long t = 0; t < burn; ++t) lumped_step_l(k, table, rng);
    for (int rep = 0; rep < config.replicas; ++rep) {
      for (long t = 0; t < thin; ++t) lumped_step_l(k, table, rng);
      starts.push_back(k);
    }
  }

  out.times.reserve(size_t(config.replicas));
  out.initial_d.reserve(size_t(config.replicas));
  double sum = 0, sumsq = 0;
  for (int rep = 0; rep < config.replicas; ++rep) {
    CounterRng rng(config.seed, std::uint64_t(1000 + rep));
    const Eigen::MatrixXi counts = counts_matrix(starts[size_t(rep)]);
    AssignmentState c1 = place_uniform(corpus, counts, rng);
    AssignmentState c2 = place_uniform(corpus, counts, rng);
    CoupledPair pair = CoupledPair::make(std::move(c1), std::move(c2));
    begin_phase2(pair);
    out.initial_d.push_back(pair.disagreements);
    long steps = 0;
    while (pair.disagreements > 0) {
      if (steps >= config.t_limit)
        throw std::runtime_error(
            "run_phase2_experiment: replica exceeded t_limit");
      const long before = pair.disagreements;
      phase2_pairing_step(pair, rng);
      if (pair.disagreements > before) out.any_d_increase = true;
      ++steps;
      if (config.audit && !pairing_valid(pair))
        throw std::logic_error("run_phase2_experiment: pairing audit failed");
    }
    out.times.push_back(steps);
    out.t_max = std::max(out.t_max, steps);
    sum += double(steps);
    sumsq += double(steps) * double(steps);
  }
  const double n = double(config.replicas);
  out.mean = sum / n;
  out.variance = n > 1 ? (sumsq - sum * sum / n) / (n - 1) : 0.0;
  return out;
}

}  // namespace ldamix
