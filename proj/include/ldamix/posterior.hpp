#pragma once

#include <cmath>
#include <stdexcept>

#include "ldamix/combinatorics.hpp"
#include "ldamix/counts.hpp"
#include "ldamix/landscape.hpp"

namespace ldamix {

// Unnormalized log-densities of the three chains' stationary laws.
//
//   pi_R : per-assignment posterior weight of the collapsed two-topic model;
//          constant across all assignments sharing the same count table k.
//   pi_L : pi_R times the class multiplicity prod_{d,j} C(n_dj, k_dj) -- the
//          stationary law of the lumped count chain.
//   pi_Z : exp(m * g(k/m)), the smooth surrogate the Metropolis comparison
//          chain targets; defined only for the benchmark family.
//
// All three are exposed unnormalized; normalization happens only in the
// exact-analysis module by logsumexp over the enumerated grid.

// Generalized per-assignment weight for a D x V corpus with two topics:
//   ln C(n.., k..) - ln[(k..+1)(n..-k..+1)]
//   - sum_d ln C(n_d., k_d.) - sum_j ln C(n_.j, k_.j).
inline LogValue log_pi_r_general(const CorpusCounts& corpus,
                                 const TopicCounts& k) {
  if (!k.within(corpus))
    throw std::invalid_argument("log_pi_r_general: k outside corpus bounds");
  double v = log_binomial(corpus.total, k.total);
  v -= std::log(double(k.total + 1) * double(corpus.total - k.total + 1));
  for (int d = 0; d < corpus.D; ++d) v -= log_binomial(corpus.row[d], k.row[d]);
  for (int j = 0; j < corpus.V; ++j) v -= log_binomial(corpus.col[j], k.col[j]);
  return v;
}

inline LogValue log_pi_l_general(const CorpusCounts& corpus,
                                 const TopicCounts& k) {
  double v = log_pi_r_general(corpus, k);
  for (int d = 0; d < corpus.D; ++d)
    for (int j = 0; j < corpus.V; ++j)
      v += log_binomial(corpus.n(d, j), k.k(d, j));
  return v;
}

// Two-document/two-word specializations (the case all chain machinery runs
// on); they delegate to the general implementation so the two agree
// bit-for-bit.
inline LogValue log_pi_R(const CorpusCounts& corpus, const TopicCounts& k) {
  if (!corpus.is_two_by_two())
    throw std::invalid_argument("log_pi_R: corpus must be 2x2");
  return log_pi_r_general(corpus, k);
}

inline LogValue log_pi_L(const CorpusCounts& corpus, const TopicCounts& k) {
  if (!corpus.is_two_by_two())
    throw std::invalid_argument("log_pi_L: corpus must be 2x2");
  return log_pi_l_general(corpus, k);
}

// Cached-table density evaluator for a fixed 2x2 corpus; the hot path for
// kernel builders and simulators.  Produces values bit-identical to the
// general free functions (same lgamma terms, same summation order).
class DensityTable {
 public:
  explicit DensityTable(const CorpusCounts& corpus)
      : corpus_(corpus), lg_(int(corpus.total) + 1) {
    if (!corpus.is_two_by_two())
      throw std::invalid_argument("DensityTable: corpus must be 2x2");
    n_ = corpus.cells4();
    const CorpusCounts bench = (corpus.row[0] % 10 == 0 && corpus.row[0] > 0)
                                   ? benchmark_corpus(int(corpus.row[0]))
                                   : CorpusCounts{};
    is_benchmark_ = bench.D == 2 && (bench.n.array() == corpus.n.array()).all();
  }

  const CorpusCounts& corpus() const { return corpus_; }
  const Count4& cells() const { return n_; }
  bool is_benchmark() const { return is_benchmark_; }
  // Document length m of the benchmark family.
  int m() const { return int(corpus_.row[0]); }

  LogValue log_pi_r(const Count4& k) const {
    const long t = long(k[0]) + k[1] + k[2] + k[3];
    const long r1 = long(k[0]) + k[1], r2 = long(k[2]) + k[3];
    const long c1 = long(k[0]) + k[2], c2 = long(k[1]) + k[3];
    double v = lg_.log_binomial(int(corpus_.total), int(t));
    v -= std::log(double(t + 1) * double(corpus_.total - t + 1));
    v -= lg_.log_binomial(corpus_.row[0], int(r1));
    v -= lg_.log_binomial(corpus_.row[1], int(r2));
    v -= lg_.log_binomial(corpus_.col[0], int(c1));
    v -= lg_.log_binomial(corpus_.col[1], int(c2));
    return v;
  }

  LogValue log_pi_l(const Count4& k) const {
    double v = log_pi_r(k);
    for (int c = 0; c < 4; ++c) v += lg_.log_binomial(n_[c], k[c]);
    return v;
  }

  LogValue log_pi_z(const Count4& k) const {
    if (!is_benchmark_)
      throw std::logic_error("log_pi_z: corpus is not the benchmark family");
    const double m = double(corpus_.row[0]);
    return m * g_eval(k[0] / m, k[1] / m, k[2] / m, k[3] / m);
  }

  bool in_grid(const Count4& k) const {
    return (k >= 0).all() && (k <= n_).all();
  }

 private:
  CorpusCounts corpus_;
  Count4 n_ = Count4::Zero();
  LogGammaTable lg_;
  bool is_benchmark_ = false;
};

inline LogValue log_pi_Z(const CorpusCounts& corpus, const Count4& k) {
  return DensityTable(corpus).log_pi_z(k);
}

}  // namespace ldamix
