#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ldamix/counts.hpp"
#include "ldamix/rng.hpp"

namespace ldamix {

// Full per-position topic assignment over a corpus.  Positions are laid out
// cell-major: cell (d,j) = d*V + j occupies the contiguous index range
// [cell_off[cell], cell_off[cell+1]), so documents are contiguous and within
// a document positions are grouped by word.  label 1 = topic A, 0 = topic B.
// The cached count table k and its dot sums are maintained incrementally and
// always equal a recount from the labels.
struct AssignmentState {
  CorpusCounts corpus;
  std::vector<int> cell_off;        // D*V + 1 prefix offsets
  std::vector<std::uint8_t> label;  // one entry per position
  Eigen::MatrixXi k;                // cached topic-A counts per cell
  Eigen::VectorXi krow, kcol;       // cached k_{d.}, k_{.j}
  long ktot = 0;                    // cached k_{..}

  static AssignmentState empty(const CorpusCounts& corpus) {
    AssignmentState s;
    s.corpus = corpus;
    s.cell_off.assign(size_t(corpus.D) * corpus.V + 1, 0);
    for (int d = 0; d < corpus.D; ++d)
      for (int j = 0; j < corpus.V; ++j) {
        const int cell = d * corpus.V + j;
        s.cell_off[cell + 1] = s.cell_off[cell] + corpus.n(d, j);
      }
    s.label.assign(size_t(corpus.total), 0);
    s.k = Eigen::MatrixXi::Zero(corpus.D, corpus.V);
    s.krow = Eigen::VectorXi::Zero(corpus.D);
    s.kcol = Eigen::VectorXi::Zero(corpus.V);
    s.ktot = 0;
    return s;
  }

  // Canonical representative of the class k: within each cell the topic-A
  // labels occupy either the lowest (pack_low) or highest position indices.
  static AssignmentState from_counts(const CorpusCounts& corpus,
                                     const Eigen::MatrixXi& counts,
                                     bool pack_low = true) {
    AssignmentState s = empty(corpus);
    if (counts.rows() != corpus.D || counts.cols() != corpus.V ||
        (counts.array() < 0).any() ||
        (counts.array() > corpus.n.array()).any())
      throw std::invalid_argument("AssignmentState: counts outside bounds");
    for (int d = 0; d < corpus.D; ++d)
      for (int j = 0; j < corpus.V; ++j) {
        const int cell = d * corpus.V + j;
        const int cnt = counts(d, j), sz = corpus.n(d, j);
        for (int i = 0; i < cnt; ++i) {
          const int pos = s.cell_off[cell] + (pack_low ? i : sz - 1 - i);
          s.label[pos] = 1;
        }
      }
    s.k = counts;
    s.krow = counts.rowwise().sum();
    s.kcol = counts.colwise().sum().transpose();
    s.ktot = counts.sum();
    return s;
  }

  int num_positions() const { return int(label.size()); }

  int cell_of(int pos) const {
    auto it = std::upper_bound(cell_off.begin(), cell_off.end(), pos);
    return int(it - cell_off.begin()) - 1;
  }

  // Flip position pos to new_label, maintaining the cached counts.
  void set_label(int pos, std::uint8_t new_label) {
    const std::uint8_t old = label[pos];
    if (old == new_label) return;
    const int cell = cell_of(pos);
    const int d = cell / corpus.V, j = cell % corpus.V;
    const int delta = new_label ? 1 : -1;
    label[pos] = new_label;
    k(d, j) += delta;
    krow[d] += delta;
    kcol[j] += delta;
    ktot += delta;
  }

  Count4 count4() const {
    if (!corpus.is_two_by_two())
      throw std::logic_error("count4: corpus is not 2x2");
    return Count4(k(0, 0), k(0, 1), k(1, 0), k(1, 1));
  }

  Eigen::MatrixXi recount() const {
    Eigen::MatrixXi r = Eigen::MatrixXi::Zero(corpus.D, corpus.V);
    for (int d = 0; d < corpus.D; ++d)
      for (int j = 0; j < corpus.V; ++j) {
        const int cell = d * corpus.V + j;
        for (int p = cell_off[cell]; p < cell_off[cell + 1]; ++p)
          r(d, j) += label[p];
      }
    return r;
  }

  bool cache_consistent() const {
    const Eigen::MatrixXi r = recount();
    return (r.array() == k.array()).all() && krow == r.rowwise().sum() &&
           kcol == Eigen::VectorXi(r.colwise().sum().transpose()) &&
           ktot == r.sum();
  }
};

// Parameters of the two-topic generative model: Dirichlet priors alpha (over
// topics) and beta (over words), with optional fixed theta (D x 2 per-doc
// topic probabilities) and phi (2 x V per-topic word probabilities).
struct GenerativeParams {
  Eigen::Vector2d alpha = Eigen::Vector2d::Ones();
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(2);
  std::optional<Eigen::MatrixXd> theta;
  std::optional<Eigen::MatrixXd> phi;

  void validate(int D) const {
    if (!(alpha.array() > 0).all() || !(beta.array() > 0).all())
      throw std::invalid_argument("GenerativeParams: priors must be positive");
    if (theta) {
      if (theta->rows() != D || theta->cols() != 2)
        throw std::invalid_argument("GenerativeParams: theta must be D x 2");
      if (((theta->rowwise().sum().array() - 1.0).abs() > 1e-12).any())
        throw std::invalid_argument("GenerativeParams: theta rows must sum 1");
    }
    if (phi) {
      if (phi->rows() != 2 || phi->cols() != beta.size())
        throw std::invalid_argument("GenerativeParams: phi must be 2 x V");
      if (((phi->rowwise().sum().array() - 1.0).abs() > 1e-12).any())
        throw std::invalid_argument("GenerativeParams: phi rows must sum 1");
    }
  }
};

namespace detail {

// Marsaglia-Tsang gamma variate (shape >= 0), driven by the counter RNG so
// corpus generation is reproducible from (seed, stream).
inline double gamma_draw(CounterRng& rng, double shape) {
  if (shape < 1.0) {
    const double u = std::max(rng.next_double(), 1e-300);
    return gamma_draw(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    // Polar Box-Muller normal.
    double x, u1, u2, s;
    do {
      u1 = 2.0 * rng.next_double() - 1.0;
      u2 = 2.0 * rng.next_double() - 1.0;
      s = u1 * u1 + u2 * u2;
    } while (s >= 1.0 || s == 0.0);
    x = u1 * std::sqrt(-2.0 * std::log(s) / s);
    const double v = (1.0 + c * x) * (1.0 + c * x) * (1.0 + c * x);
    if (v <= 0) continue;
    const double u = rng.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline Eigen::VectorXd dirichlet_draw(CounterRng& rng,
                                      const Eigen::VectorXd& alpha) {
  Eigen::VectorXd g(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i)
    g[i] = std::max(gamma_draw(rng, alpha[i]), 1e-300);
  return g / g.sum();
}

}  // namespace detail

// Samples a corpus from the generative model: theta_d ~ Dirichlet(alpha) and
// phi_t ~ Dirichlet(beta) unless fixed, then per position an independent
// (topic, word) pair.  Returns the realized counts and the true assignment.
inline std::pair<CorpusCounts, AssignmentState> generate_corpus(
    const GenerativeParams& params, const std::vector<int>& doc_lengths,
    std::uint64_t seed) {
  const int D = int(doc_lengths.size());
  if (D < 1) throw std::invalid_argument("generate_corpus: no documents");
  for (int len : doc_lengths)
    if (len <= 0)
      throw std::invalid_argument("generate_corpus: nonpositive doc length");
  params.validate(D);
  const int V = int(params.beta.size());

  CounterRng rng(seed, /*stream=*/0);
  Eigen::MatrixXd theta(D, 2);
  if (params.theta) {
    theta = *params.theta;
  } else {
    for (int d = 0; d < D; ++d)
      theta.row(d) = detail::dirichlet_draw(rng, params.alpha).transpose();
  }
  Eigen::MatrixXd phi(2, V);
  if (params.phi) {
    phi = *params.phi;
  } else {
    for (int t = 0; t < 2; ++t)
      phi.row(t) = detail::dirichlet_draw(rng, params.beta).transpose();
  }

  Eigen::MatrixXi n = Eigen::MatrixXi::Zero(D, V);
  // Labels per cell in generation order; flattened after counts are known.
  std::vector<std::vector<std::uint8_t>> cell_labels(size_t(D) * V);
  for (int d = 0; d < D; ++d) {
    for (int p = 0; p < doc_lengths[d]; ++p) {
      const bool topic_a = rng.next_double() < theta(d, 0);
      const Eigen::VectorXd w = phi.row(topic_a ? 0 : 1).transpose();
      double u = rng.next_double();
      int j = 0;
      while (j + 1 < V && u >= w[j]) u -= w[j], ++j;
      n(d, j) += 1;
      cell_labels[size_t(d) * V + j].push_back(topic_a ? 1 : 0);
    }
  }

  const CorpusCounts corpus = CorpusCounts::from_matrix(n);
  AssignmentState state = AssignmentState::empty(corpus);
  for (size_t cell = 0; cell < cell_labels.size(); ++cell)
    for (size_t i = 0; i < cell_labels[cell].size(); ++i)
      if (cell_labels[cell][i])
        state.set_label(state.cell_off[cell] + int(i), 1);
  return {corpus, state};
}

}  // namespace ldamix
