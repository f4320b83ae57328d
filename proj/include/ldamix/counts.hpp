#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace ldamix {

// Count vector (k11,k12,k21,k22) of topic-A tokens per (document, word) cell
// in the two-document/two-word family; the state of the lumped chain.
using Count4 = Eigen::Array4i;
// Normalized coordinates (a,b,c,d) = k/m.
using Norm4 = Eigen::Array4d;

// Word-occurrence table of a corpus: n(d,j) counts occurrences of word j in
// document d, with the dot sums that every posterior formula consumes.
struct CorpusCounts {
  int D = 0;
  int V = 0;
  Eigen::MatrixXi n;    // D x V
  Eigen::VectorXi row;  // n_{d.}
  Eigen::VectorXi col;  // n_{.j}
  long total = 0;       // n_{..}

  static CorpusCounts from_matrix(const Eigen::MatrixXi& counts) {
    if (counts.rows() < 1 || counts.cols() < 1)
      throw std::invalid_argument("CorpusCounts: empty matrix");
    if ((counts.array() < 0).any())
      throw std::invalid_argument("CorpusCounts: negative cell count");
    CorpusCounts c;
    c.D = int(counts.rows());
    c.V = int(counts.cols());
    c.n = counts;
    c.row = counts.rowwise().sum();
    c.col = counts.colwise().sum().transpose();
    c.total = counts.sum();
    return c;
  }

  bool is_two_by_two() const { return D == 2 && V == 2; }

  // The 2x2 cells flattened as (n11,n12,n21,n22).
  Count4 cells4() const {
    if (!is_two_by_two())
      throw std::logic_error("cells4: corpus is not 2x2");
    return Count4(n(0, 0), n(0, 1), n(1, 0), n(1, 1));
  }
};

// The fixed two-document, two-word benchmark family
//   n = (m/10) * [[3, 7], [6, 4]],
// i.e. n11 = 3m/10, n12 = 7m/10, n21 = 3m/5, n22 = 2m/5, so both documents
// have length m and the word margins are 9m/10 and 11m/10.  Everything the
// landscape/certificate machinery asserts is specific to these ratios.
inline CorpusCounts benchmark_corpus(int m) {
  if (m <= 0 || m % 10 != 0)
    throw std::invalid_argument("m must be divisible by 10");
  Eigen::MatrixXi n(2, 2);
  n << 3 * m / 10, 7 * m / 10, 6 * m / 10, 4 * m / 10;
  return CorpusCounts::from_matrix(n);
}

// Topic-A count table k(d,j) with its dot sums; cellwise dominated by the
// associated CorpusCounts.
struct TopicCounts {
  Eigen::MatrixXi k;
  Eigen::VectorXi row;  // k_{d.}
  Eigen::VectorXi col;  // k_{.j}
  long total = 0;       // k_{..}

  static TopicCounts from_matrix(const Eigen::MatrixXi& counts) {
    if ((counts.array() < 0).any())
      throw std::invalid_argument("TopicCounts: negative cell count");
    TopicCounts t;
    t.k = counts;
    t.row = counts.rowwise().sum();
    t.col = counts.colwise().sum().transpose();
    t.total = counts.sum();
    return t;
  }

  static TopicCounts from_cells4(const Count4& k4) {
    Eigen::MatrixXi k(2, 2);
    k << k4[0], k4[1], k4[2], k4[3];
    return from_matrix(k);
  }

  bool within(const CorpusCounts& corpus) const {
    return k.rows() == corpus.n.rows() && k.cols() == corpus.n.cols() &&
           (k.array() <= corpus.n.array()).all() && (k.array() >= 0).all();
  }
};

}  // namespace ldamix
