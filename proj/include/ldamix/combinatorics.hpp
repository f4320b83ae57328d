#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ldamix {

// All densities in this library live on the natural-log scale: a LogValue
// represents a positive weight by its logarithm, with kLogZero (-inf) as the
// dedicated zero-weight sentinel.  Raw binomials overflow beyond m ~ 500;
// log space is exact at every scale we touch.
using LogValue = double;
inline constexpr LogValue kLogZero = -std::numeric_limits<double>::infinity();

// ln C(n,k).  Out-of-range k yields the zero-weight sentinel rather than an
// error so kernel builders can treat forbidden moves uniformly.  k is
// canonicalized to min(k, n-k) so the symmetry C(n,k) = C(n,n-k) holds
// bit-for-bit, not merely to rounding.
inline LogValue log_binomial(long n, long k) {
  if (n < 0) throw std::invalid_argument("log_binomial: n must be >= 0");
  if (k < 0 || k > n) return kLogZero;
  long kk = std::min(k, n - k);
  return std::lgamma(double(n + 1)) - std::lgamma(double(kk + 1)) -
         std::lgamma(double(n - kk + 1));
}

// Cached ln(i!) for i = 0..max_n.  The chain kernels evaluate millions of
// binomials over a fixed small integer range; the table keeps them O(1) and
// bit-identical to the std::lgamma-based free function.
class LogGammaTable {
 public:
  explicit LogGammaTable(int max_n) : lg_(max_n + 1) {
    for (int i = 0; i <= max_n; ++i) lg_[i] = std::lgamma(double(i + 1));
  }

  double log_factorial(int i) const { return lg_[i]; }

  LogValue log_binomial(int n, int k) const {
    if (k < 0 || k > n) return kLogZero;
    int kk = std::min(k, n - k);
    return lg_[n] - lg_[kk] - lg_[n - kk];
  }

  int max_n() const { return int(lg_.size()) - 1; }

 private:
  std::vector<double> lg_;
};

// E[X^k (1-X)^{n-k}] for X uniform on [0,1]; equals 1/((n+1) C(n,k)).
inline double beta_moment(long n, long k) {
  if (n < 0) throw std::invalid_argument("beta_moment: n must be >= 0");
  if (k < 0 || k > n)
    throw std::invalid_argument("beta_moment: k must lie in [0,n]");
  return std::exp(-std::log(double(n + 1)) - log_binomial(n, k));
}

// Merge identity for a 2xK table of nonnegative integers a:
//   C(sum a, sum_j a_1j) * multi(sum_j a_1j; a_11..a_1K)
//                        * multi(sum_j a_2j; a_21..a_2K)
// = multi(sum a; a_11+a_21, ..., a_1K+a_2K) * prod_j C(a_1j+a_2j, a_1j),
// both sides being the full multinomial coefficient of the flattened table.
// Evaluated in log space; self-test utility, not a hot-path routine.
inline bool verify_merge_identity(const Eigen::MatrixXi& a,
                                  double tol = 1e-9) {
  if (a.rows() != 2 || a.cols() < 1)
    throw std::invalid_argument("verify_merge_identity: need a 2xK matrix");
  if ((a.array() < 0).any())
    throw std::invalid_argument("verify_merge_identity: entries must be >= 0");
  const long K = a.cols();
  long row1 = 0, row2 = 0;
  for (long j = 0; j < K; ++j) {
    row1 += a(0, j);
    row2 += a(1, j);
  }
  const long total = row1 + row2;
  auto lf = [](long x) { return std::lgamma(double(x + 1)); };

  double lhs = log_binomial(total, row1);
  lhs += lf(row1);
  for (long j = 0; j < K; ++j) lhs -= lf(a(0, j));
  lhs += lf(row2);
  for (long j = 0; j < K; ++j) lhs -= lf(a(1, j));

  double rhs = lf(total);
  for (long j = 0; j < K; ++j) rhs -= lf(a(0, j) + a(1, j));
  for (long j = 0; j < K; ++j) rhs += log_binomial(a(0, j) + a(1, j), a(0, j));

  return std::abs(lhs - rhs) <= tol;
}

// log(sum_i exp(v[i])) guarded against empty input and -inf entries.
inline double logsumexp(const Eigen::VectorXd& v) {
  if (v.size() == 0) return kLogZero;
  const double mx = v.maxCoeff();
  if (mx == kLogZero) return kLogZero;
  double s = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

// exp(d) / (1 + exp(d)) evaluated without overflow for any d; this is the
// two-way conditional probability used by every sampler in the library.
inline double sigmoid_log_ratio(double d) {
  if (d >= 0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

}  // namespace ldamix
