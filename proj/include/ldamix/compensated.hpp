#pragma once

namespace ldamix {

// Neumaier compensated accumulator.  The certificate polynomials have
// coefficients up to ~2.3e11 with heavy cancellation near the domain corners;
// naive summation loses ~11 digits there while the compensated sum stays
// within a few ulps of the true value.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar x) {
    Scalar t = s_ + x;
    if ((s_ >= 0 ? s_ : -s_) >= (x >= 0 ? x : -x)) {
      c_ += (s_ - t) + x;
    } else {
      c_ += (x - t) + s_;
    }
    s_ = t;
  }

  Scalar value() const { return s_ + c_; }

 private:
  Scalar s_ = 0;
  Scalar c_ = 0;
};

}  // namespace ldamix
