#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ldamix {

struct PowerFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

// Least squares of ln y on ln x; the scaling verdicts (mixing time,
// relaxation time, congestion vs m) all reduce to this fit.
inline PowerFit fit_power_law(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 3)
    throw std::invalid_argument("fit_power_law: need at least 3 points");
  const double n = double(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : pts) {
    if (!(x > 0) || !(y > 0))
      throw std::invalid_argument("fit_power_law: values must be positive");
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  PowerFit f;
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  if (vxx <= 0) throw std::invalid_argument("fit_power_law: degenerate x");
  f.slope = vxy / vxx;
  f.intercept = (sy - f.slope * sx) / n;
  f.r2 = (vyy > 0) ? (vxy * vxy) / (vxx * vyy) : 1.0;
  return f;
}

}  // namespace ldamix
