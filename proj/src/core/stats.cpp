#include "core/stats.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace htlab {

KsResult ks_two_sample(std::vector<double> xs, std::vector<double> ys, double alpha) {
  if (xs.empty() || ys.empty()) fail(Errc::InvalidArgument, "ks_two_sample: empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(Errc::InvalidArgument, "ks_two_sample: alpha must lie in (0, 1)");
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double n = static_cast<double>(xs.size());
  const double m = static_cast<double>(ys.size());

  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    const double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] <= v) ++i;
    while (j < ys.size() && ys[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }

  KsResult result;
  result.statistic = d;
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  result.critical = c * std::sqrt((n + m) / (n * m));
  result.pass = d <= result.critical;
  return result;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) fail(Errc::InvalidArgument, "quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail(Errc::InvalidArgument, "quantile: q must lie in [0, 1]");
  std::sort(xs.begin(), xs.end());
  if (xs.size() == 1) return xs[0];
  const double pos = q * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double stddev_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace htlab
