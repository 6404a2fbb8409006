#include "core/sphere_bins.hpp"

#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace htlab {

namespace {

constexpr int kAngleBins = 64;
constexpr int kCapBins = 100;

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double inv = 1.0 / static_cast<double>(base);
  double frac = inv;
  while (index > 0) {
    result += static_cast<double>(index % base) * frac;
    index /= base;
    frac *= inv;
  }
  return result;
}

// Halton points mapped to Gaussians via Box-Muller, then normalized: a fixed
// low-discrepancy direction set independent of any run seed.
std::vector<Eigen::VectorXd> cap_centers(int d, int count) {
  static const std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  const int pairs = (d + 1) / 2;
  std::vector<Eigen::VectorXd> centers;
  centers.reserve(count);
  std::uint64_t index = 1;
  while (static_cast<int>(centers.size()) < count) {
    Eigen::VectorXd v(d);
    for (int p = 0; p < pairs; ++p) {
      const double u1 = radical_inverse(index, primes[(2 * p) % 12]);
      const double u2 = radical_inverse(index, primes[(2 * p + 1) % 12]);
      const double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-12)));
      const double g1 = r * std::cos(2.0 * std::numbers::pi * u2);
      const double g2 = r * std::sin(2.0 * std::numbers::pi * u2);
      v(2 * p) = g1;
      if (2 * p + 1 < d) v(2 * p + 1) = g2;
    }
    ++index;
    const double norm = v.norm();
    if (norm < 1e-9) continue;
    centers.push_back(v / norm);
  }
  return centers;
}

}  // namespace

SphereBinning::SphereBinning(int d) : d_(d) {
  if (d < 1) fail(Errc::InvalidArgument, "SphereBinning: dimension must be >= 1");
  if (d == 1) {
    n_bins_ = 2;
    centers_.push_back(Eigen::VectorXd::Constant(1, 1.0));
    centers_.push_back(Eigen::VectorXd::Constant(1, -1.0));
  } else if (d == 2) {
    n_bins_ = kAngleBins;
    centers_.reserve(kAngleBins);
    for (int i = 0; i < kAngleBins; ++i) {
      const double angle =
          -std::numbers::pi + (i + 0.5) * (2.0 * std::numbers::pi / kAngleBins);
      Eigen::VectorXd c(2);
      c << std::cos(angle), std::sin(angle);
      centers_.push_back(std::move(c));
    }
  } else {
    n_bins_ = kCapBins;
    centers_ = cap_centers(d, kCapBins);
  }
}

int SphereBinning::bin_of(const Eigen::VectorXd& direction) const {
  if (direction.size() != d_) fail(Errc::DimensionMismatch, "bin_of: wrong direction dimension");
  if (d_ == 1) return direction(0) >= 0.0 ? 0 : 1;
  if (d_ == 2) {
    const double angle = std::atan2(direction(1), direction(0));
    int bin = static_cast<int>(std::floor((angle + std::numbers::pi) /
                                          (2.0 * std::numbers::pi / kAngleBins)));
    if (bin < 0) bin = 0;
    if (bin >= kAngleBins) bin = kAngleBins - 1;
    return bin;
  }
  int best = 0;
  double best_dot = -2.0;
  for (int i = 0; i < n_bins_; ++i) {
    const double dot = centers_[i].dot(direction);
    if (dot > best_dot) {
      best_dot = dot;
      best = i;
    }
  }
  return best;
}

std::vector<double> SphereBinning::histogram(const std::vector<Eigen::VectorXd>& directions,
                                             const std::vector<double>& weights) const {
  if (directions.size() != weights.size()) {
    fail(Errc::DimensionMismatch, "histogram: directions/weights size mismatch");
  }
  std::vector<double> h(n_bins_, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    h[bin_of(directions[i])] += weights[i];
    total += weights[i];
  }
  if (total > 0.0) {
    for (double& v : h) v /= total;
  }
  return h;
}

std::vector<double> SphereBinning::histogram(const std::vector<Eigen::VectorXd>& directions) const {
  return histogram(directions, std::vector<double>(directions.size(), 1.0));
}

int SphereBinning::antipodal_bin(int i) const {
  if (i < 0 || i >= n_bins_) fail(Errc::InvalidArgument, "antipodal_bin: index out of range");
  if (d_ == 1) return 1 - i;
  if (d_ == 2) return (i + kAngleBins / 2) % kAngleBins;
  return bin_of(-centers_[i]);
}

std::vector<double> SphereBinning::antipodal_histogram(const std::vector<double>& hist) const {
  if (static_cast<int>(hist.size()) != n_bins_) {
    fail(Errc::BinningMismatch, "antipodal_histogram: bin count mismatch");
  }
  std::vector<double> out(n_bins_, 0.0);
  for (int i = 0; i < n_bins_; ++i) out[antipodal_bin(i)] += hist[i];
  return out;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) fail(Errc::BinningMismatch, "total_variation: bin count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace htlab
