#pragma once

#include <vector>

#include <Eigen/Dense>

namespace htlab {

// Deterministic direction binning: 2 sign bins for d = 1, 64 equal-angle bins
// for d = 2, ~100 spherical caps around a fixed low-discrepancy direction set
// for d >= 3 (nearest-center assignment).
class SphereBinning {
 public:
  explicit SphereBinning(int d);

  int dim() const { return d_; }
  int bin_count() const { return n_bins_; }
  int bin_of(const Eigen::VectorXd& direction) const;
  const std::vector<Eigen::VectorXd>& centers() const { return centers_; }

  std::vector<double> histogram(const std::vector<Eigen::VectorXd>& directions,
                                const std::vector<double>& weights) const;
  std::vector<double> histogram(const std::vector<Eigen::VectorXd>& directions) const;

  // Bin holding the antipode of bin i's center (exact for d <= 2).
  int antipodal_bin(int i) const;
  // Pushes each bin's mass to its antipodal bin.
  std::vector<double> antipodal_histogram(const std::vector<double>& hist) const;

 private:
  int d_;
  int n_bins_;
  std::vector<Eigen::VectorXd> centers_;
};

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace htlab
