#pragma once

#include <cstddef>
#include <vector>

namespace htlab {

struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;
  bool pass = false;
};

// Two-sample Kolmogorov-Smirnov test at significance alpha. Ties are handled
// by advancing both samples through equal values before comparing CDFs.
KsResult ks_two_sample(std::vector<double> xs, std::vector<double> ys, double alpha);

// Quantile by linear interpolation on the sorted sample, q in [0, 1].
double quantile(std::vector<double> xs, double q);

double mean_of(const std::vector<double>& xs);
double stddev_of(const std::vector<double>& xs);  // sample stddev, 0 if n < 2

}  // namespace htlab
