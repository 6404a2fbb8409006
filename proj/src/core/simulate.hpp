#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "core/measure.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace htlab {

struct OrbitTrace {
  Eigen::VectorXd start;
  std::vector<Eigen::VectorXd> states;  // states[0] == start, states[k+1] = a x_k + b
  int length() const { return static_cast<int>(states.size()) - 1; }
};

// Exact iteration x_{k+1} = a_{k+1} x_k + b_{k+1} with i.i.d. atom draws.
// Throws Overflow (with the step index) once a state norm exceeds 1e300.
OrbitTrace forward_orbit(const AffineMeasure& eta, const Eigen::VectorXd& x0, int n,
                         std::uint64_t seed);

struct StationarySampleSet {
  int d = 0;
  std::vector<Eigen::VectorXd> samples;
  double truncation_tol = 0.0;
  int max_depth = 0;
  std::uint64_t seed = 0;
  std::int64_t truncation_failures = 0;
};

// One draw of the backward series b_1 + a_1 b_2 + a_1 a_2 b_3 + ... truncated
// once a geometric bound on the remaining tail falls below tol; nullopt when
// the bound is not met within max_depth steps.
std::optional<Eigen::VectorXd> backward_sample(const AffineMeasure& eta, double tol,
                                               int max_depth, std::uint64_t seed);

// n_samples independent backward draws on per-index derived streams: the
// sample at index i is identical for every n_samples >= i and every thread
// count. Throws ExcessiveTruncationFailures above a 0.1% failure fraction.
StationarySampleSet sample_stationary(const AffineMeasure& eta, int n_samples, double tol,
                                      int max_depth, std::uint64_t seed, int threads = 0);

struct StationarityResult {
  double statistic = 0.0;  // KS distance (max over projections when d > 1)
  double critical = 0.0;
  bool pass = false;
  int n_projections = 1;
};

// Pushes the sample set forward once through eta (fresh draws, random
// permutation pairing) and compares the two clouds by a two-sample KS test at
// significance 0.001; d > 1 takes the max statistic over 20 fixed random
// projections at the Bonferroni-adjusted level.
StationarityResult stationarity_check(const StationarySampleSet& samples,
                                      const AffineMeasure& eta, std::uint64_t seed);

struct MomentDiagnostic {
  double s = 0.0;
  std::vector<std::size_t> prefix_sizes;
  std::vector<double> prefix_moments;  // mean of |x|^s over each prefix
  double rel_spread = 0.0;             // (max - min) / mean over prefixes
  double growth_ratio = 0.0;           // last / first
};

// Empirical s-moments over growing sample prefixes; stabilization diagnoses a
// finite moment, steady growth diagnoses divergence.
MomentDiagnostic moment_prefix_diagnostic(const StationarySampleSet& samples, double s,
                                          const std::vector<std::size_t>& prefix_sizes);

}  // namespace htlab
