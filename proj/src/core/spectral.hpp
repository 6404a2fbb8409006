#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "core/measure.hpp"
#include "core/sphere_bins.hpp"

namespace htlab {

struct PowerIterParams {
  int n_particles = 2048;
  int n_steps = 600;
  int burn_in = 150;
  double resample_threshold = 0.5;

  void check() const;
};

struct AlphaEstimate {
  double alpha = 0.0;
  double stderr_ = 0.0;
  int n_steps = 0;
  int n_trials = 0;
  bool hit_zero = false;  // some product annihilated a direction; alpha is -inf
};

// Norm-renormalized product estimator; trial means are averaged, stderr is the
// sample deviation of trial means / sqrt(n_trials). Optional explicit start
// directions replace the derived random starts without shifting atom draws.
AlphaEstimate top_lyapunov(const LinearMeasure& mu, int n_steps, int n_trials,
                           std::uint64_t seed,
                           const std::vector<Eigen::VectorXd>* starts = nullptr,
                           int threads = 0);

// d = 1 only: sum of w_i log|a_i| (exact, -inf when a zero atom is present).
double exact_alpha_d1(const LinearMeasure& mu);

// d = 1 only: k(s) = sum of w_i |a_i|^s with 0^0 = 1 and 0^s = 0 for s > 0.
double exact_k_d1(const LinearMeasure& mu, double s);

struct KEstimate {
  double k = 0.0;
  double stderr_ = 0.0;
};

// Weighted particle power iteration on directions; multiplier |a u|^s, total
// weight log-growth averaged after burn-in, systematic resampling below the
// effective-sample-size threshold. Works for every d >= 1.
KEstimate k_particle_estimate(const LinearMeasure& mu, double s, const PowerIterParams& params,
                              std::uint64_t seed,
                              const std::vector<Eigen::VectorXd>* init_dirs = nullptr);

// Delegates to exact_k_d1 when d = 1 (stderr 0), otherwise runs particles.
KEstimate k_estimate(const LinearMeasure& mu, double s, const PowerIterParams& params,
                     std::uint64_t seed);

struct ChiResult {
  double chi = 0.0;
  double k_at_chi = 0.0;
  double stderr_at_chi = 0.0;
  double residual = 0.0;  // |k(chi) - 1|
  int evaluations = 0;
};

// Root of k(s) = 1 on (0, s_max]: coarse bracket then bisection with 3-stderr
// guard bands (exact bisection when d = 1).
ChiResult chi_solve(const LinearMeasure& mu, double s_max, const PowerIterParams& params,
                    std::uint64_t seed, std::optional<AlphaEstimate> alpha = std::nullopt,
                    int threads = 0);

struct DirectionMeasureResult {
  std::vector<Eigen::VectorXd> directions;  // unit vectors, uniform weights
  std::vector<double> weights;
  std::vector<double> histogram;  // SphereBinning(d) masses
  double residual_tv = 0.0;       // TV movement under one further operator step
};

// Stationary direction measure at exponent chi, realized as a resampled
// particle set; residual_tv > 0.05 signals non-convergence and is surfaced by
// callers, never silently accepted.
DirectionMeasureResult stationary_direction_measure(const LinearMeasure& mu, double chi,
                                                    const PowerIterParams& params,
                                                    std::uint64_t seed);

}  // namespace htlab
