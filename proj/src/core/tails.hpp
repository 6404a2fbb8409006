#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "core/measure.hpp"
#include "core/simulate.hpp"
#include "core/sphere_bins.hpp"

namespace htlab {

struct HillEstimate {
  double chi_hat = 0.0;
  double stderr_ = 0.0;
  int k_order = 0;
};

// Order-statistics tail-index estimate over the k_order largest values;
// scale-invariant by construction. Requires k_order < |norms| / 2.
HillEstimate hill_estimator(const std::vector<double>& norms, int k_order);

struct RadialCurve {
  std::vector<double> t;
  std::vector<double> value;    // t^chi * empirical upper-tail mass at t
  std::vector<double> stderr_;  // binomial propagation per grid point
  double flatness = 0.0;        // (max - min) / mean of value
};

// Homogeneity diagnostic: the curve is flat where the upper tail decays like
// t^-chi. t_grid must be strictly increasing; throws EmptyUpperTail when no
// value reaches the smallest threshold.
RadialCurve radial_homogeneity(const std::vector<double>& norms, double chi,
                               const std::vector<double>& t_grid);

struct DirectionalTail {
  double c_hat = 0.0;
  double stderr_ = 0.0;
};

// Tail constant of the half-space {x : <u, x> >= t}: mean of t^chi times the
// exceedance fraction over t_grid, stderr at the geometric-mean threshold.
DirectionalTail directional_tail(const std::vector<Eigen::VectorXd>& samples,
                                 const Eigen::VectorXd& u, double chi,
                                 const std::vector<double>& t_grid);

struct AngularMeasure {
  double threshold_quantile = 0.0;
  double threshold = 0.0;
  int n_exceedances = 0;
  std::vector<double> histogram;  // SphereBinning(d) masses, sums to 1
};

// Direction histogram of samples whose norm exceeds the given sample
// quantile; requires at least 200 exceedances.
AngularMeasure angular_measure(const std::vector<Eigen::VectorXd>& samples,
                               double threshold_quantile);

struct AngularComparison {
  bool mixture = false;  // false: plain TV; true: two-component fit
  double tv = 0.0;       // plain TV (mixture residual TV when mixture=true)
  // TV between the antipodally symmetrized histograms. The sphere-level sign
  // coordinate of the extreme-direction law relaxes on time scales of order
  // log t, far beyond reachable thresholds, while the projective part mixes
  // fast; this is the finite-threshold witness of proportionality.
  double tv_projective = 0.0;
  double c_plus = 0.0;
  double c_minus = 0.0;
};

// Case I: total-variation distance between the angular histogram and the
// direction-measure histogram. Case II (mixture=true): best nonnegative mix
// of the direction measure and its antipodal image, with the residual TV.
AngularComparison compare_angular_to_nu1(const std::vector<double>& angular_hist,
                                         const std::vector<double>& nu1_hist,
                                         const SphereBinning& binning, bool case_two);

struct MellinPoint {
  double s = 0.0;
  double k = 0.0;        // moment function at s
  double residual = 0.0; // mean of per-pair identity defect
  double stderr_ = 0.0;
  bool pass = false;     // |residual| <= 3 stderr
};

// d = 1 transform identity: with y = a z + b (fresh pair on a stationary z),
// E|y+|^s (1 - k(s)) equals E(|y+|^s - |(y-b)+|^s). Checked per s by the
// self-normalized mean of per-pair residuals.
std::vector<MellinPoint> mellin_identity_check(const AffineMeasure& eta, double chi,
                                               const std::vector<double>& s_list,
                                               const StationarySampleSet& samples,
                                               std::uint64_t seed);

}  // namespace htlab
