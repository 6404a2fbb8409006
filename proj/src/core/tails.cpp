#include "core/tails.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/error.hpp"
#include "core/spectral.hpp"
#include "core/stats.hpp"

namespace htlab {

namespace {

// #{values >= t} on an ascending-sorted vector.
std::size_t count_at_least(const std::vector<double>& sorted, double t) {
  return sorted.size() - (std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

void check_t_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty()) fail(Errc::InvalidArgument, "t_grid must be non-empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) fail(Errc::InvalidArgument, "t_grid values must be positive");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) {
      fail(Errc::InvalidArgument, "t_grid must be strictly increasing");
    }
  }
}

}  // namespace

HillEstimate hill_estimator(const std::vector<double>& norms, int k_order) {
  const std::size_t n = norms.size();
  if (k_order < 1) fail(Errc::InvalidArgument, "hill_estimator: k_order must be >= 1");
  if (static_cast<std::size_t>(k_order) >= n / 2) {
    fail(Errc::InvalidArgument, "hill_estimator: k_order must be below half the sample size");
  }
  for (double x : norms) {
    if (!(x >= 0.0)) fail(Errc::InvalidArgument, "hill_estimator: norms must be non-negative");
  }

  std::vector<double> top(norms);
  std::nth_element(top.begin(), top.begin() + k_order, top.end(), std::greater<double>());
  top.resize(k_order + 1);
  std::sort(top.begin(), top.end(), std::greater<double>());

  // Only the values above the threshold order statistic enter the estimate,
  // so zeros in the bulk (truncated samples of a law charging the origin's
  // vicinity) are acceptable; a zero threshold is not.
  const double x_k = top[k_order];
  if (!(x_k > 0.0)) {
    fail(Errc::DegenerateSample, "hill_estimator: threshold order statistic is not positive");
  }
  if (top[0] == x_k) {
    fail(Errc::DegenerateSample, "hill_estimator: top order statistics are all equal");
  }
  double acc = 0.0;
  for (int i = 0; i < k_order; ++i) acc += std::log(top[i] / x_k);

  HillEstimate est;
  est.k_order = k_order;
  est.chi_hat = static_cast<double>(k_order) / acc;
  est.stderr_ = est.chi_hat / std::sqrt(static_cast<double>(k_order));
  return est;
}

RadialCurve radial_homogeneity(const std::vector<double>& norms, double chi,
                               const std::vector<double>& t_grid) {
  if (norms.empty()) fail(Errc::InvalidArgument, "radial_homogeneity: empty sample");
  if (!(chi > 0.0)) fail(Errc::InvalidArgument, "radial_homogeneity: chi must be positive");
  check_t_grid(t_grid);

  std::vector<double> sorted(norms);
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  if (count_at_least(sorted, t_grid.front()) == 0) {
    std::ostringstream os;
    os << "no sample norm reaches the smallest threshold " << t_grid.front();
    fail(Errc::EmptyUpperTail, os.str());
  }

  RadialCurve curve;
  curve.t = t_grid;
  for (double t : t_grid) {
    const double p = static_cast<double>(count_at_least(sorted, t)) / n;
    const double scale = std::pow(t, chi);
    curve.value.push_back(scale * p);
    curve.stderr_.push_back(scale * std::sqrt(p * (1.0 - p) / n));
  }
  const double lo = *std::min_element(curve.value.begin(), curve.value.end());
  const double hi = *std::max_element(curve.value.begin(), curve.value.end());
  curve.flatness = (hi - lo) / mean_of(curve.value);
  return curve;
}

DirectionalTail directional_tail(const std::vector<Eigen::VectorXd>& samples,
                                 const Eigen::VectorXd& u, double chi,
                                 const std::vector<double>& t_grid) {
  if (samples.empty()) fail(Errc::InvalidArgument, "directional_tail: empty sample");
  if (!(chi > 0.0)) fail(Errc::InvalidArgument, "directional_tail: chi must be positive");
  if (u.size() != samples.front().size()) {
    fail(Errc::DimensionMismatch, "directional_tail: direction dimension");
  }
  if (!(u.norm() > 0.0)) fail(Errc::ZeroVector, "directional_tail: zero direction");
  check_t_grid(t_grid);

  std::vector<double> projected(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) projected[i] = u.dot(samples[i]);
  std::sort(projected.begin(), projected.end());
  const double n = static_cast<double>(projected.size());

  if (count_at_least(projected, t_grid.front()) == 0) {
    std::ostringstream os;
    os << "no sample has <u, x> reaching the smallest threshold " << t_grid.front();
    fail(Errc::EmptyUpperTail, os.str());
  }

  double acc = 0.0;
  double log_t_acc = 0.0;
  for (double t : t_grid) {
    const double p = static_cast<double>(count_at_least(projected, t)) / n;
    acc += std::pow(t, chi) * p;
    log_t_acc += std::log(t);
  }

  DirectionalTail tail;
  tail.c_hat = acc / static_cast<double>(t_grid.size());
  const double t_geo = std::exp(log_t_acc / static_cast<double>(t_grid.size()));
  const double p_geo = static_cast<double>(count_at_least(projected, t_geo)) / n;
  tail.stderr_ = std::pow(t_geo, chi) * std::sqrt(p_geo * (1.0 - p_geo) / n);
  return tail;
}

AngularMeasure angular_measure(const std::vector<Eigen::VectorXd>& samples,
                               double threshold_quantile) {
  if (samples.empty()) fail(Errc::InvalidArgument, "angular_measure: empty sample");
  if (!(threshold_quantile >= 0.95 && threshold_quantile <= 0.9999)) {
    fail(Errc::InvalidArgument, "angular_measure: threshold_quantile must lie in [0.95, 0.9999]");
  }
  const int d = static_cast<int>(samples.front().size());
  std::vector<double> norms(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) norms[i] = samples[i].norm();

  AngularMeasure result;
  result.threshold_quantile = threshold_quantile;
  result.threshold = quantile(norms, threshold_quantile);

  std::vector<Eigen::VectorXd> dirs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (norms[i] >= result.threshold && norms[i] > 0.0) {
      dirs.push_back(samples[i] / norms[i]);
    }
  }
  result.n_exceedances = static_cast<int>(dirs.size());
  if (result.n_exceedances < 200) {
    std::ostringstream os;
    os << "only " << result.n_exceedances << " exceedances above quantile "
       << threshold_quantile << " (need 200)";
    fail(Errc::TooFewExceedances, os.str());
  }
  result.histogram = SphereBinning(d).histogram(dirs);
  return result;
}

AngularComparison compare_angular_to_nu1(const std::vector<double>& angular_hist,
                                         const std::vector<double>& nu1_hist,
                                         const SphereBinning& binning, bool case_two) {
  if (angular_hist.size() != nu1_hist.size() ||
      static_cast<int>(angular_hist.size()) != binning.bin_count()) {
    fail(Errc::BinningMismatch, "compare_angular_to_nu1: histograms on different binnings");
  }

  AngularComparison cmp;
  cmp.mixture = case_two;
  {
    std::vector<double> sym_h = binning.antipodal_histogram(angular_hist);
    std::vector<double> sym_p = binning.antipodal_histogram(nu1_hist);
    for (std::size_t i = 0; i < sym_h.size(); ++i) {
      sym_h[i] = 0.5 * (sym_h[i] + angular_hist[i]);
      sym_p[i] = 0.5 * (sym_p[i] + nu1_hist[i]);
    }
    cmp.tv_projective = total_variation(sym_h, sym_p);
  }
  if (!case_two) {
    cmp.tv = total_variation(angular_hist, nu1_hist);
    return cmp;
  }

  const std::vector<double>& h = angular_hist;
  const std::vector<double>& p = nu1_hist;
  const std::vector<double> q = binning.antipodal_histogram(nu1_hist);

  double app = 0.0, apq = 0.0, aqq = 0.0, bp = 0.0, bq = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    app += p[i] * p[i];
    apq += p[i] * q[i];
    aqq += q[i] * q[i];
    bp += p[i] * h[i];
    bq += q[i] * h[i];
  }

  const auto residual_of = [&](double cp, double cm) {
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) s += std::abs(h[i] - cp * p[i] - cm * q[i]);
    return 0.5 * s;
  };

  double best_cp = 0.0, best_cm = 0.0;
  double best = residual_of(0.0, 0.0);
  const auto consider = [&](double cp, double cm) {
    if (!(cp >= 0.0) || !(cm >= 0.0)) return;
    const double r = residual_of(cp, cm);
    if (r < best) {
      best = r;
      best_cp = cp;
      best_cm = cm;
    }
  };
  const double det = app * aqq - apq * apq;
  if (std::abs(det) > 1e-12 * app * aqq) {
    consider((bp * aqq - bq * apq) / det, (bq * app - bp * apq) / det);
  }
  if (app > 0.0) consider(bp / app, 0.0);
  if (aqq > 0.0) consider(0.0, bq / aqq);

  cmp.c_plus = best_cp;
  cmp.c_minus = best_cm;
  cmp.tv = best;
  return cmp;
}

std::vector<MellinPoint> mellin_identity_check(const AffineMeasure& eta, double chi,
                                               const std::vector<double>& s_list,
                                               const StationarySampleSet& samples,
                                               std::uint64_t seed) {
  if (eta.dim() != 1 || samples.d != 1) {
    fail(Errc::WrongDimension, "mellin_identity_check requires d = 1");
  }
  if (samples.samples.empty()) fail(Errc::InvalidArgument, "mellin_identity_check: no samples");
  const LinearMeasure mu = linear_projection(eta);
  const AtomSampler sampler(eta);
  const std::size_t n = samples.samples.size();

  std::vector<MellinPoint> points;
  for (std::size_t si = 0; si < s_list.size(); ++si) {
    const double s = s_list[si];
    if (s < 0.0) fail(Errc::InvalidArgument, "mellin_identity_check: s must be >= 0");
    if (s >= chi) {
      std::ostringstream os;
      os << "s = " << s << " is not below chi = " << chi;
      fail(Errc::SAboveChi, os.str());
    }

    MellinPoint point;
    point.s = s;
    point.k = exact_k_d1(mu, s);
    if (s == 0.0) {
      point.pass = true;  // 1 * (1 - 1) = 0 and |y+|^0 - |(y-b)+|^0 = 0
      points.push_back(point);
      continue;
    }

    RngStream stream = RngStream::derived(seed, StreamOp::Mellin, si);
    std::vector<double> residuals(n);
    for (std::size_t i = 0; i < n; ++i) {
      const AffineAtom& atom = eta.atoms()[sampler.sample(stream)];
      const double a = atom.map.a(0, 0);
      const double b = atom.map.b(0);
      const double z = samples.samples[i](0);
      const double y_plus = std::max(a * z + b, 0.0);
      const double az_plus = std::max(a * z, 0.0);  // (y - b)+ without cancellation
      const double hs = std::pow(y_plus, s);
      residuals[i] = hs * (1.0 - point.k) - (hs - std::pow(az_plus, s));
    }
    point.residual = mean_of(residuals);
    point.stderr_ = stddev_of(residuals) / std::sqrt(static_cast<double>(n));
    point.pass = std::abs(point.residual) <= 3.0 * point.stderr_;
    points.push_back(point);
  }
  return points;
}

}  // namespace htlab
