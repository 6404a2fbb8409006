#include "core/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace htlab {

namespace {

constexpr double kOverflowNorm = 1e300;

// Spectral norm of a Frobenius-normalized prefix via warm-started power
// iteration on P^T P; exact for d = 1 where the normalized prefix is +-1.
double prefix_spectral_norm(const Eigen::MatrixXd& prefix_hat, Eigen::VectorXd& warm) {
  const int d = static_cast<int>(prefix_hat.rows());
  if (d == 1) return 1.0;
  const Eigen::MatrixXd m = prefix_hat.transpose() * prefix_hat;
  double nu = 0.0;
  for (int it = 0; it < 10; ++it) {
    Eigen::VectorXd u = m * warm;
    nu = u.norm();
    if (nu == 0.0) return 0.0;
    warm = u / nu;
  }
  return std::sqrt(nu);
}

struct BackwardContext {
  const AffineMeasure& eta;
  AtomSampler sampler;
  double b_max;
  double log_tol_over_bmax;

  BackwardContext(const AffineMeasure& e, double tol)
      : eta(e), sampler(e), b_max(max_translation_norm(e)),
        log_tol_over_bmax(b_max > 0.0 ? std::log(tol / b_max) : 0.0) {}
};

std::optional<Eigen::VectorXd> backward_sample_stream(const BackwardContext& ctx, int max_depth,
                                                      RngStream& stream) {
  const int d = ctx.eta.dim();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  if (ctx.b_max == 0.0) return z;  // every term of the series is zero

  Eigen::MatrixXd prefix_hat = Eigen::MatrixXd::Identity(d, d);
  double log_scale = 0.0;
  Eigen::VectorXd warm = Eigen::VectorXd::Unit(d, 0);
  std::vector<double> log_p;
  log_p.reserve(64);

  for (int k = 0; k < max_depth; ++k) {
    const AffineAtom& atom = ctx.eta.atoms()[ctx.sampler.sample(stream)];
    z.noalias() += std::exp(log_scale) * (prefix_hat * atom.map.b);

    prefix_hat = prefix_hat * atom.map.a;
    const double fro = prefix_hat.norm();
    if (fro == 0.0) return z;  // annihilating prefix: the tail vanishes exactly
    log_scale += std::log(fro);
    prefix_hat /= fro;
    if (log_scale > 700.0) return std::nullopt;  // diverging product

    const double log_pk = log_scale + std::log(prefix_spectral_norm(prefix_hat, warm));
    log_p.push_back(log_pk);

    const int kk = static_cast<int>(log_p.size());
    if (kk < 8) continue;
    const int m = std::min(20, kk - 1);
    const double gamma_log = (log_p[kk - 1] - log_p[kk - 1 - m]) / static_cast<double>(m);
    const double gamma = std::max(0.5, std::exp(gamma_log));
    if (gamma >= 1.0) continue;  // no local decay yet, tail bound unavailable
    if (log_pk - std::log1p(-gamma) < ctx.log_tol_over_bmax) return z;
  }
  return std::nullopt;
}

}  // namespace

OrbitTrace forward_orbit(const AffineMeasure& eta, const Eigen::VectorXd& x0, int n,
                         std::uint64_t seed) {
  if (n < 1) fail(Errc::InvalidArgument, "forward_orbit: n must be >= 1");
  if (x0.size() != eta.dim()) fail(Errc::DimensionMismatch, "forward_orbit: x0 dimension");
  const AtomSampler sampler(eta);
  RngStream stream = RngStream::derived(seed, StreamOp::Orbit, 0);

  OrbitTrace trace;
  trace.start = x0;
  trace.states.reserve(n + 1);
  trace.states.push_back(x0);
  Eigen::VectorXd x = x0;
  for (int k = 0; k < n; ++k) {
    const AffineAtom& atom = eta.atoms()[sampler.sample(stream)];
    x = atom.map.apply(x);
    if (!(x.norm() <= kOverflowNorm)) {
      std::ostringstream os;
      os << "orbit state exceeded 1e300 in norm at step " << (k + 1);
      fail(Errc::Overflow, os.str());
    }
    trace.states.push_back(x);
  }
  return trace;
}

std::optional<Eigen::VectorXd> backward_sample(const AffineMeasure& eta, double tol,
                                               int max_depth, std::uint64_t seed) {
  if (!(tol > 0.0)) fail(Errc::InvalidArgument, "backward_sample: tol must be positive");
  if (max_depth < 1) fail(Errc::InvalidArgument, "backward_sample: max_depth must be >= 1");
  const BackwardContext ctx(eta, tol);
  RngStream stream = RngStream::derived(seed, StreamOp::Backward, 0);
  return backward_sample_stream(ctx, max_depth, stream);
}

StationarySampleSet sample_stationary(const AffineMeasure& eta, int n_samples, double tol,
                                      int max_depth, std::uint64_t seed, int threads) {
  if (n_samples < 1) fail(Errc::InvalidArgument, "sample_stationary: n_samples must be >= 1");
  if (!(tol > 0.0)) fail(Errc::InvalidArgument, "sample_stationary: tol must be positive");
  if (max_depth < 1) fail(Errc::InvalidArgument, "sample_stationary: max_depth must be >= 1");

  const BackwardContext ctx(eta, tol);
  std::vector<Eigen::VectorXd> buffer(n_samples);
  std::vector<std::uint8_t> failed(n_samples, 0);

  parallel_chunks(n_samples, 1024, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream = RngStream::derived(seed, StreamOp::Backward, i);
      auto z = backward_sample_stream(ctx, max_depth, stream);
      if (z) {
        buffer[i] = std::move(*z);
      } else {
        failed[i] = 1;
      }
    }
  });

  StationarySampleSet set;
  set.d = eta.dim();
  set.truncation_tol = tol;
  set.max_depth = max_depth;
  set.seed = seed;
  set.samples.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    if (failed[i]) {
      ++set.truncation_failures;
    } else {
      set.samples.push_back(std::move(buffer[i]));
    }
  }
  if (static_cast<double>(set.truncation_failures) > 0.001 * static_cast<double>(n_samples)) {
    std::ostringstream os;
    os << set.truncation_failures << " of " << n_samples
       << " backward samples failed to truncate within depth " << max_depth;
    fail(Errc::ExcessiveTruncationFailures, os.str());
  }
  return set;
}

StationarityResult stationarity_check(const StationarySampleSet& samples,
                                      const AffineMeasure& eta, std::uint64_t seed) {
  const std::size_t n = samples.samples.size();
  if (n < 10) fail(Errc::InvalidArgument, "stationarity_check: too few samples");
  if (samples.d != eta.dim()) fail(Errc::DimensionMismatch, "stationarity_check: dimension");
  const int d = eta.dim();
  const AtomSampler sampler(eta);

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  RngStream perm_stream = RngStream::derived(seed, StreamOp::Stationarity, 0);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(perm_stream.uniform() * double(i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }

  RngStream draw_stream = RngStream::derived(seed, StreamOp::Stationarity, 1);
  std::vector<Eigen::VectorXd> pushed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AffineAtom& atom = eta.atoms()[sampler.sample(draw_stream)];
    pushed[i] = atom.map.apply(samples.samples[perm[i]]);
  }

  StationarityResult result;
  if (d == 1) {
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = samples.samples[i](0);
      ys[i] = pushed[i](0);
    }
    const KsResult ks = ks_two_sample(std::move(xs), std::move(ys), 0.001);
    result.statistic = ks.statistic;
    result.critical = ks.critical;
    result.pass = ks.pass;
    result.n_projections = 1;
    return result;
  }

  const int n_proj = 20;
  result.n_projections = n_proj;
  result.pass = true;
  for (int p = 0; p < n_proj; ++p) {
    RngStream proj_stream = RngStream::derived(seed, StreamOp::Projections, p);
    const Eigen::VectorXd u = proj_stream.unit_vector(d);
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = u.dot(samples.samples[i]);
      ys[i] = u.dot(pushed[i]);
    }
    const KsResult ks = ks_two_sample(std::move(xs), std::move(ys), 0.001 / n_proj);
    result.statistic = std::max(result.statistic, ks.statistic);
    result.critical = ks.critical;
    result.pass = result.pass && ks.pass;
  }
  return result;
}

MomentDiagnostic moment_prefix_diagnostic(const StationarySampleSet& samples, double s,
                                          const std::vector<std::size_t>& prefix_sizes) {
  if (!(s > 0.0)) fail(Errc::InvalidArgument, "moment_prefix_diagnostic: s must be positive");
  if (prefix_sizes.empty()) {
    fail(Errc::InvalidArgument, "moment_prefix_diagnostic: no prefixes requested");
  }
  MomentDiagnostic diag;
  diag.s = s;
  diag.prefix_sizes = prefix_sizes;
  std::sort(diag.prefix_sizes.begin(), diag.prefix_sizes.end());
  if (diag.prefix_sizes.back() > samples.samples.size()) {
    fail(Errc::InvalidArgument, "moment_prefix_diagnostic: prefix exceeds sample count");
  }

  double acc = 0.0;
  std::size_t done = 0;
  for (std::size_t target : diag.prefix_sizes) {
    for (; done < target; ++done) acc += std::pow(samples.samples[done].norm(), s);
    diag.prefix_moments.push_back(acc / static_cast<double>(target));
  }
  const double lo = *std::min_element(diag.prefix_moments.begin(), diag.prefix_moments.end());
  const double hi = *std::max_element(diag.prefix_moments.begin(), diag.prefix_moments.end());
  diag.rel_spread = (hi - lo) / mean_of(diag.prefix_moments);
  diag.growth_ratio = diag.prefix_moments.back() / diag.prefix_moments.front();
  return diag;
}

}  // namespace htlab
