#include "core/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace htlab {

namespace {

constexpr int kParticleBlock = 256;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

struct ParticleEnsemble {
  std::vector<Eigen::VectorXd> dirs;
  std::vector<double> weights;  // normalized to sum 1
  std::vector<RngStream> block_streams;
  RngStream resample_stream;

  explicit ParticleEnsemble(std::uint64_t seed)
      : resample_stream(RngStream::derived(seed, StreamOp::KResample, 0)) {}
};

void init_particles(ParticleEnsemble& ens, const LinearMeasure& mu, int n_particles,
                    std::uint64_t seed, const std::vector<Eigen::VectorXd>* init_dirs) {
  const int d = mu.dim();
  ens.dirs.resize(n_particles);
  ens.weights.assign(n_particles, 1.0 / static_cast<double>(n_particles));
  if (init_dirs != nullptr) {
    if (static_cast<int>(init_dirs->size()) != n_particles) {
      fail(Errc::InvalidArgument, "init_dirs size must match n_particles");
    }
    for (int j = 0; j < n_particles; ++j) {
      const double norm = (*init_dirs)[j].norm();
      if (norm < 1e-300) fail(Errc::ZeroVector, "init direction has zero norm");
      ens.dirs[j] = (*init_dirs)[j] / norm;
    }
  } else {
    for (int j = 0; j < n_particles; ++j) {
      RngStream init = RngStream::derived(seed, StreamOp::InitDirections, j);
      ens.dirs[j] = init.unit_vector(d);
    }
  }
  const int n_blocks = (n_particles + kParticleBlock - 1) / kParticleBlock;
  ens.block_streams.clear();
  ens.block_streams.reserve(n_blocks);
  for (int b = 0; b < n_blocks; ++b) {
    ens.block_streams.push_back(RngStream::derived(seed, StreamOp::KEstimate, b));
  }
}

// One operator step: draw a matrix per particle, scale the weight by |a u|^s,
// renormalize directions and weights. Returns log total-weight growth.
double ensemble_step(ParticleEnsemble& ens, const LinearMeasure& mu, const AtomSampler& sampler,
                     double s) {
  const int n = static_cast<int>(ens.dirs.size());
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    RngStream& stream = ens.block_streams[j / kParticleBlock];
    const int idx = sampler.sample(stream);
    if (ens.weights[j] == 0.0) continue;
    const Eigen::MatrixXd& a = mu.atoms()[idx].a;
    Eigen::VectorXd v = a * ens.dirs[j];
    const double norm = v.norm();
    if (norm == 0.0) {
      ens.weights[j] = 0.0;
      continue;
    }
    ens.dirs[j] = v / norm;
    ens.weights[j] *= std::pow(norm, s);
    total += ens.weights[j];
  }
  if (total <= 0.0) {
    fail(Errc::DegenerateParticles, "all particle weights vanished");
  }
  for (double& w : ens.weights) w /= total;
  return std::log(total);
}

void systematic_resample(ParticleEnsemble& ens) {
  const int n = static_cast<int>(ens.dirs.size());
  const double r = ens.resample_stream.uniform();
  std::vector<Eigen::VectorXd> new_dirs(n);
  double cum = ens.weights[0];
  int i = 0;
  for (int j = 0; j < n; ++j) {
    const double u = (static_cast<double>(j) + r) / static_cast<double>(n);
    while (u > cum && i + 1 < n) {
      ++i;
      cum += ens.weights[i];
    }
    new_dirs[j] = ens.dirs[i];
  }
  ens.dirs = std::move(new_dirs);
  ens.weights.assign(n, 1.0 / static_cast<double>(n));
}

double effective_sample_size(const std::vector<double>& weights) {
  double ss = 0.0;
  for (double w : weights) ss += w * w;
  return ss > 0.0 ? 1.0 / ss : 0.0;
}

void maybe_resample(ParticleEnsemble& ens, double threshold) {
  const double ess = effective_sample_size(ens.weights);
  if (ess < threshold * static_cast<double>(ens.weights.size())) {
    systematic_resample(ens);
  }
}

}  // namespace

void PowerIterParams::check() const {
  if (n_particles <= 0 || n_steps <= 0 || burn_in < 0) {
    fail(Errc::InvalidArgument, "PowerIterParams: counts must be positive");
  }
  if (burn_in >= n_steps) {
    fail(Errc::InvalidArgument, "PowerIterParams: burn_in must be below n_steps");
  }
  if (!(resample_threshold > 0.0) || resample_threshold > 1.0) {
    fail(Errc::InvalidArgument, "PowerIterParams: resample_threshold must lie in (0, 1]");
  }
}

AlphaEstimate top_lyapunov(const LinearMeasure& mu, int n_steps, int n_trials,
                           std::uint64_t seed, const std::vector<Eigen::VectorXd>* starts,
                           int threads) {
  if (n_steps <= 0 || n_trials <= 0) {
    fail(Errc::InvalidArgument, "top_lyapunov: steps and trials must be positive");
  }
  if (starts != nullptr && static_cast<int>(starts->size()) != n_trials) {
    fail(Errc::InvalidArgument, "top_lyapunov: starts size must match n_trials");
  }
  const int d = mu.dim();
  const AtomSampler sampler(mu);
  std::vector<double> trial_means(n_trials, 0.0);

  parallel_chunks(n_trials, 4, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      Eigen::VectorXd u;
      if (starts != nullptr) {
        const double norm = (*starts)[t].norm();
        if (norm < 1e-300) fail(Errc::ZeroVector, "top_lyapunov: zero start direction");
        u = (*starts)[t] / norm;
      } else {
        RngStream init = RngStream::derived(seed, StreamOp::InitDirections, t);
        u = init.unit_vector(d);
      }
      RngStream stream = RngStream::derived(seed, StreamOp::Lyapunov, t);
      double acc = 0.0;
      bool zero = false;
      Eigen::VectorXd v(d);
      for (int k = 0; k < n_steps; ++k) {
        const int idx = sampler.sample(stream);
        v.noalias() = mu.atoms()[idx].a * u;
        const double norm = v.norm();
        if (norm == 0.0) {
          zero = true;
          break;
        }
        acc += std::log(norm);
        u = v / norm;
      }
      trial_means[t] = zero ? -kInf : acc / static_cast<double>(n_steps);
    }
  });

  AlphaEstimate est;
  est.n_steps = n_steps;
  est.n_trials = n_trials;
  for (double m : trial_means) {
    if (std::isinf(m)) est.hit_zero = true;
  }
  if (est.hit_zero) {
    est.alpha = -kInf;
    est.stderr_ = 0.0;
    return est;
  }
  double mean = 0.0;
  for (double m : trial_means) mean += m;
  est.alpha = mean / static_cast<double>(n_trials);
  est.stderr_ = sample_stddev(trial_means) / std::sqrt(static_cast<double>(n_trials));
  return est;
}

double exact_alpha_d1(const LinearMeasure& mu) {
  if (mu.dim() != 1) fail(Errc::WrongDimension, "exact_alpha_d1 requires d = 1");
  double alpha = 0.0;
  for (const LinearAtom& atom : mu.atoms()) {
    const double a = std::abs(atom.a(0, 0));
    if (a == 0.0) return -kInf;
    alpha += atom.weight * std::log(a);
  }
  return alpha;
}

double exact_k_d1(const LinearMeasure& mu, double s) {
  if (mu.dim() != 1) fail(Errc::WrongDimension, "exact_k_d1 requires d = 1");
  if (s < 0.0) fail(Errc::InvalidArgument, "exact_k_d1: s must be >= 0");
  if (s == 0.0) return 1.0;
  double k = 0.0;
  for (const LinearAtom& atom : mu.atoms()) {
    const double a = std::abs(atom.a(0, 0));
    if (a > 0.0) k += atom.weight * std::pow(a, s);
  }
  return k;
}

KEstimate k_particle_estimate(const LinearMeasure& mu, double s, const PowerIterParams& params,
                              std::uint64_t seed,
                              const std::vector<Eigen::VectorXd>* init_dirs) {
  params.check();
  if (s < 0.0) fail(Errc::InvalidArgument, "k_particle_estimate: s must be >= 0");
  if (s == 0.0) return {1.0, 0.0};  // multiplier is identically 1

  const AtomSampler sampler(mu);
  ParticleEnsemble ens(seed);
  init_particles(ens, mu, params.n_particles, seed, init_dirs);

  std::vector<double> growth;
  growth.reserve(params.n_steps);
  for (int t = 0; t < params.n_steps; ++t) {
    growth.push_back(ensemble_step(ens, mu, sampler, s));
    maybe_resample(ens, params.resample_threshold);
  }

  const int kept = params.n_steps - params.burn_in;
  double mean = 0.0;
  for (int t = params.burn_in; t < params.n_steps; ++t) mean += growth[t];
  mean /= static_cast<double>(kept);

  // batch means over the post-burn-in window absorb step-to-step correlation
  const int n_batches = std::clamp(kept / 8, 4, 16);
  std::vector<double> batch_means;
  batch_means.reserve(n_batches);
  const int batch_len = kept / n_batches;
  for (int b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (int i = 0; i < batch_len; ++i) acc += growth[params.burn_in + b * batch_len + i];
    batch_means.push_back(acc / static_cast<double>(batch_len));
  }
  const double se_log = sample_stddev(batch_means) / std::sqrt(static_cast<double>(n_batches));

  const double k = std::exp(mean);
  return {k, k * se_log};
}

KEstimate k_estimate(const LinearMeasure& mu, double s, const PowerIterParams& params,
                     std::uint64_t seed) {
  if (s == 0.0) return {1.0, 0.0};
  if (mu.dim() == 1) return {exact_k_d1(mu, s), 0.0};
  return k_particle_estimate(mu, s, params, seed);
}

namespace {

struct KEvaluator {
  const LinearMeasure& mu;
  const PowerIterParams& base;
  std::uint64_t seed;
  int counter = 0;

  KEstimate eval(double s, int level) {
    ++counter;
    if (mu.dim() == 1) return {exact_k_d1(mu, s), 0.0};
    PowerIterParams p = base;
    p.n_particles = base.n_particles << level;
    return k_particle_estimate(mu, s, p,
                               derive_seed(seed, static_cast<std::uint64_t>(StreamOp::ChiSolve),
                                           1000 + counter));
  }
};

[[noreturn]] void fail_no_root(double s_max, double log_k_hi, double log_k_lo, double ds) {
  const double slope = (log_k_hi - log_k_lo) / ds;
  std::ostringstream os;
  os << "no s <= " << s_max << " with k(s) >= 1; log k slope at cap is " << slope;
  if (slope > 0.0) {
    os << " (k still rising: raise s_max)";
  } else {
    os << " (k decreasing at cap: all moments may stay below 1)";
  }
  fail(Errc::NoRootBelowCap, os.str());
}

}  // namespace

ChiResult chi_solve(const LinearMeasure& mu, double s_max, const PowerIterParams& params,
                    std::uint64_t seed, std::optional<AlphaEstimate> alpha, int threads) {
  if (!(s_max > 0.0)) fail(Errc::InvalidArgument, "chi_solve: s_max must be positive");
  params.check();

  AlphaEstimate a;
  if (alpha) {
    a = *alpha;
  } else if (mu.dim() == 1) {
    a.alpha = exact_alpha_d1(mu);
    a.stderr_ = 0.0;
  } else {
    a = top_lyapunov(mu, 2000, 32,
                     derive_seed(seed, static_cast<std::uint64_t>(StreamOp::ChiSolve), 0),
                     nullptr, threads);
  }
  if (!(a.alpha + 3.0 * a.stderr_ < 0.0)) {
    std::ostringstream os;
    os << "top Lyapunov estimate " << a.alpha << " +- " << a.stderr_
       << " is not negative at 3 stderr; no stationary heavy tail regime";
    fail(Errc::AlphaNotNegative, os.str());
  }

  KEvaluator evaluator{mu, params, seed};
  const int grid_n = 32;
  const double ds = s_max / grid_n;

  double lo = 0.0;
  double hi = -1.0;
  double prev_ok = 0.0;  // largest grid point with k confidently below 1
  KEstimate last{1.0, 0.0}, prev_last{1.0, 0.0};
  for (int i = 1; i <= grid_n; ++i) {
    const double s = ds * i;
    prev_last = last;
    last = evaluator.eval(s, 0);
    if (last.k - 1.0 > 3.0 * last.stderr_) {
      hi = s;
      lo = prev_ok;
      break;
    }
    if (1.0 - last.k > 3.0 * last.stderr_) prev_ok = s;
  }
  if (hi < 0.0) {
    const double k_hi = std::max(last.k, 1e-300);
    const double k_lo = std::max(prev_last.k, 1e-300);
    fail_no_root(s_max, std::log(k_hi), std::log(k_lo), ds);
  }

  ChiResult result;
  const int max_refine = 3;
  KEstimate accepted{0.0, 0.0};
  bool have_accepted = false;
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 60 && hi - lo > 1e-9 * s_max; ++iter) {
    mid = 0.5 * (lo + hi);
    int level = 0;
    KEstimate at_mid = evaluator.eval(mid, level);
    while (std::abs(at_mid.k - 1.0) <= 3.0 * at_mid.stderr_ && level < max_refine) {
      ++level;
      at_mid = evaluator.eval(mid, level);
    }
    if (mu.dim() > 1 && std::abs(at_mid.k - 1.0) <= 2.0 * at_mid.stderr_) {
      // statistically at the root at max refinement: accept mid as is
      accepted = at_mid;
      have_accepted = true;
      break;
    }
    if (at_mid.k > 1.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  if (!have_accepted) {
    mid = 0.5 * (lo + hi);
    accepted = evaluator.eval(mid, mu.dim() > 1 ? max_refine : 0);
  }
  result.chi = mid;
  result.k_at_chi = accepted.k;
  result.stderr_at_chi = accepted.stderr_;
  result.residual = std::abs(accepted.k - 1.0);
  result.evaluations = evaluator.counter;
  return result;
}

DirectionMeasureResult stationary_direction_measure(const LinearMeasure& mu, double chi,
                                                    const PowerIterParams& params,
                                                    std::uint64_t seed) {
  params.check();
  if (!(chi > 0.0)) fail(Errc::InvalidArgument, "stationary_direction_measure: chi must be > 0");
  const int d = mu.dim();
  const AtomSampler sampler(mu);

  ParticleEnsemble ens(seed);
  if (d == 1) {
    // canonical positive seeding: the sign orbit keeps whatever side it starts on
    std::vector<Eigen::VectorXd> plus(params.n_particles, Eigen::VectorXd::Constant(1, 1.0));
    init_particles(ens, mu, params.n_particles, seed, &plus);
  } else {
    init_particles(ens, mu, params.n_particles, seed, nullptr);
  }

  const int burn = std::max(params.burn_in, 256);
  for (int t = 0; t < burn; ++t) {
    ensemble_step(ens, mu, sampler, chi);
    maybe_resample(ens, params.resample_threshold);
  }
  systematic_resample(ens);  // uniform weights for the reported particle set

  const SphereBinning binning(d);
  DirectionMeasureResult result;
  result.directions = ens.dirs;
  result.weights = ens.weights;
  result.histogram = binning.histogram(ens.dirs, ens.weights);

  ensemble_step(ens, mu, sampler, chi);
  const std::vector<double> moved = binning.histogram(ens.dirs, ens.weights);
  result.residual_tv = total_variation(result.histogram, moved);
  if (result.residual_tv > 0.05) {
    std::ostringstream os;
    os << "direction measure not stationary: one-step TV residual " << result.residual_tv
       << " exceeds 0.05 (raise n_particles or burn_in)";
    fail(Errc::NonStationaryResidual, os.str());
  }
  return result;
}

}  // namespace htlab
