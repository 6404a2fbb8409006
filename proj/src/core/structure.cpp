#include "core/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "core/error.hpp"

namespace htlab {

namespace {

constexpr std::int64_t kWordCap = 10'000'000;
constexpr double kContractionMargin = 1e-9;

double spectral_radius_of(const Eigen::MatrixXd& a) {
  if (a.rows() == 1) return std::abs(a(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

AffineMeasure affine_of(const LinearMeasure& mu) {
  std::vector<AffineAtom> atoms;
  atoms.reserve(mu.size());
  for (const LinearAtom& atom : mu.atoms()) {
    atoms.push_back({atom.weight, AffineMap{atom.a, Eigen::VectorXd::Zero(mu.dim())}});
  }
  return AffineMeasure(mu.dim(), std::move(atoms));
}

}  // namespace

std::int64_t word_count(int n_atoms, int max_len) {
  std::int64_t total = 0;
  std::int64_t term = 1;
  for (int len = 1; len <= max_len; ++len) {
    term *= n_atoms;
    total += term;
    if (total > 10 * kWordCap) return total;  // saturated, enough for the guard
  }
  return total;
}

void enumerate_words(const AffineMeasure& eta, int max_len,
                     const std::function<void(const Word&)>& visit) {
  if (max_len < 1) fail(Errc::InvalidArgument, "enumerate_words: max_len must be >= 1");
  const int n = static_cast<int>(eta.size());
  if (n == 0) fail(Errc::InvalidArgument, "enumerate_words: empty measure");
  if (word_count(n, max_len) > kWordCap) {
    std::ostringstream os;
    os << "word enumeration up to length " << max_len << " over " << n
       << " atoms exceeds the 1e7 cumulative cap";
    fail(Errc::ExplosionGuard, os.str());
  }

  Word word;
  for (int len = 1; len <= max_len; ++len) {
    std::vector<int> idx(len, 0);
    std::vector<AffineMap> prefix(len);
    prefix[0] = eta.atoms()[0].map;
    for (int i = 1; i < len; ++i) prefix[i] = prefix[i - 1].compose(eta.atoms()[0].map);

    while (true) {
      word.indices = idx;
      word.composed = prefix[len - 1];
      word.spectral_radius = spectral_radius_of(word.composed.a);
      visit(word);

      int p = len - 1;
      while (p >= 0 && idx[p] == n - 1) --p;
      if (p < 0) break;
      ++idx[p];
      for (int q = p + 1; q < len; ++q) idx[q] = 0;
      for (int q = p; q < len; ++q) {
        const AffineMap& atom = eta.atoms()[idx[q]].map;
        prefix[q] = (q == 0) ? atom : prefix[q - 1].compose(atom);
      }
    }
  }
}

std::vector<FixedPointEntry> fixed_points(const AffineMeasure& eta, int max_len) {
  const int d = eta.dim();
  std::vector<FixedPointEntry> points;
  enumerate_words(eta, max_len, [&](const Word& word) {
    if (word.spectral_radius >= 1.0 - kContractionMargin) return;
    FixedPointEntry entry;
    entry.indices = word.indices;
    entry.spectral_radius = word.spectral_radius;
    if (d == 1) {
      entry.point = Eigen::VectorXd::Constant(1, word.composed.b(0) / (1.0 - word.composed.a(0, 0)));
    } else {
      const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - word.composed.a;
      entry.point = m.partialPivLu().solve(word.composed.b);
    }
    points.push_back(std::move(entry));
  });
  return points;
}

std::vector<ProximalWitness> proximal_scan(const LinearMeasure& mu, int max_len,
                                           double gap_tol) {
  if (!(gap_tol > 0.0)) fail(Errc::InvalidArgument, "proximal_scan: gap_tol must be positive");
  const int d = mu.dim();
  const AffineMeasure lifted = affine_of(mu);
  std::vector<ProximalWitness> witnesses;

  enumerate_words(lifted, max_len, [&](const Word& word) {
    if (d == 1) {
      const double a = word.composed.a(0, 0);
      if (a == 0.0) return;  // the zero map has no direction
      ProximalWitness w;
      w.indices = word.indices;
      w.lambda = a;
      w.direction = Eigen::VectorXd::Constant(1, 1.0);
      w.gap = 1.0;
      witnesses.push_back(std::move(w));
      return;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> solver(word.composed.a, true);
    const auto& values = solver.eigenvalues();
    std::vector<double> moduli(d);
    int top = 0;
    for (int i = 0; i < d; ++i) {
      moduli[i] = std::abs(values(i));
      if (moduli[i] > moduli[top]) top = i;
    }
    const double m1 = moduli[top];
    if (m1 <= 0.0) return;
    double m2 = 0.0;
    for (int i = 0; i < d; ++i) {
      if (i != top) m2 = std::max(m2, moduli[i]);
    }
    const double gap = (m1 - m2) / m1;
    if (gap <= gap_tol) return;
    if (std::abs(values(top).imag()) > 1e-9 * m1) return;  // dominant pair, not real

    Eigen::VectorXd v = solver.eigenvectors().col(top).real();
    const double norm = v.norm();
    if (norm < 1e-12) return;
    v /= norm;
    for (int i = 0; i < d; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }

    ProximalWitness w;
    w.indices = word.indices;
    w.lambda = values(top).real();
    w.direction = std::move(v);
    w.gap = gap;
    witnesses.push_back(std::move(w));
  });
  return witnesses;
}

namespace {

bool ratio_is_small_rational(double r) {
  for (int q = 1; q <= 64; ++q) {
    const double p = std::round(r * q);
    if (std::abs(r - p / q) <= 1e-9 * std::max(1.0, std::abs(r))) return true;
  }
  return false;
}

}  // namespace

SpectrumReport spectrum_and_arithmeticity(const LinearMeasure& mu, int max_len) {
  SpectrumReport report;
  const std::vector<ProximalWitness> witnesses = proximal_scan(mu, max_len);
  report.logs.reserve(witnesses.size());
  for (const ProximalWitness& w : witnesses) {
    if (std::abs(w.lambda) > 0.0) report.logs.push_back(std::log(std::abs(w.lambda)));
  }
  std::sort(report.logs.begin(), report.logs.end());
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < report.logs.size(); ++i) {
    const double gap = report.logs[i] - report.logs[i - 1];
    if (gap > 1e-12) min_gap = std::min(min_gap, gap);
  }
  report.min_positive_gap = std::isfinite(min_gap) ? min_gap : 0.0;

  if (mu.dim() == 1) {
    report.d1_applicable = true;
    std::vector<double> logs;
    for (const LinearAtom& atom : mu.atoms()) {
      const double a = std::abs(atom.a(0, 0));
      if (a > 0.0 && a != 1.0) logs.push_back(std::log(a));
    }
    for (std::size_t i = 0; i < logs.size() && !report.non_arithmetic_witness; ++i) {
      for (std::size_t j = i + 1; j < logs.size(); ++j) {
        if (!ratio_is_small_rational(logs[i] / logs[j])) {
          report.non_arithmetic_witness = true;
          break;
        }
      }
    }
    report.note = report.non_arithmetic_witness
                      ? "slope log-ratio escapes every rational lattice with denominator <= 64"
                      : "all slope moduli fit a common geometric lattice (or too few slopes)";
  } else {
    report.note = "spectrum gaps are diagnostic only for d > 1; no density verdict";
  }
  return report;
}

ConeClassification classify_cone(const LinearMeasure& mu,
                                 const std::vector<ProximalWitness>& witnesses, int max_len) {
  if (mu.dim() < 2) fail(Errc::WrongDimension, "classify_cone requires d >= 2");
  ConeClassification result;
  if (witnesses.empty()) {
    result.value = ConeCase::Undetermined;
    result.note = "i.p. not witnessed: no proximal element found";
    return result;
  }

  const Eigen::VectorXd seed = witnesses.front().direction;
  std::vector<Eigen::VectorXd> dirs;
  dirs.push_back(seed);
  enumerate_words(affine_of(mu), max_len, [&](const Word& word) {
    Eigen::VectorXd v = word.composed.a * seed;
    const double norm = v.norm();
    if (norm > 0.0) dirs.push_back(v / norm);
  });
  result.n_directions = static_cast<int>(dirs.size());

  const int d = mu.dim();
  if (d == 2) {
    std::vector<double> angles;
    angles.reserve(dirs.size());
    for (const auto& v : dirs) angles.push_back(std::atan2(v(1), v(0)));
    std::sort(angles.begin(), angles.end());
    double max_gap = 2.0 * std::numbers::pi + angles.front() - angles.back();
    for (std::size_t i = 1; i < angles.size(); ++i) {
      max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
    }
    if (max_gap > std::numbers::pi + 1e-9) {
      result.value = ConeCase::CaseII;
      result.note = "orbit of the seed direction fits an open half-plane";
    } else if (max_gap < std::numbers::pi - 1e-9) {
      result.value = ConeCase::CaseI;
      result.note = "orbit directions surround the origin";
    } else {
      result.value = ConeCase::Undetermined;
      result.note = "orbit sits on a half-plane boundary";
    }
    return result;
  }

  // d >= 3: distance from the origin to the convex hull of the orbit,
  // by Frank-Wolfe; a positive-margin min-norm point is a separating normal.
  Eigen::VectorXd x = dirs.front();
  for (int it = 0; it < 500; ++it) {
    int best = 0;
    double best_dot = x.dot(dirs[0]);
    for (std::size_t j = 1; j < dirs.size(); ++j) {
      const double dot = x.dot(dirs[j]);
      if (dot < best_dot) {
        best_dot = dot;
        best = static_cast<int>(j);
      }
    }
    const Eigen::VectorXd diff = x - dirs[best];
    const double gap = x.dot(diff);
    if (x.norm() < 1e-9 || gap <= 1e-14) break;
    const double denom = diff.squaredNorm();
    const double gamma = denom > 0.0 ? std::clamp(gap / denom, 0.0, 1.0) : 0.0;
    if (gamma == 0.0) break;
    x -= gamma * diff;
  }

  const double dist = x.norm();
  if (dist > 1e-6) {
    double margin = std::numeric_limits<double>::infinity();
    const Eigen::VectorXd u = x / dist;
    for (const auto& v : dirs) margin = std::min(margin, u.dot(v));
    if (margin > 1e-6) {
      result.value = ConeCase::CaseII;
      result.note = "orbit of the seed direction fits an open half-space";
      return result;
    }
    result.value = ConeCase::Undetermined;
    result.note = "min-norm point inconclusive";
    return result;
  }
  result.value = ConeCase::CaseI;
  result.note = "origin lies in the convex hull of orbit directions";
  return result;
}

D1Classification classify_case_d1(const AffineMeasure& eta, int max_len) {
  if (eta.dim() != 1) fail(Errc::WrongDimension, "classify_case_d1 requires d = 1");
  D1Classification result;

  for (const AffineAtom& atom : eta.atoms()) {
    if (atom.map.a(0, 0) < 0.0) {
      result.value = D1Case::CaseI;
      result.note = "negative slope atom: support is the whole line";
      return result;
    }
  }

  const double b_max = max_translation_norm(eta);
  if (b_max == 0.0) {
    result.note = "all translations vanish; stationary law degenerates at 0";
    return result;
  }
  const double escape_threshold = 1e3 * b_max;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> max_by_len(max_len + 1, nan);
  std::vector<double> min_by_len(max_len + 1, nan);
  double global_max = nan;
  double global_min = nan;

  enumerate_words(eta, max_len, [&](const Word& word) {
    if (word.spectral_radius >= 1.0 - kContractionMargin) return;
    const double fp = word.composed.b(0) / (1.0 - word.composed.a(0, 0));
    const int len = static_cast<int>(word.indices.size());
    if (std::isnan(max_by_len[len]) || fp > max_by_len[len]) max_by_len[len] = fp;
    if (std::isnan(min_by_len[len]) || fp < min_by_len[len]) min_by_len[len] = fp;
    if (std::isnan(global_max) || fp > global_max) global_max = fp;
    if (std::isnan(global_min) || fp < global_min) global_min = fp;
  });

  if (std::isnan(global_max)) {
    result.note = "no contracting word up to max_len";
    return result;
  }

  bool plus_witness = false;
  bool minus_witness = false;
  int plus_growth_run = 0;
  int minus_growth_run = 0;
  for (int len = 1; len <= max_len; ++len) {
    const double hi = max_by_len[len];
    const double lo = min_by_len[len];
    if (!std::isnan(hi)) {
      if (hi > escape_threshold) plus_witness = true;
      const double prev = len > 1 ? max_by_len[len - 1] : nan;
      if (!std::isnan(prev) && prev > 0.0 && hi > 10.0 * prev) {
        if (++plus_growth_run >= 2) plus_witness = true;
      } else {
        plus_growth_run = 0;
      }
    }
    if (!std::isnan(lo)) {
      if (lo < -escape_threshold) minus_witness = true;
      const double prev = len > 1 ? min_by_len[len - 1] : nan;
      if (!std::isnan(prev) && prev < 0.0 && lo < 10.0 * prev) {
        if (++minus_growth_run >= 2) minus_witness = true;
      } else {
        minus_growth_run = 0;
      }
    }
  }

  if (plus_witness && minus_witness) {
    result.value = D1Case::CaseII1;
    result.note = "fixed points escape to both ends";
  } else if (plus_witness) {
    result.value = D1Case::CaseII2;
    result.side = +1;
    result.m_estimate = global_min;
    result.note = "fixed points escape to +infinity only";
  } else if (minus_witness) {
    result.value = D1Case::CaseII2;
    result.side = -1;
    result.m_estimate = global_max;
    result.note = "fixed points escape to -infinity only";
  } else {
    result.note = "no escape witnessed up to max_len; compact support likely";
  }
  return result;
}

}  // namespace htlab
