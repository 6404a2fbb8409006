#pragma once

// Shared fixtures and independent oracles for the test suite. Oracles here
// deliberately avoid the library's own estimation paths: the tail-exponent
// reference comes from plain scalar bisection, the Cantor gaps from interval
// arithmetic on depth-2 word images, and planar moment cross-checks from a
// deterministic discretization of the circle transfer operator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/measure.hpp"

namespace htlab::testref {

// ---- reference measures -------------------------------------------------

// Contracting pair: slopes 1/2 and 1/3, both intercepts 1. The stationary law
// is a Cantor-type set inside [3/2, 2]; no tail exponent exists.
inline AffineMeasure cantor_pair() {
  AffineAtom a1{0.5, {Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::VectorXd::Constant(1, 1.0)}};
  AffineAtom a2{0.5,
                {Eigen::MatrixXd::Constant(1, 1, 1.0 / 3.0), Eigen::VectorXd::Constant(1, 1.0)}};
  return AffineMeasure(1, {a1, a2});
}

// Expanding/contracting pair: slopes 1/3 and 2, both intercepts 1. Stationary
// support [3/2, infinity), tail exponent near 0.5233.
inline AffineMeasure heavy_pair() {
  AffineAtom a1{0.5,
                {Eigen::MatrixXd::Constant(1, 1, 1.0 / 3.0), Eigen::VectorXd::Constant(1, 1.0)}};
  AffineAtom a2{0.5, {Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, 1.0)}};
  return AffineMeasure(1, {a1, a2});
}

// Same slopes as heavy_pair with intercepts -1 / +1: the semigroup preserves
// (-inf, -3/2], so the support escapes to -infinity only.
inline AffineMeasure mixed_intercept_pair() {
  AffineAtom a1{0.5,
                {Eigen::MatrixXd::Constant(1, 1, 1.0 / 3.0), Eigen::VectorXd::Constant(1, -1.0)}};
  AffineAtom a2{0.5, {Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, 1.0)}};
  return AffineMeasure(1, {a1, a2});
}

// Three atoms with intercepts pushing both ways: support escapes to both
// infinities (fixed points of expanding-then-contracting words grow on both
// sides).
inline AffineMeasure two_sided_triple() {
  AffineAtom a1{0.2, {Eigen::MatrixXd::Constant(1, 1, 4.0), Eigen::VectorXd::Constant(1, -1.0)}};
  AffineAtom a2{0.2, {Eigen::MatrixXd::Constant(1, 1, 4.0), Eigen::VectorXd::Constant(1, 1.0)}};
  AffineAtom a3{0.6, {Eigen::MatrixXd::Constant(1, 1, 0.25), Eigen::VectorXd::Constant(1, 0.0)}};
  return AffineMeasure(1, {a1, a2, a3});
}

// Planar heavy-tail pair: a quarter-scale rotation by 1 radian (no
// translation) and diag(2, 1/2) with translation e1. Contracting on average
// with an expanding direction, so the stationary law has a power tail.
inline AffineMeasure planar_pair() {
  Eigen::MatrixXd rot(2, 2);
  const double c = std::cos(1.0), s = std::sin(1.0);
  rot << c, -s, s, c;
  Eigen::MatrixXd diag(2, 2);
  diag << 2.0, 0.0, 0.0, 0.5;
  AffineAtom a1{0.5, {0.25 * rot, Eigen::VectorXd::Zero(2)}};
  Eigen::VectorXd b2(2);
  b2 << 1.0, 0.0;
  AffineAtom a2{0.5, {diag, b2}};
  return AffineMeasure(2, {a1, a2});
}

inline std::string heavy_pair_json() {
  return R"({"d":1,"atoms":[{"p":0.5,"a":0.3333333333333333,"b":1.0},)"
         R"({"p":0.5,"a":2.0,"b":1.0}]})";
}

inline std::string cantor_pair_json() {
  return R"({"d":1,"atoms":[{"p":0.5,"a":0.5,"b":1.0},)"
         R"({"p":0.5,"a":0.3333333333333333,"b":1.0}]})";
}

// ---- independent oracles ------------------------------------------------

// Root of sum_i w_i |a_i|^s = 1 on (0, s_hi] by plain bisection; the moment
// function here is re-evaluated from raw slope lists, not the library.
inline double scalar_root_oracle(const std::vector<double>& weights,
                                 const std::vector<double>& slopes, double s_hi) {
  const auto k = [&](double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i] * std::pow(std::abs(slopes[i]), s);
    }
    return acc;
  };
  double lo = 0.0, hi = s_hi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (k(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Tail exponent of the heavy pair: root of (1/2)((1/3)^s + 2^s) = 1.
inline double heavy_pair_chi() { return scalar_root_oracle({0.5, 0.5}, {1.0 / 3.0, 2.0}, 2.0); }

// Depth-2 interval images of [3/2, 2] under the Cantor pair. The four word
// images leave three gaps; stationary samples must avoid all of them.
struct Interval {
  double lo, hi;
};

inline std::vector<Interval> cantor_gaps() {
  const auto image = [](double slope, const Interval& iv) {
    return Interval{slope * iv.lo + 1.0, slope * iv.hi + 1.0};
  };
  const Interval hull{1.5, 2.0};
  std::vector<Interval> pieces;
  for (double s1 : {0.5, 1.0 / 3.0}) {
    for (double s2 : {0.5, 1.0 / 3.0}) {
      pieces.push_back(image(s1, image(s2, hull)));
    }
  }
  std::sort(pieces.begin(), pieces.end(), [](const Interval& x, const Interval& y) {
    return x.lo < y.lo;
  });
  std::vector<Interval> gaps;
  double cover = pieces.front().hi;
  for (const Interval& p : pieces) {
    if (p.lo > cover) gaps.push_back({cover, p.lo});
    cover = std::max(cover, p.hi);
  }
  return gaps;
}

// Deterministic oracle for the s-th moment growth rate k(s) of planar random
// matrix products. The growth rate is the dominant eigenvalue of the circle
// transfer operator (P_s f)(u) = sum_i w_i ||a_i u||^s f(a_i u / ||a_i u||);
// discretize the circle on a uniform angular grid with linear interpolation
// and power-iterate. No Monte Carlo noise: the only error is the grid
// discretization, which refines below 1e-5 by m = 4096 on smooth examples.
inline double transfer_operator_k(const LinearMeasure& mu, double s, int m = 4096,
                                  int iters = 2000) {
  const double two_pi = 2.0 * std::numbers::pi;
  struct Jump {
    int lo;
    double frac;
    double factor;
  };
  std::vector<std::vector<Jump>> jumps(mu.size(), std::vector<Jump>(m));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (int j = 0; j < m; ++j) {
      const double theta = two_pi * j / m;
      const Eigen::Vector2d u(std::cos(theta), std::sin(theta));
      const Eigen::Vector2d v = mu.atoms()[i].a * u;
      const double r = v.norm();
      double phi = std::atan2(v.y(), v.x());
      if (phi < 0) phi += two_pi;
      const double pos = phi / two_pi * m;
      int lo = static_cast<int>(std::floor(pos));
      double frac = pos - lo;
      if (lo >= m) {
        lo = 0;
        frac = 0.0;
      }
      jumps[i][j] = {lo, frac, mu.atoms()[i].weight * std::pow(r, s)};
    }
  }
  std::vector<double> f(m, 1.0), g(m);
  double lambda = 1.0;
  for (int it = 0; it < iters; ++it) {
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        const Jump& jump = jumps[i][j];
        acc += jump.factor * ((1.0 - jump.frac) * f[jump.lo] + jump.frac * f[(jump.lo + 1) % m]);
      }
      g[j] = acc;
    }
    double norm = 0.0;
    for (double x : g) norm += x;
    norm /= m;
    lambda = norm;
    for (int j = 0; j < m; ++j) f[j] = g[j] / norm;
  }
  return lambda;
}

// Pareto(chi) sample with unit scale by inverse CDF; reference heavy-tail
// cloud for the Hill and radial estimators.
inline std::vector<double> pareto_sample(double chi, int n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double u = unif(eng);
    if (u <= 0.0) u = 1e-300;
    out[i] = std::pow(1.0 - u, -1.0 / chi);
  }
  return out;
}

}  // namespace htlab::testref
