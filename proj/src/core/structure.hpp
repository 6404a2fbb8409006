#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/measure.hpp"

namespace htlab {

struct Word {
  std::vector<int> indices;  // atom indices, applied as left-to-right composition
  AffineMap composed;
  double spectral_radius = 0.0;
};

// Streams all nonempty words up to max_len in (length, lexicographic) order.
// Guard: the cumulative word count across lengths must not exceed 1e7.
void enumerate_words(const AffineMeasure& eta, int max_len,
                     const std::function<void(const Word&)>& visit);

std::int64_t word_count(int n_atoms, int max_len);  // sum of n^l for l = 1..max_len

struct FixedPointEntry {
  std::vector<int> indices;
  Eigen::VectorXd point;
  double spectral_radius = 0.0;
};

// Attractive fixed points (I - a)^-1 b of every contracting word
// (spectral radius < 1 - 1e-9); approximates the support of the stationary
// law from inside.
std::vector<FixedPointEntry> fixed_points(const AffineMeasure& eta, int max_len);

struct ProximalWitness {
  std::vector<int> indices;
  double lambda = 0.0;        // the dominant real eigenvalue
  Eigen::VectorXd direction;  // unit eigenvector, first nonzero coordinate positive
  double gap = 0.0;           // (|l1| - |l2|) / |l1|
};

// Words whose top-modulus eigenvalue is a single real simple eigenvalue with
// relative gap above gap_tol. d = 1 treats every nonzero scalar as proximal.
std::vector<ProximalWitness> proximal_scan(const LinearMeasure& mu, int max_len,
                                           double gap_tol = 0.05);

struct SpectrumReport {
  std::vector<double> logs;  // log spectral radii of proximal witnesses
  double min_positive_gap = 0.0;
  bool d1_applicable = false;
  bool non_arithmetic_witness = false;  // d = 1 only
  std::string note;
};

// d = 1: non-arithmeticity witness is PRESENT when some pair of atom slopes
// has an irrational log-ratio (no common geometric lattice with denominator
// up to 64). d > 1: spectrum gap diagnostics only, no verdict.
SpectrumReport spectrum_and_arithmeticity(const LinearMeasure& mu, int max_len);

enum class ConeCase { CaseI, CaseII, Undetermined };

struct ConeClassification {
  ConeCase value = ConeCase::Undetermined;
  std::string note;
  int n_directions = 0;
};

// Propagates one proximal direction through all words up to max_len and asks
// whether the resulting direction set fits in an open half-space (invariant
// cone witness) or surrounds the origin. d = 2 decides by the largest
// circular gap; d >= 3 by the min-norm point of the convex hull.
ConeClassification classify_cone(const LinearMeasure& mu,
                                 const std::vector<ProximalWitness>& witnesses, int max_len);

enum class D1Case { CaseI, CaseII1, CaseII2, Undetermined };

struct D1Classification {
  D1Case value = D1Case::Undetermined;
  int side = 0;            // +1 or -1 for CaseII2: which half-line escapes
  double m_estimate = 0.0; // support endpoint estimate for CaseII2
  std::string note;
};

// d = 1 trichotomy: CaseI when some slope is negative; otherwise fixed-point
// escape witnesses decide between both-sided (II1) and one-sided (II2)
// unbounded support.
D1Classification classify_case_d1(const AffineMeasure& eta, int max_len);

}  // namespace htlab
