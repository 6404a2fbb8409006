#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace htlab {

// Affine map x -> a*x + b on R^d.
struct AffineMap {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;

  int dim() const { return static_cast<int>(b.size()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return a * x + b; }

  // this after other: apply `other` first.
  AffineMap compose(const AffineMap& other) const {
    return AffineMap{a * other.a, a * other.b + b};
  }
};

struct AffineAtom {
  double weight = 0.0;
  AffineMap map;
};

struct LinearAtom {
  double weight = 0.0;
  Eigen::MatrixXd a;
};

class AffineMeasure {
 public:
  AffineMeasure(int d, std::vector<AffineAtom> atoms) : d_(d), atoms_(std::move(atoms)) {}

  int dim() const { return d_; }
  const std::vector<AffineAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

 private:
  int d_;
  std::vector<AffineAtom> atoms_;
};

class LinearMeasure {
 public:
  LinearMeasure(int d, std::vector<LinearAtom> atoms) : d_(d), atoms_(std::move(atoms)) {}

  int dim() const { return d_; }
  const std::vector<LinearAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

 private:
  int d_;
  std::vector<LinearAtom> atoms_;
};

struct ValidationIssue {
  Errc code = Errc::Ok;
  std::string message;
};

struct ValidationResult {
  // Structural issues (weights, dimensions, singular matrices); empty when sound.
  std::vector<ValidationIssue> issues;
  // Present iff every atom fixes this point; such a measure violates the
  // no-common-fixed-point hypothesis and downstream theory does not apply.
  std::optional<Eigen::VectorXd> common_fixed_point;

  bool structurally_valid() const { return issues.empty(); }
  bool degenerate() const { return common_fixed_point.has_value(); }
};

ValidationResult validate(const AffineMeasure& eta);

// Throws the first structural issue; degeneracy is reported via the result, not thrown.
ValidationResult validate_or_throw(const AffineMeasure& eta);

LinearMeasure linear_projection(const AffineMeasure& eta);

// Cumulative-weight inverse sampler over atom indices.
class AtomSampler {
 public:
  explicit AtomSampler(const std::vector<double>& weights);
  explicit AtomSampler(const AffineMeasure& eta);
  explicit AtomSampler(const LinearMeasure& mu);

  int sample(RngStream& rng) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

AffineMeasure measure_from_json(const std::string& text);
std::string measure_to_json(const AffineMeasure& eta);

double max_translation_norm(const AffineMeasure& eta);

}  // namespace htlab
