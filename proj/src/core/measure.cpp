#include "core/measure.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace htlab {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kFixedPointTol = 1e-9;

bool atom_fixes_point(const AffineMap& map, const Eigen::VectorXd& x) {
  const double residual = (map.a * x + map.b - x).norm();
  return residual <= kFixedPointTol * (1.0 + x.norm());
}

// Joint least-squares solve of (I - a_i) x = b_i over all atoms; used when no
// atom has a unique fixed point.
std::optional<Eigen::VectorXd> joint_fixed_point(const AffineMeasure& eta) {
  const int d = eta.dim();
  const int n = static_cast<int>(eta.size());
  Eigen::MatrixXd m(n * d, d);
  Eigen::VectorXd rhs(n * d);
  for (int i = 0; i < n; ++i) {
    const AffineMap& map = eta.atoms()[i].map;
    m.block(i * d, 0, d, d) = Eigen::MatrixXd::Identity(d, d) - map.a;
    rhs.segment(i * d, d) = map.b;
  }
  Eigen::VectorXd x = m.colPivHouseholderQr().solve(rhs);
  for (const AffineAtom& atom : eta.atoms()) {
    if (!atom_fixes_point(atom.map, x)) return std::nullopt;
  }
  return x;
}

}  // namespace

ValidationResult validate(const AffineMeasure& eta) {
  ValidationResult result;
  const int d = eta.dim();

  if (d < 1) {
    result.issues.push_back({Errc::DimensionMismatch, "dimension must be >= 1"});
    return result;
  }
  if (eta.size() == 0) {
    result.issues.push_back({Errc::InvalidArgument, "measure has no atoms"});
    return result;
  }

  double weight_sum = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const AffineAtom& atom = eta.atoms()[i];
    if (!(atom.weight > 0.0)) {
      std::ostringstream os;
      os << "atom " << i << " has non-positive weight " << atom.weight;
      result.issues.push_back({Errc::NonPositiveWeight, os.str()});
    }
    weight_sum += atom.weight;
    if (atom.map.a.rows() != d || atom.map.a.cols() != d || atom.map.b.size() != d) {
      std::ostringstream os;
      os << "atom " << i << " has shape (" << atom.map.a.rows() << "x" << atom.map.a.cols()
         << ", " << atom.map.b.size() << "), expected (" << d << "x" << d << ", " << d << ")";
      result.issues.push_back({Errc::DimensionMismatch, os.str()});
      return result;  // shape errors make further checks meaningless
    }
    if (d > 1) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(atom.map.a);
      if (!lu.isInvertible()) {
        std::ostringstream os;
        os << "atom " << i << " has a singular linear part (d > 1 requires det != 0)";
        result.issues.push_back({Errc::SingularMatrix, os.str()});
      }
    }
  }
  if (std::abs(weight_sum - 1.0) > kWeightSumTol) {
    std::ostringstream os;
    os << "weights sum to " << weight_sum << ", expected 1 within " << kWeightSumTol;
    result.issues.push_back({Errc::WeightsNotNormalized, os.str()});
  }
  if (!result.issues.empty()) return result;

  // Common fixed point: candidate from any atom with a unique fixed point,
  // then every atom must fix it; all-singular (I - a) falls back to a joint solve.
  std::optional<Eigen::VectorXd> candidate;
  for (const AffineAtom& atom : eta.atoms()) {
    Eigen::MatrixXd ima = Eigen::MatrixXd::Identity(d, d) - atom.map.a;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ima);
    if (lu.isInvertible()) {
      candidate = lu.solve(atom.map.b);
      break;
    }
  }
  if (candidate) {
    bool all_fix = true;
    for (const AffineAtom& atom : eta.atoms()) {
      if (!atom_fixes_point(atom.map, *candidate)) {
        all_fix = false;
        break;
      }
    }
    if (all_fix) result.common_fixed_point = *candidate;
  } else {
    result.common_fixed_point = joint_fixed_point(eta);
  }
  return result;
}

ValidationResult validate_or_throw(const AffineMeasure& eta) {
  ValidationResult result = validate(eta);
  if (!result.structurally_valid()) {
    fail(result.issues.front().code, result.issues.front().message);
  }
  return result;
}

LinearMeasure linear_projection(const AffineMeasure& eta) {
  std::vector<LinearAtom> atoms;
  atoms.reserve(eta.size());
  for (const AffineAtom& atom : eta.atoms()) {
    atoms.push_back({atom.weight, atom.map.a});
  }
  return LinearMeasure(eta.dim(), std::move(atoms));
}

AtomSampler::AtomSampler(const std::vector<double>& weights) {
  if (weights.empty()) fail(Errc::InvalidArgument, "AtomSampler: empty weight list");
  cumulative_.reserve(weights.size());
  double acc = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) fail(Errc::NonPositiveWeight, "AtomSampler: weights must be positive");
    acc += w;
    cumulative_.push_back(acc);
  }
  const double total = cumulative_.back();
  for (double& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

namespace {
std::vector<double> weights_of(const AffineMeasure& eta) {
  std::vector<double> w;
  w.reserve(eta.size());
  for (const AffineAtom& atom : eta.atoms()) w.push_back(atom.weight);
  return w;
}
std::vector<double> weights_of(const LinearMeasure& mu) {
  std::vector<double> w;
  w.reserve(mu.size());
  for (const LinearAtom& atom : mu.atoms()) w.push_back(atom.weight);
  return w;
}
}  // namespace

AtomSampler::AtomSampler(const AffineMeasure& eta) : AtomSampler(weights_of(eta)) {}
AtomSampler::AtomSampler(const LinearMeasure& mu) : AtomSampler(weights_of(mu)) {}

int AtomSampler::sample(RngStream& rng) const {
  const double u = rng.uniform();
  // first index with cumulative > u; the final bucket absorbs u == 1 - ulp
  std::size_t lo = 0, hi = cumulative_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (cumulative_[mid] > u) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return static_cast<int>(lo);
}

namespace {

using nlohmann::json;

Eigen::MatrixXd parse_matrix(const json& value, int d, std::size_t atom_idx) {
  Eigen::MatrixXd a(d, d);
  if (value.is_number()) {
    if (d != 1) {
      fail(Errc::ParseError, "atom " + std::to_string(atom_idx) +
                                 ": scalar 'a' only allowed when d = 1");
    }
    a(0, 0) = value.get<double>();
    return a;
  }
  if (!value.is_array() || value.size() != static_cast<std::size_t>(d)) {
    fail(Errc::ParseError,
         "atom " + std::to_string(atom_idx) + ": 'a' must be a " + std::to_string(d) + "x" +
             std::to_string(d) + " row array");
  }
  for (int r = 0; r < d; ++r) {
    const json& row = value[r];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(d)) {
      fail(Errc::ParseError, "atom " + std::to_string(atom_idx) + ": bad row " +
                                 std::to_string(r) + " in 'a'");
    }
    for (int c = 0; c < d; ++c) {
      if (!row[c].is_number()) {
        fail(Errc::ParseError, "atom " + std::to_string(atom_idx) + ": non-numeric entry in 'a'");
      }
      a(r, c) = row[c].get<double>();
    }
  }
  return a;
}

Eigen::VectorXd parse_vector(const json& value, int d, std::size_t atom_idx) {
  Eigen::VectorXd b(d);
  if (value.is_number()) {
    if (d != 1) {
      fail(Errc::ParseError, "atom " + std::to_string(atom_idx) +
                                 ": scalar 'b' only allowed when d = 1");
    }
    b(0) = value.get<double>();
    return b;
  }
  if (!value.is_array() || value.size() != static_cast<std::size_t>(d)) {
    fail(Errc::ParseError, "atom " + std::to_string(atom_idx) + ": 'b' must have " +
                               std::to_string(d) + " entries");
  }
  for (int i = 0; i < d; ++i) {
    if (!value[i].is_number()) {
      fail(Errc::ParseError, "atom " + std::to_string(atom_idx) + ": non-numeric entry in 'b'");
    }
    b(i) = value[i].get<double>();
  }
  return b;
}

}  // namespace

AffineMeasure measure_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail(Errc::ParseError, "measure: malformed JSON");
  if (!doc.is_object()) fail(Errc::ParseError, "measure: top level must be an object");
  if (!doc.contains("d") || !doc["d"].is_number_integer()) {
    fail(Errc::ParseError, "measure: missing integer field 'd'");
  }
  const int d = doc["d"].get<int>();
  if (d < 1) fail(Errc::ParseError, "measure: 'd' must be >= 1");
  if (!doc.contains("atoms") || !doc["atoms"].is_array() || doc["atoms"].empty()) {
    fail(Errc::ParseError, "measure: missing non-empty array field 'atoms'");
  }
  std::vector<AffineAtom> atoms;
  atoms.reserve(doc["atoms"].size());
  for (std::size_t i = 0; i < doc["atoms"].size(); ++i) {
    const json& entry = doc["atoms"][i];
    if (!entry.is_object() || !entry.contains("p") || !entry.contains("a") ||
        !entry.contains("b") || !entry["p"].is_number()) {
      fail(Errc::ParseError,
           "atom " + std::to_string(i) + ": expected object with numeric 'p', 'a', 'b'");
    }
    AffineAtom atom;
    atom.weight = entry["p"].get<double>();
    atom.map.a = parse_matrix(entry["a"], d, i);
    atom.map.b = parse_vector(entry["b"], d, i);
    atoms.push_back(std::move(atom));
  }
  return AffineMeasure(d, std::move(atoms));
}

std::string measure_to_json(const AffineMeasure& eta) {
  json doc;
  doc["d"] = eta.dim();
  json atoms = json::array();
  for (const AffineAtom& atom : eta.atoms()) {
    json entry;
    entry["p"] = atom.weight;
    json rows = json::array();
    for (int r = 0; r < eta.dim(); ++r) {
      json row = json::array();
      for (int c = 0; c < eta.dim(); ++c) row.push_back(atom.map.a(r, c));
      rows.push_back(std::move(row));
    }
    entry["a"] = std::move(rows);
    json b = json::array();
    for (int i = 0; i < eta.dim(); ++i) b.push_back(atom.map.b(i));
    entry["b"] = std::move(b);
    atoms.push_back(std::move(entry));
  }
  doc["atoms"] = std::move(atoms);
  return doc.dump(2);
}

double max_translation_norm(const AffineMeasure& eta) {
  double m = 0.0;
  for (const AffineAtom& atom : eta.atoms()) m = std::max(m, atom.map.b.norm());
  return m;
}

}  // namespace htlab
