#pragma once

// A session owns one measure and one config, runs pipeline stages on demand,
// and exposes every produced artifact as a named in-memory document. Stages
// cache their results, so "report" reuses anything already computed.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "core/measure.hpp"
#include "core/simulate.hpp"
#include "core/spectral.hpp"
#include "core/structure.hpp"
#include "core/tails.hpp"

namespace htlab {

struct SessionConfig {
  std::uint64_t seed = 0;  // required in the config document
  int threads = 0;         // 0 = hardware concurrency

  // sample
  int n_samples = 100000;
  double tol = 1e-9;
  int max_depth = 4096;

  // spectral
  double s_max = 20.0;
  PowerIterParams power;
  int nu1_particles = 32768;
  int kcurve_points = 17;
  int alpha_steps = 10000;
  int alpha_trials = 64;

  // tails
  double threshold_quantile = 0.99;
  double k_order_fraction = 0.01;
  double t_quantile_lo = 0.99;
  double t_quantile_hi = 0.999;
  int n_t = 5;
  std::vector<double> mellin_s;  // empty: fractions of chi are used

  // structure
  int max_len = 12;
  int fixed_point_max_len = 8;
  int d1_max_len = 18;
  double gap_tol = 0.05;
};

SessionConfig parse_session_config(const std::string& config_json);

// Rendered validation report: structural issues, degeneracy flag, acceptance.
std::string validation_document(const ValidationResult& result);

struct CheckRow {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string note;
};

class Session {
 public:
  Session(const std::string& measure_json, const std::string& config_json);

  // Runs one stage: validate, spectral, sample, tails, structure, report.
  // Artifacts are rendered before any failure is thrown, so callers can
  // persist partial output (e.g. the spectral profile when no root exists).
  void run(const std::string& stage);

  const std::map<std::string, std::string>& artifacts() const { return artifacts_; }
  const SessionConfig& config() const { return config_; }

 private:
  struct DirectionalRow {
    Eigen::VectorXd u;
    double c_hat = 0.0;
    double stderr_ = 0.0;
    bool empty = false;
  };

  void stage_validate();
  void ensure_spectral();
  void ensure_samples();
  void ensure_structure();
  void ensure_tails();
  void stage_report();
  void require_computable() const;
  [[noreturn]] void fail_stored_chi_error() const;
  void render_durations();

  std::string measure_json_;
  AffineMeasure eta_;
  LinearMeasure mu_;
  ValidationResult validation_;
  SessionConfig config_;

  // spectral
  bool spectral_done_ = false;
  std::optional<AlphaEstimate> alpha_;
  std::optional<double> exact_alpha_;
  std::optional<ChiResult> chi_;
  std::string chi_error_code_;
  std::string chi_error_message_;
  std::vector<double> kgrid_s_, kgrid_k_, kgrid_se_;
  std::optional<DirectionMeasureResult> nu1_;
  std::string nu1_error_message_;

  // sample
  bool samples_done_ = false;
  std::optional<StationarySampleSet> samples_;

  // tails
  bool tails_done_ = false;
  std::optional<HillEstimate> hill_;
  std::optional<RadialCurve> radial_;
  std::string radial_note_;
  std::vector<DirectionalRow> directional_;
  std::optional<AngularMeasure> angular_;
  std::optional<AngularComparison> angular_vs_nu1_;
  std::vector<MellinPoint> mellin_;

  // structure
  bool structure_done_ = false;
  std::vector<FixedPointEntry> fixed_points_;
  int fixed_point_len_used_ = 0;
  std::vector<ProximalWitness> witnesses_;
  int witness_len_used_ = 0;
  std::optional<SpectrumReport> spectrum_;
  std::optional<ConeClassification> cone_;
  std::optional<D1Classification> d1_case_;

  std::map<std::string, std::string> artifacts_;
  std::vector<std::pair<std::string, double>> durations_;
};

}  // namespace htlab
