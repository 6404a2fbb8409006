#include "session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/stats.hpp"
#include "io_util.hpp"
#include "version.hpp"

namespace htlab {

using nlohmann::json;

namespace {

double json_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    fail(Errc::InvalidArgument, std::string("config: ") + key + " must be a number");
  }
  return obj[key].get<double>();
}

int json_int(const json& obj, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    fail(Errc::InvalidArgument, std::string("config: ") + key + " must be an integer");
  }
  return obj[key].get<int>();
}

json json_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

// Geometric grid between two positive endpoints, strictly increasing.
std::vector<double> geometric_grid(double lo, double hi, int n) {
  std::vector<double> grid;
  if (!(lo > 0.0) || !(hi > lo * (1.0 + 1e-12)) || n < 1) {
    if (lo > 0.0) grid.push_back(lo);
    return grid;
  }
  if (n == 1) {
    grid.push_back(std::sqrt(lo * hi));
    return grid;
  }
  const double step = std::log(hi / lo) / (n - 1);
  for (int j = 0; j < n; ++j) {
    const double t = lo * std::exp(step * j);
    if (grid.empty() || t > grid.back() * (1.0 + 1e-12)) grid.push_back(t);
  }
  return grid;
}

std::string join_indices(const std::vector<int>& indices) {
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i > 0) out.push_back('-');
    out += std::to_string(indices[i]);
  }
  return out;
}

int clamp_word_len(int n_atoms, int want) {
  int len = std::max(1, want);
  while (len > 1 && word_count(n_atoms, len) > 10'000'000) --len;
  return len;
}

const char* cone_name(ConeCase c) {
  switch (c) {
    case ConeCase::CaseI: return "CaseI";
    case ConeCase::CaseII: return "CaseII";
    default: return "Undetermined";
  }
}

const char* d1_name(D1Case c) {
  switch (c) {
    case D1Case::CaseI: return "I";
    case D1Case::CaseII1: return "II1";
    case D1Case::CaseII2: return "II2";
    default: return "Undetermined";
  }
}

}  // namespace

SessionConfig parse_session_config(const std::string& config_json) {
  json root;
  try {
    root = json::parse(config_json);
  } catch (const json::exception& e) {
    fail(Errc::ParseError, std::string("config: ") + e.what());
  }
  if (!root.is_object()) fail(Errc::ParseError, "config: root must be an object");

  SessionConfig cfg;
  if (!root.contains("seed")) {
    fail(Errc::InvalidArgument, "config: seed is required (no wall-clock default)");
  }
  if (!root["seed"].is_number_integer() && !root["seed"].is_number_unsigned()) {
    fail(Errc::InvalidArgument, "config: seed must be an integer");
  }
  cfg.seed = root["seed"].get<std::uint64_t>();
  cfg.threads = json_int(root, "threads", 0);
  if (cfg.threads < 0) fail(Errc::InvalidArgument, "config: threads must be >= 0");

  const json sample = root.value("sample", json::object());
  cfg.n_samples = json_int(sample, "n_samples", cfg.n_samples);
  cfg.tol = json_number(sample, "tol", cfg.tol);
  cfg.max_depth = json_int(sample, "max_depth", cfg.max_depth);
  if (cfg.n_samples < 1) fail(Errc::InvalidArgument, "config: sample.n_samples must be >= 1");
  if (!(cfg.tol > 0.0)) fail(Errc::InvalidArgument, "config: sample.tol must be positive");
  if (cfg.max_depth < 1) fail(Errc::InvalidArgument, "config: sample.max_depth must be >= 1");

  const json spectral = root.value("spectral", json::object());
  cfg.s_max = json_number(spectral, "s_max", cfg.s_max);
  cfg.power.n_particles = json_int(spectral, "n_particles", cfg.power.n_particles);
  cfg.power.n_steps = json_int(spectral, "n_steps", cfg.power.n_steps);
  cfg.power.burn_in = json_int(spectral, "burn_in", cfg.power.burn_in);
  cfg.power.resample_threshold =
      json_number(spectral, "resample_threshold", cfg.power.resample_threshold);
  cfg.nu1_particles = json_int(spectral, "nu1_particles", cfg.nu1_particles);
  cfg.kcurve_points = json_int(spectral, "kcurve_points", cfg.kcurve_points);
  cfg.alpha_steps = json_int(spectral, "alpha_steps", cfg.alpha_steps);
  cfg.alpha_trials = json_int(spectral, "alpha_trials", cfg.alpha_trials);
  if (!(cfg.s_max > 0.0)) fail(Errc::InvalidArgument, "config: spectral.s_max must be positive");
  cfg.power.check();
  if (cfg.nu1_particles < 1) {
    fail(Errc::InvalidArgument, "config: spectral.nu1_particles must be >= 1");
  }
  if (cfg.kcurve_points < 3) {
    fail(Errc::InvalidArgument, "config: spectral.kcurve_points must be >= 3");
  }
  if (cfg.alpha_steps < 1 || cfg.alpha_trials < 2) {
    fail(Errc::InvalidArgument, "config: spectral.alpha_steps/alpha_trials too small");
  }

  const json tails = root.value("tails", json::object());
  cfg.threshold_quantile = json_number(tails, "threshold_quantile", cfg.threshold_quantile);
  cfg.k_order_fraction = json_number(tails, "k_order_fraction", cfg.k_order_fraction);
  cfg.t_quantile_lo = json_number(tails, "t_quantile_lo", cfg.t_quantile_lo);
  cfg.t_quantile_hi = json_number(tails, "t_quantile_hi", cfg.t_quantile_hi);
  cfg.n_t = json_int(tails, "n_t", cfg.n_t);
  if (tails.contains("mellin_s")) {
    if (!tails["mellin_s"].is_array()) {
      fail(Errc::InvalidArgument, "config: tails.mellin_s must be an array");
    }
    for (const auto& v : tails["mellin_s"]) {
      if (!v.is_number()) fail(Errc::InvalidArgument, "config: tails.mellin_s entries");
      cfg.mellin_s.push_back(v.get<double>());
    }
  }
  if (!(cfg.k_order_fraction > 0.0 && cfg.k_order_fraction < 0.5)) {
    fail(Errc::InvalidArgument, "config: tails.k_order_fraction must lie in (0, 0.5)");
  }
  if (!(cfg.t_quantile_lo > 0.0 && cfg.t_quantile_lo < cfg.t_quantile_hi &&
        cfg.t_quantile_hi < 1.0)) {
    fail(Errc::InvalidArgument, "config: tails.t_quantile_lo/hi must satisfy 0 < lo < hi < 1");
  }
  if (cfg.n_t < 1) fail(Errc::InvalidArgument, "config: tails.n_t must be >= 1");

  const json structure = root.value("structure", json::object());
  cfg.max_len = json_int(structure, "max_len", cfg.max_len);
  cfg.fixed_point_max_len = json_int(structure, "fixed_point_max_len", cfg.fixed_point_max_len);
  cfg.d1_max_len = json_int(structure, "d1_max_len", cfg.d1_max_len);
  cfg.gap_tol = json_number(structure, "gap_tol", cfg.gap_tol);
  if (cfg.max_len < 1 || cfg.fixed_point_max_len < 1 || cfg.d1_max_len < 1) {
    fail(Errc::InvalidArgument, "config: structure word lengths must be >= 1");
  }
  if (!(cfg.gap_tol > 0.0)) fail(Errc::InvalidArgument, "config: structure.gap_tol positive");
  return cfg;
}

Session::Session(const std::string& measure_json, const std::string& config_json)
    : measure_json_(measure_json),
      eta_(measure_from_json(measure_json)),
      mu_(linear_projection(eta_)),
      validation_(validate(eta_)),
      config_(parse_session_config(config_json)) {}

void Session::require_computable() const {
  if (!validation_.structurally_valid()) {
    const ValidationIssue& issue = validation_.issues.front();
    fail(issue.code, issue.message);
  }
}

void Session::render_durations() {
  json doc = json::array();
  for (const auto& [name, seconds] : durations_) {
    doc.push_back({{"stage", name}, {"seconds", seconds}});
  }
  artifacts_["durations.json"] = doc.dump(2) + "\n";
}

void Session::run(const std::string& stage) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto record = [&] {
    const auto t1 = std::chrono::steady_clock::now();
    durations_.emplace_back(stage, std::chrono::duration<double>(t1 - t0).count());
    render_durations();
  };

  try {
    if (stage == "validate") {
      stage_validate();
    } else if (stage == "spectral") {
      require_computable();
      ensure_spectral();
      if (!chi_) fail_stored_chi_error();
      if (!nu1_) fail(Errc::NonStationaryResidual, nu1_error_message_);
    } else if (stage == "sample") {
      require_computable();
      ensure_samples();
    } else if (stage == "tails") {
      require_computable();
      ensure_tails();
    } else if (stage == "structure") {
      require_computable();
      ensure_structure();
    } else if (stage == "report") {
      stage_report();
    } else {
      fail(Errc::InvalidArgument, "unknown stage: " + stage);
    }
  } catch (...) {
    record();
    throw;
  }
  record();
}

void Session::fail_stored_chi_error() const {
  Errc code = Errc::PreconditionFailed;
  if (chi_error_code_ == "NoRootBelowCap") code = Errc::NoRootBelowCap;
  if (chi_error_code_ == "AlphaNotNegative") code = Errc::AlphaNotNegative;
  fail(code, chi_error_message_);
}

std::string validation_document(const ValidationResult& result) {
  json doc;
  doc["structurally_valid"] = result.structurally_valid();
  doc["degenerate_fixed_point"] = result.degenerate();
  if (result.degenerate()) {
    json point = json::array();
    for (int i = 0; i < result.common_fixed_point->size(); ++i) {
      point.push_back((*result.common_fixed_point)(i));
    }
    doc["common_fixed_point"] = point;
  }
  json issues = json::array();
  for (const ValidationIssue& issue : result.issues) {
    issues.push_back({{"code", errc_name(issue.code)}, {"message", issue.message}});
  }
  doc["issues"] = issues;
  doc["accepted"] = result.structurally_valid() && !result.degenerate();
  return doc.dump(2) + "\n";
}

void Session::stage_validate() {
  artifacts_["validation.json"] = validation_document(validation_);

  if (!validation_.structurally_valid()) {
    const ValidationIssue& issue = validation_.issues.front();
    fail(issue.code, issue.message);
  }
  if (validation_.degenerate()) {
    fail(Errc::DegenerateFixedPoint,
         "every atom fixes a common point; the stationary law is that point mass");
  }
}

void Session::ensure_spectral() {
  if (spectral_done_) return;
  spectral_done_ = true;

  AlphaEstimate alpha = top_lyapunov(
      mu_, config_.alpha_steps, config_.alpha_trials,
      derive_seed(config_.seed, static_cast<std::uint64_t>(StreamOp::Lyapunov), 0), nullptr,
      config_.threads);
  alpha_ = alpha;
  if (mu_.dim() == 1) exact_alpha_ = exact_alpha_d1(mu_);

  try {
    chi_ = chi_solve(mu_, config_.s_max, config_.power,
                     derive_seed(config_.seed, static_cast<std::uint64_t>(StreamOp::ChiSolve), 0),
                     alpha, config_.threads);
  } catch (const Error& e) {
    chi_error_code_ = errc_name(e.code());
    chi_error_message_ = e.what();
  }

  const double upper = chi_ ? std::min(1.5 * chi_->chi, config_.s_max)
                            : std::min(2.0, config_.s_max);
  for (int j = 0; j < config_.kcurve_points; ++j) {
    const double s = upper * j / (config_.kcurve_points - 1);
    const KEstimate est = k_estimate(
        mu_, s, config_.power,
        derive_seed(config_.seed, static_cast<std::uint64_t>(StreamOp::KEstimate), j));
    kgrid_s_.push_back(s);
    kgrid_k_.push_back(est.k);
    kgrid_se_.push_back(est.stderr_);
  }

  if (chi_) {
    PowerIterParams nu1_params = config_.power;
    nu1_params.n_particles = config_.nu1_particles;
    try {
      nu1_ = stationary_direction_measure(
          mu_, chi_->chi, nu1_params,
          derive_seed(config_.seed, static_cast<std::uint64_t>(StreamOp::DirectionMeasure), 0));
    } catch (const Error& e) {
      nu1_error_message_ = e.what();
    }
  }

  // profile.json
  json profile;
  json alpha_doc;
  alpha_doc["value"] = json_or_null(alpha.alpha);
  alpha_doc["stderr"] = json_or_null(alpha.stderr_);
  alpha_doc["n_steps"] = alpha.n_steps;
  alpha_doc["n_trials"] = alpha.n_trials;
  alpha_doc["hit_zero"] = alpha.hit_zero;
  alpha_doc["exact_d1"] = exact_alpha_ ? json_or_null(*exact_alpha_) : json(nullptr);
  profile["alpha"] = alpha_doc;
  if (chi_) {
    profile["chi"] = {{"value", chi_->chi},
                      {"k_at_chi", chi_->k_at_chi},
                      {"stderr", chi_->stderr_at_chi},
                      {"residual", chi_->residual},
                      {"evaluations", chi_->evaluations}};
  } else {
    profile["chi"] = nullptr;
    profile["chi_error"] = {{"code", chi_error_code_}, {"message", chi_error_message_}};
  }
  json kcurve = json::array();
  for (std::size_t j = 0; j < kgrid_s_.size(); ++j) {
    kcurve.push_back({{"s", kgrid_s_[j]}, {"k", kgrid_k_[j]}, {"stderr", kgrid_se_[j]}});
  }
  profile["kcurve"] = kcurve;
  // Uniqueness of the direction measure holds under condition i.p.; without a
  // proximal witness the particle result may depend on initialization and the
  // profile must say so instead of claiming uniqueness.
  std::string ip = "not_applicable";
  if (mu_.dim() >= 2) {
    const int scan_len = std::min(config_.max_len, 6);
    ip = proximal_scan(mu_, scan_len, config_.gap_tol).empty() ? "not_witnessed" : "witnessed";
  }
  if (nu1_) {
    profile["nu1"] = {{"bins", static_cast<int>(nu1_->histogram.size())},
                      {"histogram", nu1_->histogram},
                      {"residual_tv", nu1_->residual_tv},
                      {"n_particles", config_.nu1_particles},
                      {"ip", ip}};
    if (ip == "not_witnessed") {
      profile["nu1"]["note"] = "i.p. not witnessed: result may depend on initialization";
    }
  } else {
    profile["nu1"] = nullptr;
    if (!nu1_error_message_.empty()) profile["nu1_error"] = nu1_error_message_;
  }
  artifacts_["profile.json"] = profile.dump(2) + "\n";

  std::string csv = "s,k,stderr\n";
  for (std::size_t j = 0; j < kgrid_s_.size(); ++j) {
    csv += fmt_double(kgrid_s_[j]);
    csv.push_back(',');
    csv += fmt_double(kgrid_k_[j]);
    csv.push_back(',');
    csv += fmt_double(kgrid_se_[j]);
    csv.push_back('\n');
  }
  artifacts_["kcurve.csv"] = std::move(csv);
}

void Session::ensure_samples() {
  if (samples_done_) return;
  samples_done_ = true;

  samples_ = sample_stationary(eta_, config_.n_samples, config_.tol, config_.max_depth,
                               config_.seed, config_.threads);

  std::string csv;
  csv.reserve(static_cast<std::size_t>(samples_->samples.size()) * 20);
  for (const Eigen::VectorXd& x : samples_->samples) {
    for (int i = 0; i < x.size(); ++i) {
      if (i > 0) csv.push_back(',');
      csv += fmt_double(x(i));
    }
    csv.push_back('\n');
  }
  artifacts_["samples.csv"] = std::move(csv);

  json meta;
  meta["d"] = samples_->d;
  meta["n_requested"] = config_.n_samples;
  meta["n_samples"] = static_cast<std::int64_t>(samples_->samples.size());
  meta["truncation_failures"] = samples_->truncation_failures;
  meta["failure_fraction"] =
      static_cast<double>(samples_->truncation_failures) / config_.n_samples;
  meta["tol"] = samples_->truncation_tol;
  meta["max_depth"] = samples_->max_depth;
  meta["seed"] = samples_->seed;
  artifacts_["samples_meta.json"] = meta.dump(2) + "\n";
}

void Session::ensure_structure() {
  if (structure_done_) return;
  structure_done_ = true;
  const int d = eta_.dim();
  const int n_atoms = static_cast<int>(eta_.size());

  fixed_point_len_used_ = clamp_word_len(n_atoms, config_.fixed_point_max_len);
  fixed_points_ = fixed_points(eta_, fixed_point_len_used_);

  witness_len_used_ =
      clamp_word_len(n_atoms, d == 1 ? std::min(config_.max_len, 8) : config_.max_len);
  witnesses_ = proximal_scan(mu_, witness_len_used_, config_.gap_tol);
  spectrum_ = spectrum_and_arithmeticity(mu_, witness_len_used_);

  if (d >= 2) {
    cone_ = classify_cone(mu_, witnesses_, clamp_word_len(n_atoms, config_.max_len));
  } else {
    d1_case_ = classify_case_d1(eta_, clamp_word_len(n_atoms, config_.d1_max_len));
  }

  json doc;
  json fp;
  fp["max_len"] = fixed_point_len_used_;
  fp["count"] = static_cast<std::int64_t>(fixed_points_.size());
  if (!fixed_points_.empty()) {
    Eigen::VectorXd lo = fixed_points_.front().point;
    Eigen::VectorXd hi = lo;
    for (const FixedPointEntry& e : fixed_points_) {
      lo = lo.cwiseMin(e.point);
      hi = hi.cwiseMax(e.point);
    }
    fp["min"] = std::vector<double>(lo.data(), lo.data() + lo.size());
    fp["max"] = std::vector<double>(hi.data(), hi.data() + hi.size());
  }
  doc["fixed_points"] = fp;

  json prox;
  prox["max_len"] = witness_len_used_;
  prox["count"] = static_cast<std::int64_t>(witnesses_.size());
  if (!witnesses_.empty()) {
    const ProximalWitness& top = witnesses_.front();
    prox["first"] = {{"word", join_indices(top.indices)},
                     {"lambda", top.lambda},
                     {"gap", top.gap}};
  }
  doc["proximal"] = prox;
  doc["ip_witnessed"] = !witnesses_.empty();

  json spec;
  spec["count"] = static_cast<std::int64_t>(spectrum_->logs.size());
  spec["min_positive_gap"] = spectrum_->min_positive_gap;
  spec["note"] = spectrum_->note;
  if (spectrum_->d1_applicable) {
    spec["non_arithmetic_witness"] = spectrum_->non_arithmetic_witness;
  } else {
    spec["non_arithmetic_witness"] = nullptr;
  }
  doc["spectrum"] = spec;

  if (cone_) {
    doc["cone"] = {{"case", cone_name(cone_->value)},
                   {"note", cone_->note},
                   {"n_directions", cone_->n_directions}};
  } else {
    doc["cone"] = nullptr;
  }
  if (d1_case_) {
    json d1;
    d1["case"] = d1_name(d1_case_->value);
    d1["side"] = d1_case_->side;
    d1["m_estimate"] = d1_case_->value == D1Case::CaseII2 ? json(d1_case_->m_estimate)
                                                          : json(nullptr);
    d1["note"] = d1_case_->note;
    doc["d1"] = d1;
  } else {
    doc["d1"] = nullptr;
  }
  artifacts_["structure_report.json"] = doc.dump(2) + "\n";

  std::string csv = "length,word";
  for (int i = 0; i < d; ++i) csv += ",x_" + std::to_string(i);
  csv += ",spectral_radius\n";
  for (const FixedPointEntry& e : fixed_points_) {
    csv += std::to_string(e.indices.size());
    csv.push_back(',');
    csv += join_indices(e.indices);
    for (int i = 0; i < d; ++i) {
      csv.push_back(',');
      csv += fmt_double(e.point(i));
    }
    csv.push_back(',');
    csv += fmt_double(e.spectral_radius);
    csv.push_back('\n');
  }
  artifacts_["fixed_points.csv"] = std::move(csv);
}

void Session::ensure_tails() {
  if (tails_done_) return;
  ensure_spectral();
  if (!chi_) fail_stored_chi_error();
  ensure_samples();
  ensure_structure();
  tails_done_ = true;

  const int d = eta_.dim();
  const double chi = chi_->chi;
  const std::vector<Eigen::VectorXd>& xs = samples_->samples;
  std::vector<double> norms(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) norms[i] = xs[i].norm();

  const int n = static_cast<int>(xs.size());
  const int k_order = std::clamp(static_cast<int>(std::lround(config_.k_order_fraction * n)),
                                 10, std::max(10, n / 2 - 1));
  hill_ = hill_estimator(norms, k_order);

  const double t_lo = quantile(norms, config_.t_quantile_lo);
  const double t_hi = quantile(norms, config_.t_quantile_hi);
  const std::vector<double> t_grid = geometric_grid(t_lo, t_hi, config_.n_t);
  if (!t_grid.empty()) {
    radial_ = radial_homogeneity(norms, chi, t_grid);
  } else {
    radial_note_ = "norm quantile range degenerate; radial curve skipped";
  }

  std::vector<Eigen::VectorXd> directions;
  if (d == 1) {
    directions.push_back(Eigen::VectorXd::Constant(1, 1.0));
    directions.push_back(Eigen::VectorXd::Constant(1, -1.0));
  } else {
    for (int i = 0; i < d; ++i) {
      directions.push_back(Eigen::VectorXd::Unit(d, i));
      directions.push_back(-Eigen::VectorXd::Unit(d, i));
    }
  }
  for (const Eigen::VectorXd& u : directions) {
    DirectionalRow row;
    row.u = u;
    std::vector<double> positive;
    for (const Eigen::VectorXd& x : xs) {
      const double v = u.dot(x);
      if (v > 0.0) positive.push_back(v);
    }
    if (static_cast<int>(positive.size()) < 50) {
      row.empty = true;
    } else {
      const double lo = quantile(positive, config_.t_quantile_lo);
      const double hi = quantile(positive, config_.t_quantile_hi);
      const std::vector<double> grid = geometric_grid(lo, hi, config_.n_t);
      if (grid.empty()) {
        row.empty = true;
      } else {
        const DirectionalTail tail = directional_tail(xs, u, chi, grid);
        row.c_hat = tail.c_hat;
        row.stderr_ = tail.stderr_;
      }
    }
    directional_.push_back(std::move(row));
  }

  angular_ = angular_measure(xs, config_.threshold_quantile);

  if (nu1_) {
    bool case_two = false;
    if (d == 1 && d1_case_) {
      case_two = d1_case_->value == D1Case::CaseII1 || d1_case_->value == D1Case::CaseII2;
    } else if (cone_) {
      case_two = cone_->value == ConeCase::CaseII;
    }
    angular_vs_nu1_ =
        compare_angular_to_nu1(angular_->histogram, nu1_->histogram, SphereBinning(d), case_two);
  }

  std::vector<double> mellin_s = config_.mellin_s;
  if (d == 1) {
    // Default grid stays below chi/2 so the residual summands keep a finite
    // variance and the 3-sigma pass rule is calibrated for any seed.
    if (mellin_s.empty()) mellin_s = {0.1 * chi, 0.25 * chi, 0.45 * chi};
    mellin_ = mellin_identity_check(eta_, chi, mellin_s, *samples_, config_.seed);
  }

  // tail_report.json
  json doc;
  doc["chi"] = chi;
  doc["hill"] = {{"chi_hat", hill_->chi_hat},
                 {"stderr", hill_->stderr_},
                 {"k_order", hill_->k_order}};
  if (radial_) {
    doc["radial"] = {{"flatness", radial_->flatness},
                     {"t", radial_->t},
                     {"value", radial_->value},
                     {"stderr", radial_->stderr_}};
  } else {
    doc["radial"] = nullptr;
    doc["radial_note"] = radial_note_;
  }
  json dir_rows = json::array();
  for (const DirectionalRow& row : directional_) {
    dir_rows.push_back(
        {{"u", std::vector<double>(row.u.data(), row.u.data() + row.u.size())},
         {"c_hat", row.c_hat},
         {"stderr", row.stderr_},
         {"empty", row.empty}});
  }
  doc["directional"] = dir_rows;
  doc["angular"] = {{"threshold_quantile", angular_->threshold_quantile},
                    {"threshold", angular_->threshold},
                    {"n_exceedances", angular_->n_exceedances},
                    {"bins", static_cast<int>(angular_->histogram.size())}};
  if (angular_vs_nu1_) {
    doc["angular_vs_nu1"] = {{"mixture", angular_vs_nu1_->mixture},
                             {"tv", angular_vs_nu1_->tv},
                             {"tv_projective", angular_vs_nu1_->tv_projective},
                             {"c_plus", angular_vs_nu1_->c_plus},
                             {"c_minus", angular_vs_nu1_->c_minus}};
  } else {
    doc["angular_vs_nu1"] = nullptr;
  }
  json mellin_rows = json::array();
  for (const MellinPoint& p : mellin_) {
    mellin_rows.push_back({{"s", p.s},
                           {"k", p.k},
                           {"residual", p.residual},
                           {"stderr", p.stderr_},
                           {"pass", p.pass}});
  }
  doc["mellin"] = mellin_rows;
  artifacts_["tail_report.json"] = doc.dump(2) + "\n";

  // radial.csv
  std::string radial_csv = "t,value,stderr\n";
  if (radial_) {
    for (std::size_t j = 0; j < radial_->t.size(); ++j) {
      radial_csv += fmt_double(radial_->t[j]);
      radial_csv.push_back(',');
      radial_csv += fmt_double(radial_->value[j]);
      radial_csv.push_back(',');
      radial_csv += fmt_double(radial_->stderr_[j]);
      radial_csv.push_back('\n');
    }
  }
  artifacts_["radial.csv"] = std::move(radial_csv);

  std::string dir_csv;
  for (int i = 0; i < d; ++i) dir_csv += "u_" + std::to_string(i) + ",";
  dir_csv += "c_hat,stderr,empty\n";
  for (const DirectionalRow& row : directional_) {
    for (int i = 0; i < d; ++i) {
      dir_csv += fmt_double(row.u(i));
      dir_csv.push_back(',');
    }
    dir_csv += fmt_double(row.c_hat);
    dir_csv.push_back(',');
    dir_csv += fmt_double(row.stderr_);
    dir_csv.push_back(',');
    dir_csv += row.empty ? "1" : "0";
    dir_csv.push_back('\n');
  }
  artifacts_["directional.csv"] = std::move(dir_csv);

  const SphereBinning binning(d);
  std::string ang_csv;
  for (int i = 0; i < d; ++i) ang_csv += "c_" + std::to_string(i) + ",";
  ang_csv += "mass\n";
  for (int b = 0; b < binning.bin_count(); ++b) {
    for (int i = 0; i < d; ++i) {
      ang_csv += fmt_double(binning.centers()[b](i));
      ang_csv.push_back(',');
    }
    ang_csv += fmt_double(angular_->histogram[b]);
    ang_csv.push_back('\n');
  }
  artifacts_["angular.csv"] = std::move(ang_csv);
}

void Session::stage_report() {
  stage_validate();  // throws on structural problems and on a degenerate measure
  ensure_spectral();
  if (!chi_) fail_stored_chi_error();
  ensure_samples();
  ensure_structure();
  ensure_tails();

  const int d = eta_.dim();
  std::vector<CheckRow> checks;
  const auto add = [&](std::string name, double stat, double thr, bool pass, std::string note) {
    checks.push_back({std::move(name), stat, thr, pass, std::move(note)});
  };

  {
    const double stat = alpha_->alpha + 3.0 * alpha_->stderr_;
    add("alpha_negative", stat, 0.0, stat < 0.0, "alpha + 3 stderr must be negative");
  }
  {
    const double stat = std::abs(kgrid_k_.front() - 1.0);
    add("k_zero_is_one", stat, 0.0, stat == 0.0, "k(0) = 1 exactly");
  }
  {
    double margin = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (std::size_t i = 1; i + 1 < kgrid_s_.size(); ++i) {
      if (kgrid_k_[i - 1] <= 0.0 || kgrid_k_[i] <= 0.0 || kgrid_k_[i + 1] <= 0.0) {
        ok = false;
        break;
      }
      const double second = std::log(kgrid_k_[i + 1]) - 2.0 * std::log(kgrid_k_[i]) +
                            std::log(kgrid_k_[i - 1]);
      const double allow = 3.0 * (kgrid_se_[i - 1] / kgrid_k_[i - 1] +
                                  2.0 * kgrid_se_[i] / kgrid_k_[i] +
                                  kgrid_se_[i + 1] / kgrid_k_[i + 1]) +
                           1e-9;
      margin = std::min(margin, second + allow);
    }
    add("k_log_convexity", ok ? margin : -1.0, 0.0, ok && margin >= 0.0,
        "discrete second difference of log k with 3 stderr allowance");
  }
  {
    const double thr = std::max(2.0 * chi_->stderr_at_chi, 1e-4);
    add("chi_residual", chi_->residual, thr, chi_->residual <= thr, "|k(chi) - 1|");
  }
  {
    const double stat = nu1_ ? nu1_->residual_tv : 1.0;
    add("nu1_residual_tv", stat, 0.05, nu1_ && stat <= 0.05,
        nu1_ ? "one-step TV movement of the direction measure" : nu1_error_message_);
  }
  {
    const double frac =
        static_cast<double>(samples_->truncation_failures) / config_.n_samples;
    add("truncation_failure_fraction", frac, 0.001, frac <= 0.001,
        "backward samples abandoned at max_depth");
  }
  {
    const StationarityResult st = stationarity_check(*samples_, eta_, config_.seed);
    std::ostringstream os;
    os << "two-sample KS at 0.001";
    if (st.n_projections > 1) os << " over " << st.n_projections << " projections";
    add("stationarity_ks", st.statistic, st.critical, st.pass, os.str());
  }
  {
    const double stat = std::abs(hill_->chi_hat - chi_->chi) / chi_->chi;
    add("hill_vs_chi", stat, 0.10, stat <= 0.10, "relative gap between Hill and root of k");
  }
  {
    if (radial_) {
      add("radial_flatness", radial_->flatness, 0.25, radial_->flatness <= 0.25,
          "(max - min) / mean of t^chi * tail mass over the t grid");
    } else {
      add("radial_flatness", -1.0, 0.25, false, radial_note_);
    }
  }
  {
    if (angular_vs_nu1_) {
      double stat = angular_vs_nu1_->tv;
      const char* note = angular_vs_nu1_->mixture
                             ? "residual TV of the best two-component fit"
                             : "TV between angular measure and direction measure";
      if (!angular_vs_nu1_->mixture && d >= 2) {
        // The sign coordinate of the extreme-direction law mixes on log t
        // scales; at reachable thresholds only the projective part of the
        // proportionality is testable.
        stat = angular_vs_nu1_->tv_projective;
        note = "projective TV between angular measure and direction measure";
      }
      add("angular_vs_nu1", stat, 0.10, stat <= 0.10, note);
    } else {
      add("angular_vs_nu1", 1.0, 0.10, false, "direction measure unavailable");
    }
  }
  if (d == 1) {
    double worst = 0.0;
    for (const MellinPoint& p : mellin_) {
      if (p.stderr_ > 0.0) worst = std::max(worst, std::abs(p.residual) / p.stderr_);
    }
    add("mellin_identity", worst, 3.0, worst <= 3.0,
        "max |residual| / stderr of the transform identity over the s list");
  }
  {
    // classification consistency against the measured tails
    bool pass = true;
    double stat = 0.0;
    std::string note;
    if (d == 1) {
      const auto margin = [&](int side) {
        for (const DirectionalRow& row : directional_) {
          if ((side > 0 && row.u(0) > 0.0) || (side < 0 && row.u(0) < 0.0)) {
            if (row.empty) return -1.0;  // no upper tail on this side
            return row.c_hat - 3.0 * row.stderr_;
          }
        }
        return -1.0;
      };
      const double plus = margin(+1);
      const double minus = margin(-1);
      switch (d1_case_->value) {
        case D1Case::CaseI:
        case D1Case::CaseII1:
          stat = std::min(plus, minus);
          pass = stat > 0.0;
          note = "both half-line tails must be positive at 3 stderr";
          break;
        case D1Case::CaseII2: {
          const double escape = d1_case_->side > 0 ? plus : minus;
          const double bounded = d1_case_->side > 0 ? minus : plus;
          stat = escape;
          pass = escape > 0.0 && bounded <= 0.0;
          note = "escape side positive at 3 stderr, bounded side empty";
          break;
        }
        default:
          pass = true;
          note = "no d = 1 verdict; skipped";
      }
    } else {
      if (cone_ && cone_->value == ConeCase::CaseI && nu1_) {
        // Case I has a unique stationary direction measure on the sphere, and
        // uniqueness forces antipodal symmetry (the dynamics commutes with
        // the antipodal map). The raw angular histogram keeps a sign bias at
        // finite thresholds, so the symmetry is required of nu1 itself.
        const SphereBinning binning(d);
        stat = total_variation(nu1_->histogram,
                               binning.antipodal_histogram(nu1_->histogram));
        pass = stat <= 0.10;
        note = "case I: direction measure must be antipodally symmetric (TV)";
      } else if (cone_ && cone_->value == ConeCase::CaseI) {
        pass = false;
        note = "case I: direction measure unavailable, symmetry not checkable";
      } else if (cone_ && cone_->value == ConeCase::CaseII) {
        pass = true;
        note = "case II: two minimal sets, no symmetry requirement";
      } else {
        pass = true;
        note = "i.p. not witnessed: no cone verdict";
      }
    }
    add("classification_consistency", stat, 0.0, pass, note);
  }

  bool overall = true;
  json rows = json::array();
  for (const CheckRow& row : checks) {
    overall = overall && row.pass;
    rows.push_back({{"name", row.name},
                    {"statistic", json_or_null(row.statistic)},
                    {"threshold", row.threshold},
                    {"pass", row.pass},
                    {"note", row.note}});
  }

  json report;
  report["version"] = kVersion;
  report["measure"] = json::parse(measure_json_);
  report["seed"] = config_.seed;
  report["profile"] = json::parse(artifacts_.at("profile.json"));
  report["sample"] = json::parse(artifacts_.at("samples_meta.json"));
  report["tails"] = json::parse(artifacts_.at("tail_report.json"));
  report["structure"] = json::parse(artifacts_.at("structure_report.json"));
  report["checks"] = rows;
  report["pass"] = overall;
  artifacts_["report.json"] = report.dump(2) + "\n";

  if (!overall) {
    std::string failing;
    for (const CheckRow& row : checks) {
      if (!row.pass) {
        if (!failing.empty()) failing += ", ";
        failing += row.name;
      }
    }
    fail(Errc::CheckFailed, "invariant checks failed: " + failing);
  }
}

}  // namespace htlab
