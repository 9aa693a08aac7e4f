#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "amo/arith.hpp"
#include "amo/measure.hpp"
#include "json.hpp"

namespace amo::harness {

struct FrequencyConfig {
  std::string mode = "synthesize";  // "synthesize" | "expand"
  std::string alpha = "golden";     // for expand
  int n_max = 40;
  double beta = 1.0;                // for synthesize
  std::string q_cap = "1000000000000000";
  // first n of the beta-hat tail; default: last scale when synthesizing, n_max/2 otherwise
  std::optional<std::size_t> tail_start;
};

struct GridConfig {
  double base = 2.0;
  int j_min = 2;
  int j_max = 10;
};

struct SlackConfig {
  double dimension = 0.15;
  double decay = 0.1;
  double inequality = 0.1;
};

// generator for the measure-dims / mborel subcommands
struct MeasureConfig {
  std::string kind = "cantor";  // cantor | lebesgue | atom | csv | spectral
  int depth = 12;
  double left_weight = 0.5;
  std::size_t n_atoms = 100000;
  std::string path;
  std::vector<std::int64_t> sites{0};  // for kind = spectral
};

struct ExperimentConfig {
  std::string experiment = "verify-transition";
  FrequencyConfig frequency;
  // ln lambda; "beta_hat" in JSON pins it to the estimated beta
  double log_lambda = 0.7;
  bool log_lambda_is_beta_hat = false;
  double theta = 0.0;
  std::int64_t N = 10000;
  GridConfig grid;
  std::vector<double> q_list{1.5, 2.0};
  double m = 2.0;
  std::size_t n_samples = 50;
  std::uint64_t seed = 1;
  SlackConfig slack;
  std::optional<double> t1, t2;
  double sigma = 0.01;
  arith::DiophantineParams diophantine;
  std::size_t n_eigenvectors = 8;
  std::size_t n_energies = 6;
  std::vector<double> L_values{1e2, 1e3, 1e4};
  std::vector<double> eps_values{1e-2, 1e-3, 1e-4};
  double pass_fraction = 0.8;
  MeasureConfig measure;
  std::string report_path;
  std::string csv_dir;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

enum class CheckKind { Hard, Soft };
enum class CheckStatus { Pass, Fail, SoftPass, Warn, Skipped };

std::string to_string(CheckKind k);
std::string to_string(CheckStatus s);

struct Check {
  std::string name;
  CheckKind kind = CheckKind::Soft;
  CheckStatus status = CheckStatus::Skipped;
  std::string relation = "<=";  // measured <relation> bound (+/- slack)
  double measured = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  std::string measured_from = "computed";
  std::string bound_from = "computed";
  std::string window;  // scale window or parameter range the numbers refer to
  std::string note;
  nlohmann::ordered_json details;
};

// measured <= bound + slack (or >= bound - slack); status from kind.
Check make_check(std::string name, CheckKind kind, std::string relation, double measured,
                 double bound, double slack);

struct VerificationReport {
  std::string experiment;
  nlohmann::ordered_json inputs;
  nlohmann::ordered_json derived;
  std::vector<Check> checks;
  nlohmann::ordered_json traces;
  nlohmann::ordered_json timings;  // seconds; the only non-reproducible part

  bool hard_failure() const;
  std::size_t count(CheckStatus s) const;
  const Check* find(const std::string& name) const;
  nlohmann::ordered_json to_json(bool with_timings = true) const;
};

// Frequency from the config (synthesized or expanded) and its beta estimate.
struct FrequencyBundle {
  std::shared_ptr<const arith::Frequency> freq;
  arith::BetaEstimate beta;
};
FrequencyBundle build_frequency(const FrequencyConfig& c);

measure::DiscreteMeasure build_measure(const ExperimentConfig& c);

VerificationReport run_verify_mborel(const ExperimentConfig& c);
VerificationReport run_verify_transition(const ExperimentConfig& c);
VerificationReport run_localization_window(const ExperimentConfig& c);

// Default examples: standard transition (ln lambda = 0.7) and localization (1.5).
ExperimentConfig default_config(const std::string& experiment);

}  // namespace amo::harness
