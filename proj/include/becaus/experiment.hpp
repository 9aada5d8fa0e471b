#pragma once

#include "becaus/classifier.hpp"
#include "becaus/data_gen.hpp"
#include "becaus/granger.hpp"
#include "becaus/nonlinear_probe.hpp"
#include "becaus/scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace becaus {

enum class ExperimentMode {
  Example1,
  Example2,
  Example3,
  Example4,
  MonteCarlo,
  Classify,
  NonlinearProbe,
};

std::string_view mode_label(ExperimentMode m);
/// Accepts the labels produced by mode_label; InputError otherwise.
ExperimentMode parse_mode(std::string_view text);

enum class ProbeFamily {
  /// Seeded tanh networks driven by theta; the truth is "theta is the input".
  Tanh,
  /// Relation 2 / Relation 3 datasets from discoverable LTI systems.
  Lti,
};

std::string_view probe_family_label(ProbeFamily f);
ProbeFamily parse_probe_family(std::string_view text);

struct ExperimentSpec {
  ExperimentMode mode = ExperimentMode::Example1;
  /// Base seed; trial seeds are derived from it.
  std::uint64_t seed = 2;
  /// Monte-Carlo trials per relation, or probe trials.
  int trials = 500;
  /// Fixed horizon; 0 draws T uniformly from [T_min, T_max] per trial.
  Eigen::Index T = 0;
  Eigen::Index T_min = 50;
  Eigen::Index T_max = 200;
  /// 0 selects lag + 1 for LTI data and 4 for the nonlinear probe.
  Eigen::Index T_ini = 0;
  /// LTI state dimensions are drawn from [1, max_order].
  Eigen::Index max_order = 4;
  /// State dimension of the probe's tanh networks.
  Eigen::Index tanh_order = 3;
  /// Negative control: draw D (or [C, D]) with full row rank, so the
  /// discoverability conditions fail.
  bool negative_control = false;
  /// Worker threads; 0 uses the hardware concurrency.
  int threads = 0;
  /// Include wall-clock timings in reports (they break byte-identical replay).
  bool record_timings = false;

  ToleranceConfig tol;
  GrangerConfig granger;
  ProbeConfig probe;
  ProbeFamily probe_family = ProbeFamily::Tanh;

  /// Classify mode input.
  std::string csv_path;
  Eigen::Index theta_dim = 1;
  Eigen::Index psi_dim = 1;

  /// Throws InputError when a mode-specific field is missing or invalid.
  void validate() const;
};

/// Granger verdicts of an example dataset at one fixed lag order.
struct GrangerLagVerdict {
  int lag = 0;
  bool theta_causes_psi = false;
  bool psi_causes_theta = false;
  /// Matches the outcome expected for this example.
  bool reproduces_expected = false;
  /// Nonempty when the regression at this lag could not be formed.
  std::string error;
};

struct TrialRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::optional<Relation> truth;
  Eigen::Index order = 0;
  Eigen::Index T = 0;
  Eigen::Index T_ini = 0;
  Eigen::Index theta_dim = 0;
  Eigen::Index psi_dim = 0;
  std::optional<BeCausOutcome> becaus;
  std::optional<GrangerScreen> granger;
  std::optional<ProbeResult> probe;
  bool becaus_correct = false;
  bool granger_correct = false;
  bool probe_correct = false;
  /// Nonempty when the trial raised; the trial then counts as a failure.
  std::string error;
  /// Nonempty when the Granger regressions could not be formed.
  std::string granger_error;
  double becaus_ms = 0.0;
  double granger_ms = 0.0;
};

struct RelationAccuracy {
  Relation relation = Relation::Independence;
  int trials = 0;
  int becaus_correct = 0;
  int becaus_inconclusive = 0;
  int becaus_misclassified = 0;
  int granger_correct = 0;
  int errors = 0;
  double becaus_accuracy = 0.0;
  double granger_accuracy = 0.0;
};

struct ExampleCheck {
  int example = 0;
  Relation expected_relation = Relation::Inconclusive;
  /// The Granger outcome the example is known for: "correct" (no direction),
  /// "misses theta->psi" or "bidirectional".
  std::string expected_granger;
  std::vector<GrangerLagVerdict> lag_sweep;
  bool becaus_matches = false;
  bool granger_matches = false;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<TrialRecord> trials;
  std::vector<RelationAccuracy> accuracy;
  std::optional<ExampleCheck> example;
  /// Probe modes: fraction of trials whose inferred input is the truth.
  std::optional<double> probe_accuracy;
  /// The mode's pass condition; false maps to the assertion exit code.
  bool passed = true;
  std::vector<std::string> failures;
  double elapsed_seconds = 0.0;
};

/// Example n with its documented system and distributions; BeCaus must
/// return the expected relation, and some lag order in 1..5 must reproduce
/// the expected Granger directions.
ExperimentReport run_example(int n, std::uint64_t seed, const ExperimentSpec& spec = {});

/// spec.trials discoverable (or, under the negative control, deliberately
/// non-discoverable) systems per relation. Passes when no discoverable trial
/// is misclassified, inconclusive or failed. Throws InputError for zero
/// trials.
ExperimentReport run_montecarlo(const ExperimentSpec& spec);

/// Classifies the CSV at spec.csv_path with the declared column split.
ExperimentReport classify_csv(const ExperimentSpec& spec);

/// Probe sweep over spec.trials seeded datasets of spec.probe_family.
ExperimentReport run_probe_study(const ExperimentSpec& spec);

/// Dispatches on spec.mode.
ExperimentReport run_experiment(const ExperimentSpec& spec);

nlohmann::json to_json(const ExperimentSpec& s);
nlohmann::json to_json(const TrialRecord& r, bool timings);
nlohmann::json to_json(const ExperimentReport& r);

/// One row per trial with a fixed header.
void write_trials_csv(std::ostream& os, const ExperimentReport& r);

}  // namespace becaus
