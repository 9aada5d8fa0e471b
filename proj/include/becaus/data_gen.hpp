#pragma once

#include "becaus/linalg.hpp"
#include "becaus/lti.hpp"
#include "becaus/scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace becaus {

struct UniformRange {
  double lo = -1.0;
  double hi = 1.0;
};

/// I.i.d. uniform distributions for each signal role.
struct InputDistributions {
  UniformRange theta;
  UniformRange psi;
  UniformRange latent;
};

/// How Structure I data is produced. Both modes give the same observed
/// statistics: two independent i.i.d. streams.
enum class IndependenceMode {
  /// theta and psi drive a system whose output v is recorded as latent.
  DiscardedOutputSystem,
  /// theta and psi are bare noise streams; no system is involved.
  IndependentStreams,
};

struct GenerateOptions {
  InputDistributions distributions;
  IndependenceMode independence_mode = IndependenceMode::DiscardedOutputSystem;
  /// 0 selects lag + 1.
  Eigen::Index T_ini = 0;
  /// Defaults to (1, 0, ..., 0).
  std::optional<Vector> x0;
  /// Stream dimensions for IndependentStreams mode.
  Eigen::Index theta_dim = 1;
  Eigen::Index psi_dim = 1;
  /// Attempts (fresh derived seeds) before IdentifiabilityError.
  int max_attempts = 20;
  ToleranceConfig tol;
};

struct LabeledDataset {
  TimeSeries theta;
  TimeSeries psi;
  /// Unobserved signal v, kept for validation only.
  std::optional<TimeSeries> latent;
  CausalScenario truth;
  std::optional<LtiSystem> sys;
  Eigen::Index T = 0;
  Eigen::Index T_ini = 0;
  /// Seed the data was actually drawn with (differs from the requested seed
  /// after an identifiability retry).
  std::uint64_t seed = 0;
  std::uint64_t requested_seed = 0;
  Vector x0;
};

/// Draws inputs, simulates outputs, assigns theta/psi/v per the scenario's
/// roles and verifies identifiability. Throws IdentifiabilityError when every
/// attempt fails the rank condition.
LabeledDataset generate(const CausalScenario& scenario,
                        const std::optional<LtiSystem>& sys, Eigen::Index T,
                        std::uint64_t seed, const GenerateOptions& opts = {});

/// Observed and latent signal dimensions of a scenario.
struct ScenarioDims {
  Eigen::Index theta = 1;
  Eigen::Index psi = 1;
  /// Latent input (Structures III/IV) or discarded output (Structure I).
  Eigen::Index latent = 1;
};

/// System layout whose roles produce signals of the given dimensions.
SystemStructure layout_for(Relation rel, Eigen::Index order, const ScenarioDims& dims);

/// Smallest dimensions under which rel admits a discoverable system.
ScenarioDims minimal_dims(Relation rel);

/// The system input u assembled from the dataset's signals in role order.
TimeSeries system_inputs(const LabeledDataset& d);
/// The system output y assembled from the dataset's signals in role order.
TimeSeries system_outputs(const LabeledDataset& d);

struct IdentifiabilityReport {
  bool identifiable = false;
  int rank = 0;
  int expected = 0;
  Eigen::Index depth = 0;
};

/// rank(H_depth(w)) == k * depth + n.
IdentifiabilityReport hankel_rank_condition(const TimeSeries& w, Eigen::Index k,
                                            Eigen::Index n, Eigen::Index depth,
                                            const ToleranceConfig& tol = {});

/// Rank condition on col(theta, psi, v) for Structures I/III/IV and on
/// col(theta, psi) for Structure II, at depth T_ini + 2.
IdentifiabilityReport check_identifiable(const LabeledDataset& d,
                                         const ToleranceConfig& tol = {});

/// Observed columns of a dataset file.
struct ObservedData {
  TimeSeries theta;
  TimeSeries psi;
};

/// CSV with header theta_0.., psi_0.. and one row per time step.
void write_dataset_csv(std::ostream& os, const TimeSeries& theta,
                       const TimeSeries& psi);
std::string dataset_csv(const LabeledDataset& d);

/// Reads a dataset CSV, splitting the columns as theta_dim + psi_dim. Throws
/// ParseError with the offending line, DimensionError on a column mismatch.
ObservedData read_dataset_csv(std::istream& is, Eigen::Index theta_dim,
                              Eigen::Index psi_dim);
ObservedData read_dataset_csv_file(const std::string& path, Eigen::Index theta_dim,
                                   Eigen::Index psi_dim);

/// JSON sidecar with truth label, system, T, T_ini and seed.
nlohmann::json dataset_sidecar(const LabeledDataset& d);

/// Writes <stem>.csv and <stem>.json.
void export_dataset(const LabeledDataset& d, const std::string& stem);

}  // namespace becaus
