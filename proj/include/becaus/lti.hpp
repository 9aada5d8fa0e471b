#pragma once

#include "becaus/linalg.hpp"
#include "becaus/rng.hpp"
#include "becaus/scenario.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace becaus {

/// Discrete-time i/s/o model x(t+1) = A x(t) + B u(t), y(t) = C x(t) + D u(t)
/// with u = col(u1, u2) and y = col(y1, y2).
///
/// input_split is dim(u1) and output_split is dim(y1); either block may be
/// empty. The partition blocks B1, C2, D21, ... follow from the splits.
struct LtiSystem {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  Eigen::Index input_split = 0;
  Eigen::Index output_split = 0;

  Eigen::Index order() const noexcept { return A.rows(); }
  Eigen::Index input_dim() const noexcept { return B.cols(); }
  Eigen::Index output_dim() const noexcept { return C.rows(); }

  Matrix B1() const { return B.leftCols(input_split); }
  Matrix B2() const { return B.rightCols(input_dim() - input_split); }
  Matrix C1() const { return C.topRows(output_split); }
  Matrix C2() const { return C.bottomRows(output_dim() - output_split); }
  Matrix D11() const { return D.topLeftCorner(output_split, input_split); }
  Matrix D12() const {
    return D.topRightCorner(output_split, input_dim() - input_split);
  }
  Matrix D21() const {
    return D.bottomLeftCorner(output_dim() - output_split, input_split);
  }
  Matrix D22() const {
    return D.bottomRightCorner(output_dim() - output_split,
                               input_dim() - input_split);
  }

  /// Throws DimensionError on inconsistent shapes or splits.
  void validate() const;
};

/// Builds and validates a system. Negative splits mean "whole block in u1/y1".
LtiSystem make_system(Matrix A, Matrix B, Matrix C, Matrix D,
                      Eigen::Index input_split = -1,
                      Eigen::Index output_split = -1);

struct SystemStructure {
  Eigen::Index order = 1;
  Eigen::Index input_dim = 1;
  Eigen::Index output_dim = 1;
  /// Requested lag; 0 leaves it unconstrained.
  Eigen::Index lag = 0;
  /// Partition sizes dim(u1) and dim(y1); -1 picks the scenario default.
  Eigen::Index input_split = -1;
  Eigen::Index output_split = -1;
};

/// States x(0), ..., x(T) as columns.
struct StateTrajectory {
  Matrix states;

  auto at(Eigen::Index t) const { return states.col(t); }
  Eigen::Index length() const noexcept { return states.cols(); }
};

struct Simulation {
  TimeSeries y;
  StateTrajectory x;
};

/// Runs the recursion for t = 0, ..., T-1. Throws LengthError if u is shorter
/// than T.
Simulation simulate(const LtiSystem& sys, const TimeSeries& u, const Vector& x0,
                    Eigen::Index T);

/// col(C, CA, ..., CA^(tau-1)).
Matrix observability_matrix(const LtiSystem& sys, Eigen::Index tau);
/// [B, AB, ..., A^(tau-1) B].
Matrix controllability_matrix(const LtiSystem& sys, Eigen::Index tau);
/// Block lower-triangular impulse-response matrix with D on the diagonal and
/// C A^(i-j-1) B below it.
Matrix toeplitz_matrix(const LtiSystem& sys, Eigen::Index tau);

bool is_observable(const LtiSystem& sys, const ToleranceConfig& tol = {});
bool is_controllable(const LtiSystem& sys, const ToleranceConfig& tol = {});

/// Smallest tau >= 1 with rank(O_tau) = n. Throws UnobservableSystemError if
/// the rank never reaches n.
Eigen::Index compute_lag(const LtiSystem& sys, const ToleranceConfig& tol = {});

/// Causality-discoverability conditions on C and D, both the unified set and
/// the weaker per-structure variants (Structure III reads the input partition
/// as (u, v); Structure IV reads the output partition as (theta, psi)).
struct DiscoverabilityReport {
  bool d11_nonzero = false;
  bool d22_nonzero = false;
  bool block1_rank_deficient = false;  // [C1, D11, D12] not full row rank
  bool block2_rank_deficient = false;  // [C2, D21, D22] not full row rank
  bool unified = false;                // all four of the above

  bool structure2 = false;  // D not full row rank
  bool structure3 = false;  // [C, D_u, D_v] not full row rank and D_v != 0
  bool structure4 = false;  // [C1, D_theta], [C2, D_psi] rank deficient, both D nonzero

  /// The per-structure condition relevant to s (Structure I has none).
  bool holds_for(Structure s) const;
};

DiscoverabilityReport check_discoverable(const LtiSystem& sys,
                                         const ToleranceConfig& tol = {});

struct GeneratorOptions {
  /// A is rescaled whenever its spectral radius exceeds this cap.
  double spectral_radius_cap = 1.05;
  /// Minimum sigma_min / sigma_max of the n-step controllability and
  /// observability matrices accepted as minimal.
  double min_normalized_sigma = 1e-4;
  int max_attempts = 10000;
  /// Realize output-block rank deficits with zero rows instead of random
  /// linear combinations of the other rows.
  bool zero_row_padding = false;
  /// Negative control: draw D with full row rank (Structure II) or [C, D]
  /// with full row rank (Structures III/IV).
  bool full_row_rank_feedthrough = false;
};

/// Draws one candidate for the scenario's role layout without any checks.
LtiSystem draw_system(const SystemStructure& st, const CausalScenario& scenario,
                      Rng& rng, const GeneratorOptions& opts = {});

/// Rejection-samples a minimal, well-conditioned system. When
/// require_discoverable is set, the scenario's per-structure condition must
/// also hold. Throws ExhaustionError after opts.max_attempts draws.
LtiSystem random_system(const SystemStructure& st, const CausalScenario& scenario,
                        std::uint64_t seed, bool require_discoverable,
                        const GeneratorOptions& opts = {},
                        const ToleranceConfig& tol = {});

inline LtiSystem random_discoverable_system(const SystemStructure& st,
                                            const CausalScenario& scenario,
                                            std::uint64_t seed,
                                            const GeneratorOptions& opts = {},
                                            const ToleranceConfig& tol = {}) {
  return random_system(st, scenario, seed, true, opts, tol);
}

struct XiniReconstruction {
  /// State at the first sample of the window (least-norm when not unique).
  Vector state;
  /// State immediately after the window, A^T x + sum A^(T-1-t) B u(t).
  Vector state_after;
  bool unique = false;
  int observability_rank = 0;
};

/// Recovers the state consistent with an initial window (u_ini, y_ini) from
/// y_ini = O x + T u_ini.
XiniReconstruction reconstruct_xini(const LtiSystem& sys, const TimeSeries& u_ini,
                                    const TimeSeries& y_ini,
                                    const ToleranceConfig& tol = {});

/// Self-describing text format; see docs in README.
std::string serialize_system(const LtiSystem& sys);
LtiSystem parse_system(std::string_view text);

}  // namespace becaus
