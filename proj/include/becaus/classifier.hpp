#pragma once

#include "becaus/linalg.hpp"
#include "becaus/scenario.hpp"

#include <json.hpp>

namespace becaus {

/// Row partitions of the depth-(T_ini + T_f) Hankel matrices of theta and psi:
/// H(theta) = [Theta_p; Theta_f], H(psi) = [Psi_p; Psi_f].
struct HankelBlocks {
  Matrix theta_past;  // (m * T_ini) x N
  Matrix theta_future;  // (m * T_f) x N
  Matrix psi_past;
  Matrix psi_future;
  /// First T_ini samples of each series, flattened.
  Vector theta_ini;
  Vector psi_ini;
  Eigen::Index m = 0;
  Eigen::Index p = 0;
  Eigen::Index T_ini = 0;
  Eigen::Index T_f = 2;

  Eigen::Index columns() const noexcept { return theta_past.cols(); }

  /// [Theta_p; Psi_p] and its right-hand side col(theta_ini, psi_ini).
  Matrix past() const;
  Vector past_rhs() const;
  /// Rows of all future steps but the last, and of the last step alone.
  Matrix theta_leading() const { return theta_future.topRows(m * (T_f - 1)); }
  Matrix theta_last() const { return theta_future.bottomRows(m); }
  Matrix psi_leading() const { return psi_future.topRows(p * (T_f - 1)); }
  Matrix psi_last() const { return psi_future.bottomRows(p); }
};

/// Throws LengthError unless T >= T_ini + T_f and T_ini >= 1, DimensionError
/// when the two series differ in length. T_f other than 2 is experimental.
HankelBlocks partition(const TimeSeries& theta, const TimeSeries& psi,
                       Eigen::Index T_ini, Eigen::Index T_f = 2);

/// Rank quantities behind the four verdicts.
struct RankDiagnostics {
  int past = 0;                 // r(P)
  int past_theta = 0;           // r([P; Theta_f])
  int past_psi = 0;             // r([P; Psi_f])
  int past_both = 0;            // r([P; Theta_f; Psi_f])
  int leading = 0;              // r([P; Theta_f1; Psi_f1])
  int leading_psi_last = 0;     // r([P; Theta_f1; Psi_f1; Psi_f2])
  int leading_theta_last = 0;   // r([P; Theta_f1; Psi_f1; Theta_f2])
  double past_residual = 0.0;   // | P g* - col(theta_ini, psi_ini) |
};

RankDiagnostics rank_diagnostics(const HankelBlocks& blocks,
                                 const ToleranceConfig& tol = {});

/// Every theta_f admits a solution and fixes psi_f uniquely.
bool test1(const HankelBlocks& blocks, const ToleranceConfig& tol = {});
/// Every psi_f admits a solution and fixes theta_f uniquely.
bool test2(const HankelBlocks& blocks, const ToleranceConfig& tol = {});
/// Some feasible one-step continuation leaves a psi_f(2) with no completing
/// theta_f(2).
bool test3(const HankelBlocks& blocks, const ToleranceConfig& tol = {});
/// Some feasible one-step continuation leaves a theta_f(2) with no completing
/// psi_f(2).
bool test4(const HankelBlocks& blocks, const ToleranceConfig& tol = {});

struct TestVerdicts {
  bool t1 = false;
  bool t2 = false;
  bool t3 = false;
  bool t4 = false;
  bool operator==(const TestVerdicts&) const = default;
};

TestVerdicts verdicts_from(const RankDiagnostics& r, Eigen::Index m, Eigen::Index p,
                           Eigen::Index T_f = 2);

/// Table lookup from the four verdicts; Inconclusive when no row matches.
Relation relation_from(const TestVerdicts& v);

struct BeCausOutcome {
  TestVerdicts tests;
  Relation relation = Relation::Inconclusive;
  RankDiagnostics ranks;
  ToleranceConfig tolerances;
  Eigen::Index T = 0;
  Eigen::Index T_ini = 0;
  Eigen::Index T_f = 2;
};

/// Runs the four tests on (theta, psi) with an initial window T_ini that must
/// exceed the caller's lag bound. Throws DataIntegrityError if the recorded
/// initial window is not in the column space of the past blocks.
BeCausOutcome classify(const TimeSeries& theta, const TimeSeries& psi,
                       Eigen::Index T_ini, const ToleranceConfig& tol = {},
                       Eigen::Index T_f = 2);

nlohmann::json to_json(const BeCausOutcome& outcome);

}  // namespace becaus
