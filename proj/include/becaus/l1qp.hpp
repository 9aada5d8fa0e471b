#pragma once

#include "becaus/linalg.hpp"

namespace becaus {

/// minimize 0.5 x^T Q x + c^T x + lambda |x|_1  subject to  E x = f,
/// with Q symmetric positive semidefinite and E x = f consistent.
struct L1QpProblem {
  Matrix Q;
  Vector c;
  double lambda = 1.0;
  Matrix E;
  Vector f;

  double objective(const Vector& x) const;
  /// Throws DimensionError on inconsistent shapes, InputError on lambda < 0.
  void validate() const;
};

struct L1QpSettings {
  double abs_tol = 1e-8;
  double rel_tol = 1e-7;
  int max_iterations = 50000;
  /// Initial penalty; rescaled by residual balancing.
  double rho = 1.0;
  bool adaptive_rho = true;
  /// Over-relaxation factor in (0, 2).
  double relaxation = 1.6;
  /// Re-solve on the detected support; the result is kept only when it
  /// passes the KKT check, which then terminates the iteration.
  bool polish = true;
  int polish_interval = 100;
  /// Active-set corrections allowed per polish attempt.
  int max_support_moves = 200;
  /// Interior point solve on the split x = v+ - v- when the splitting stalls.
  bool interior_point_fallback = true;
  int max_ipm_iterations = 200;
  double ipm_tol = 1e-10;
  /// Relative stationarity tolerance of the KKT check.
  double kkt_tol = 1e-9;
  ToleranceConfig tol;
};

struct L1QpSolution {
  Vector x;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// |E x - f| / (1 + |f|).
  double constraint_residual = 0.0;
  /// True when x is a KKT-certified support solution.
  bool polished = false;
  /// True when the interior point fallback produced x.
  bool interior_point = false;
};

/// ADMM on the split x = z, with x restricted to the affine set through a
/// null-space parametrization, with an interior point fallback when the
/// splitting stalls. Throws SolverError (with the final ADMM iterate
/// diagnostics) when both fail, DataIntegrityError when E x = f is
/// inconsistent.
L1QpSolution solve_l1qp(const L1QpProblem& problem, const L1QpSettings& settings = {});

}  // namespace becaus
