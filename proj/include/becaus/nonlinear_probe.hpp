#pragma once

#include "becaus/l1qp.hpp"
#include "becaus/linalg.hpp"
#include "becaus/classifier.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace becaus {

/// x(t+1) = tanh(A x(t) + B theta(t)), psi(t) = C x(t).
struct NonlinearSystem {
  Matrix A;
  Matrix B;
  Matrix C;

  Eigen::Index order() const noexcept { return A.rows(); }
  void validate() const;
};

/// psi(0..T-1) from x(0) = x0. Throws LengthError if theta is shorter than T.
TimeSeries simulate_nonlinear(const NonlinearSystem& sys, const TimeSeries& theta,
                              const Vector& x0, Eigen::Index T);

/// Entries U(-1, 1), A rescaled to the given spectral radius.
NonlinearSystem random_tanh_network(Eigen::Index n, Eigen::Index m, Eigen::Index p,
                                    std::uint64_t seed, double spectral_radius = 0.9);

struct ProbeConfig {
  double r = 1000.0;
  double tracking_weight = 1.0;
  double energy_weight = 1.0;
  double l1_weight = 1.0;
  L1QpSettings solver;

  /// Throws DegenerateReferenceError for r = 0, InputError for negative
  /// weights or a nonpositive solver tolerance.
  void validate() const;
};

/// One fictitious control problem: drive `tracked` to r at the second future
/// step while penalizing the other variable's future energy.
struct ProbeSolve {
  Vector g;
  Vector tracked_future;  // col(step 1, step 2)
  Vector other_future;
  double step1_norm = 0.0;
  double step2_norm = 0.0;
  /// step2 / step1 (+inf when step 1 vanishes).
  double ratio = 0.0;
  double objective = 0.0;
  /// |P g - col(theta_ini, psi_ini)| / (1 + |rhs|).
  double constraint_residual = 0.0;
  int iterations = 0;
};

enum class ProbeInput { Theta, Psi };

struct ProbeResult {
  /// Tracks psi(2) = r 1 with theta_f energy penalized.
  ProbeSolve psi_problem;
  /// Tracks theta(2) = r 1 with psi_f energy penalized.
  ProbeSolve theta_problem;
  double ratio_psi = 0.0;
  double ratio_theta = 0.0;
  /// The variable whose own problem shows the larger step-2 / step-1 ratio.
  ProbeInput inferred_input = ProbeInput::Theta;
};

/// The l1-QP behind one probe problem: variable g, objective
/// w_t |tracked_last g - r 1|^2 + w_e |other g|^2 + w_1 |g|_1, constraint P g = rhs.
L1QpProblem probe_problem(const HankelBlocks& blocks, bool track_psi,
                          const ProbeConfig& config);

ProbeResult solve_probe(const TimeSeries& theta, const TimeSeries& psi,
                        Eigen::Index T_ini, const ProbeConfig& config = {});

std::string_view probe_input_label(ProbeInput v);
nlohmann::json to_json(const ProbeResult& r);

}  // namespace becaus
