#include "becaus/nonlinear_probe.hpp"

#include "becaus/error.hpp"
#include "becaus/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace becaus {

void NonlinearSystem::validate() const {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n) {
    throw DimensionError("nonlinear system matrices have inconsistent shapes");
  }
}

TimeSeries simulate_nonlinear(const NonlinearSystem& sys, const TimeSeries& theta,
                              const Vector& x0, Eigen::Index T) {
  sys.validate();
  if (theta.length() < T) throw LengthError("input is shorter than the horizon");
  if (theta.dim() != sys.B.cols() || x0.size() != sys.order()) {
    throw DimensionError("input or initial state does not match the system");
  }
  TimeSeries psi(sys.C.rows(), T);
  Vector x = x0;
  for (Eigen::Index t = 0; t < T; ++t) {
    psi.sample(t) = sys.C * x;
    x = (sys.A * x + sys.B * theta.sample(t)).array().tanh().matrix();
  }
  return psi;
}

NonlinearSystem random_tanh_network(Eigen::Index n, Eigen::Index m, Eigen::Index p,
                                    std::uint64_t seed, double spectral_radius) {
  if (n < 1 || m < 1 || p < 1) throw DimensionError("tanh network needs n, m, p >= 1");
  Rng rng(seed);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = rng.uniform(-1.0, 1.0);
    return M;
  };
  NonlinearSystem sys;
  sys.A = draw(n, n);
  const double rho = Eigen::EigenSolver<Matrix>(sys.A, false).eigenvalues().cwiseAbs().maxCoeff();
  if (rho > 0.0) sys.A *= spectral_radius / rho;
  sys.B = draw(n, m);
  sys.C = draw(p, n);
  return sys;
}

void ProbeConfig::validate() const {
  if (r == 0.0) {
    throw DegenerateReferenceError("reference r = 0 makes both probe ratios degenerate");
  }
  if (!std::isfinite(r)) throw InputError("reference r must be finite");
  if (tracking_weight < 0.0 || energy_weight < 0.0 || l1_weight < 0.0) {
    throw InputError("probe weights must be nonnegative");
  }
  if (!(solver.abs_tol > 0.0) || !(solver.rel_tol > 0.0) || solver.max_iterations < 1) {
    throw InputError("probe solver tolerance and iteration limit must be positive");
  }
}

L1QpProblem probe_problem(const HankelBlocks& b, bool track_psi, const ProbeConfig& cfg) {
  const Matrix& tracked_future = track_psi ? b.psi_future : b.theta_future;
  const Matrix& other_future = track_psi ? b.theta_future : b.psi_future;
  const Eigen::Index dim = track_psi ? b.p : b.m;
  const Matrix last = tracked_future.bottomRows(dim);
  const Vector ref = Vector::Constant(dim, cfg.r);

  L1QpProblem p;
  p.Q = 2.0 * (cfg.tracking_weight * last.transpose() * last +
               cfg.energy_weight * other_future.transpose() * other_future);
  p.c = -2.0 * cfg.tracking_weight * last.transpose() * ref;
  p.lambda = cfg.l1_weight;
  p.E = b.past();
  p.f = b.past_rhs();
  return p;
}

namespace {

ProbeSolve solve_one(const HankelBlocks& b, bool track_psi, const ProbeConfig& cfg) {
  const L1QpProblem problem = probe_problem(b, track_psi, cfg);
  const L1QpSolution sol = solve_l1qp(problem, cfg.solver);
  const Eigen::Index dim = track_psi ? b.p : b.m;
  const double r2 = cfg.tracking_weight * dim * cfg.r * cfg.r;

  ProbeSolve out;
  out.g = sol.x;
  out.tracked_future = (track_psi ? b.psi_future : b.theta_future) * sol.x;
  out.other_future = (track_psi ? b.theta_future : b.psi_future) * sol.x;
  out.step1_norm = out.tracked_future.head(dim).norm();
  out.step2_norm = out.tracked_future.tail(dim).norm();
  out.ratio = out.step1_norm > 0.0 ? out.step2_norm / out.step1_norm
                                   : std::numeric_limits<double>::infinity();
  // The l1-QP drops the constant |r 1|^2 of the tracking term.
  out.objective = sol.objective + r2;
  out.constraint_residual = sol.constraint_residual;
  out.iterations = sol.iterations;
  return out;
}

nlohmann::json ratio_json(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json to_json(const ProbeSolve& s) {
  return {{"ratio", ratio_json(s.ratio)},
          {"step1_norm", s.step1_norm},
          {"step2_norm", s.step2_norm},
          {"objective", s.objective},
          {"constraint_residual", s.constraint_residual},
          {"iterations", s.iterations}};
}

}  // namespace

ProbeResult solve_probe(const TimeSeries& theta, const TimeSeries& psi, Eigen::Index T_ini,
                        const ProbeConfig& config) {
  config.validate();
  const HankelBlocks b = partition(theta, psi, T_ini);
  ProbeResult res;
  res.psi_problem = solve_one(b, true, config);
  res.theta_problem = solve_one(b, false, config);
  res.ratio_psi = res.psi_problem.ratio;
  res.ratio_theta = res.theta_problem.ratio;
  res.inferred_input = res.ratio_theta >= res.ratio_psi ? ProbeInput::Theta : ProbeInput::Psi;
  return res;
}

std::string_view probe_input_label(ProbeInput v) {
  return v == ProbeInput::Theta ? "theta" : "psi";
}

nlohmann::json to_json(const ProbeResult& r) {
  return {{"ratio_psi", ratio_json(r.ratio_psi)},
          {"ratio_theta", ratio_json(r.ratio_theta)},
          {"inferred_input", std::string(probe_input_label(r.inferred_input))},
          {"psi_problem", to_json(r.psi_problem)},
          {"theta_problem", to_json(r.theta_problem)}};
}

}  // namespace becaus
