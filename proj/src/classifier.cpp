#include "becaus/classifier.hpp"

#include "becaus/error.hpp"

#include <string>

namespace becaus {

Matrix HankelBlocks::past() const { return vstack({&theta_past, &psi_past}); }

Vector HankelBlocks::past_rhs() const {
  Vector rhs(theta_ini.size() + psi_ini.size());
  rhs << theta_ini, psi_ini;
  return rhs;
}

HankelBlocks partition(const TimeSeries& theta, const TimeSeries& psi,
                       Eigen::Index T_ini, Eigen::Index T_f) {
  if (theta.length() != psi.length()) {
    throw DimensionError("theta has " + std::to_string(theta.length()) +
                         " samples but psi has " + std::to_string(psi.length()));
  }
  if (theta.dim() < 1 || psi.dim() < 1) {
    throw DimensionError("theta and psi must both have at least one component");
  }
  if (T_ini < 1) throw LengthError("T_ini must be at least 1");
  if (T_f < 2) throw LengthError("T_f must be at least 2");
  const Eigen::Index T = theta.length();
  if (T < T_ini + T_f) {
    throw LengthError("series of length " + std::to_string(T) +
                      " is too short for T_ini = " + std::to_string(T_ini) +
                      " and T_f = " + std::to_string(T_f));
  }

  const Eigen::Index depth = T_ini + T_f;
  const Matrix h_theta = build_hankel(theta, depth);
  const Matrix h_psi = build_hankel(psi, depth);

  HankelBlocks b;
  b.m = theta.dim();
  b.p = psi.dim();
  b.T_ini = T_ini;
  b.T_f = T_f;
  b.theta_past = h_theta.topRows(b.m * T_ini);
  b.theta_future = h_theta.bottomRows(b.m * T_f);
  b.psi_past = h_psi.topRows(b.p * T_ini);
  b.psi_future = h_psi.bottomRows(b.p * T_f);
  b.theta_ini = theta.flatten(0, T_ini);
  b.psi_ini = psi.flatten(0, T_ini);
  return b;
}

RankDiagnostics rank_diagnostics(const HankelBlocks& b, const ToleranceConfig& tol) {
  const Matrix P = b.past();
  const Matrix theta_lead = b.theta_leading();
  const Matrix psi_lead = b.psi_leading();
  const Matrix theta_last = b.theta_last();
  const Matrix psi_last = b.psi_last();

  RankDiagnostics r;
  const AffineSolutionSummary past = analyze_affine_system(P, b.past_rhs(), tol);
  r.past = past.coefficient_rank;
  r.past_residual = past.residual;
  if (!past.consistent) {
    throw DataIntegrityError(
        "initial window is not in the column space of the past Hankel blocks "
        "(residual " + std::to_string(past.residual) + ")");
  }
  r.past_theta = numerical_rank(vstack({&P, &b.theta_future}), tol);
  r.past_psi = numerical_rank(vstack({&P, &b.psi_future}), tol);
  r.past_both = numerical_rank(vstack({&P, &b.theta_future, &b.psi_future}), tol);
  r.leading = numerical_rank(vstack({&P, &theta_lead, &psi_lead}), tol);
  r.leading_psi_last = numerical_rank(vstack({&P, &theta_lead, &psi_lead, &psi_last}), tol);
  r.leading_theta_last =
      numerical_rank(vstack({&P, &theta_lead, &psi_lead, &theta_last}), tol);
  return r;
}

TestVerdicts verdicts_from(const RankDiagnostics& r, Eigen::Index m, Eigen::Index p,
                           Eigen::Index T_f) {
  TestVerdicts v;
  // theta_f spans all of R^(T_f m) over the feasible set, and psi_f adds no
  // further freedom.
  v.t1 = r.past_theta == r.past + static_cast<int>(T_f * m) && r.past_both == r.past_theta;
  v.t2 = r.past_psi == r.past + static_cast<int>(T_f * p) && r.past_both == r.past_psi;
  // The reachable last step is a proper affine subspace.
  v.t3 = r.leading_psi_last < r.leading + static_cast<int>(p);
  v.t4 = r.leading_theta_last < r.leading + static_cast<int>(m);
  return v;
}

Relation relation_from(const TestVerdicts& v) {
  const int code = (v.t1 ? 8 : 0) | (v.t2 ? 4 : 0) | (v.t3 ? 2 : 0) | (v.t4 ? 1 : 0);
  switch (code) {
    case 0b0000: return Relation::Independence;
    case 0b1010: return Relation::ThetaCausesPsi;
    case 0b0101: return Relation::PsiCausesTheta;
    case 0b0010: return Relation::ThetaPartiallyCausesPsi;
    case 0b0001: return Relation::PsiPartiallyCausesTheta;
    case 0b0011: return Relation::LatentCommonCause;
    default: return Relation::Inconclusive;
  }
}

bool test1(const HankelBlocks& blocks, const ToleranceConfig& tol) {
  return verdicts_from(rank_diagnostics(blocks, tol), blocks.m, blocks.p, blocks.T_f).t1;
}

bool test2(const HankelBlocks& blocks, const ToleranceConfig& tol) {
  return verdicts_from(rank_diagnostics(blocks, tol), blocks.m, blocks.p, blocks.T_f).t2;
}

bool test3(const HankelBlocks& blocks, const ToleranceConfig& tol) {
  return verdicts_from(rank_diagnostics(blocks, tol), blocks.m, blocks.p, blocks.T_f).t3;
}

bool test4(const HankelBlocks& blocks, const ToleranceConfig& tol) {
  return verdicts_from(rank_diagnostics(blocks, tol), blocks.m, blocks.p, blocks.T_f).t4;
}

BeCausOutcome classify(const TimeSeries& theta, const TimeSeries& psi,
                       Eigen::Index T_ini, const ToleranceConfig& tol,
                       Eigen::Index T_f) {
  tol.validate();
  const HankelBlocks blocks = partition(theta, psi, T_ini, T_f);
  BeCausOutcome out;
  out.ranks = rank_diagnostics(blocks, tol);
  out.tests = verdicts_from(out.ranks, blocks.m, blocks.p, T_f);
  out.relation = relation_from(out.tests);
  out.tolerances = tol;
  out.T = theta.length();
  out.T_ini = T_ini;
  out.T_f = T_f;
  return out;
}

nlohmann::json to_json(const BeCausOutcome& o) {
  const RankDiagnostics& r = o.ranks;
  return {
      {"t1", o.tests.t1},
      {"t2", o.tests.t2},
      {"t3", o.tests.t3},
      {"t4", o.tests.t4},
      {"relation", std::string(relation_label(o.relation))},
      {"ranks",
       {{"past", r.past},
        {"past_theta", r.past_theta},
        {"past_psi", r.past_psi},
        {"past_both", r.past_both},
        {"leading", r.leading},
        {"leading_psi_last", r.leading_psi_last},
        {"leading_theta_last", r.leading_theta_last},
        {"past_residual", r.past_residual}}},
      {"tolerances",
       {{"rank_rtol", o.tolerances.rank_rtol},
        {"feasibility_rtol", o.tolerances.feasibility_rtol}}},
      {"T", o.T},
      {"T_ini", o.T_ini},
      {"T_f", o.T_f},
  };
}

}  // namespace becaus
