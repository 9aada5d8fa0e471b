#include "becaus/l1qp.hpp"

#include "becaus/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace becaus {

namespace {

Vector soft_threshold(const Vector& v, double k) {
  return v.array().sign() * (v.array().abs() - k).max(0.0);
}

enum class SupportStep { Certified, Changed, Failed };

// Equality-constrained QP on the signed support of `pattern`:
// min 0.5 x^T Q x + (c + lambda s)^T x  s.t. E x = f, x_i = 0 off the support.
// Certified means the full KKT conditions hold. Otherwise one active-set move
// is applied to `pattern`: a column enters to restore feasibility, a blocking
// entry leaves along a descent ray, entries whose sign flips leave, or the
// worst off-support stationarity violation enters.
// A support too small to satisfy E x = f gains the off-support column best
// aligned with the constraint residual.
SupportStep enter_for_feasibility(const L1QpProblem& p, Vector& pattern, const Vector& residual) {
  Eigen::Index best = -1;
  double best_score = 0.0;
  for (Eigen::Index i = 0; i < pattern.size(); ++i) {
    const double col = p.E.col(i).norm();
    if (pattern(i) != 0.0 || col == 0.0) continue;
    const double score = std::abs(p.E.col(i).dot(residual)) / col;
    if (score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best < 0) return SupportStep::Failed;
  pattern(best) = p.E.col(best).dot(residual) > 0 ? 1.0 : -1.0;
  return SupportStep::Changed;
}

SupportStep support_step(const L1QpProblem& p, Vector& pattern, const ToleranceConfig& tol,
                         double kkt_tol, Vector& out) {
  const Eigen::Index n = p.c.size();
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pattern(i) != 0.0) support.push_back(i);
  }
  const Eigen::Index k = static_cast<Eigen::Index>(support.size());
  Vector xs = Vector::Zero(k);
  Vector sign(k);
  if (k > 0) {
    Matrix Qs(k, k), Es(p.E.rows(), k);
    Vector cs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index i = support[a];
      sign(a) = pattern(i) > 0 ? 1.0 : -1.0;
      cs(a) = p.c(i) + p.lambda * sign(a);
      Es.col(a) = p.E.col(i);
      for (Eigen::Index b = 0; b < k; ++b) Qs(a, b) = p.Q(i, support[b]);
    }
    const AffineSolutionSummary feas = analyze_affine_system(Es, p.f, tol);
    if (!feas.consistent) {
      return enter_for_feasibility(p, pattern, p.f - Es * feas.least_norm_solution);
    }
    xs = feas.least_norm_solution;
    const Matrix Z = null_space_basis(Es, tol);
    if (Z.cols() > 0) {
      const Matrix H = Z.transpose() * Qs * Z;
      const Vector rhs = -Z.transpose() * (Qs * xs + cs);
      const Vector y = H.completeOrthogonalDecomposition().solve(rhs);
      const Vector slack = rhs - H * y;
      if (slack.norm() > kkt_tol * (1.0 + rhs.norm())) {
        // The reduced objective decreases linearly along Z * slack; follow it
        // until the first support entry reaches zero and drop that entry.
        const Vector xa = xs + Z * y;
        const Vector dir = Z * slack;
        Eigen::Index block = -1;
        double step = std::numeric_limits<double>::infinity();
        for (Eigen::Index a = 0; a < k; ++a) {
          if (sign(a) * dir(a) < 0.0) {
            const double t = std::max(0.0, -xa(a) / dir(a));
            if (t < step) {
              step = t;
              block = a;
            }
          }
        }
        // Without a blocking entry the slack is rounding noise; the KKT check
        // below decides.
        if (block >= 0) {
          pattern(support[block]) = 0.0;
          return SupportStep::Changed;
        }
      }
      xs += Z * y;
    }
    bool flipped = false;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (xs(a) * sign(a) < 0.0) {
        pattern(support[a]) = 0.0;
        flipped = true;
      }
    }
    if (flipped) return SupportStep::Changed;
  } else if (p.f.norm() > 0.0) {
    return enter_for_feasibility(p, pattern, p.f);
  }
  Vector x = Vector::Zero(n);
  for (Eigen::Index a = 0; a < k; ++a) x(support[a]) = xs(a);

  // Stationarity: Q x + c + E^T nu + lambda s = 0 with s in the subdifferential of |x|_1.
  const Vector grad = p.Q * x + p.c;
  Vector target(k);
  Matrix EsT(k, p.E.rows());
  for (Eigen::Index a = 0; a < k; ++a) {
    target(a) = -(grad(support[a]) + p.lambda * (xs(a) != 0.0 ? sign(a) : 0.0));
    EsT.row(a) = p.E.col(support[a]).transpose();
  }
  Vector nu = Vector::Zero(p.E.rows());
  if (k > 0 && p.E.rows() > 0) nu = EsT.completeOrthogonalDecomposition().solve(target);
  const Vector stat = grad + p.E.transpose() * nu;
  const double scale = 1.0 + p.lambda + grad.cwiseAbs().maxCoeff();
  for (Eigen::Index a = 0; a < k; ++a) {
    const double resid = xs(a) != 0.0 ? std::abs(stat(support[a]) + p.lambda * sign(a))
                                      : std::max(0.0, std::abs(stat(support[a])) - p.lambda);
    if (resid > kkt_tol * scale) return SupportStep::Failed;
  }
  Eigen::Index worst = -1;
  double worst_excess = kkt_tol * scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double excess = std::abs(stat(i)) - p.lambda;
    if (pattern(i) == 0.0 && excess > worst_excess) {
      worst = i;
      worst_excess = excess;
    }
  }
  if (worst >= 0) {
    pattern(worst) = stat(worst) > 0 ? -1.0 : 1.0;
    return SupportStep::Changed;
  }
  out = std::move(x);
  return SupportStep::Certified;
}

bool polish_on_support(const L1QpProblem& p, const Vector& z, const ToleranceConfig& tol,
                       double kkt_tol, int max_moves, Vector& out) {
  Vector pattern = z;
  for (int move = 0; move <= max_moves; ++move) {
    switch (support_step(p, pattern, tol, kkt_tol, out)) {
      case SupportStep::Certified: return true;
      case SupportStep::Failed: return false;
      case SupportStep::Changed: break;
    }
  }
  return false;
}

enum class IpmStatus { Converged, Stalled, Failed };

// Primal-dual interior point (Mehrotra predictor-corrector) on the split
// x = v+ - v-, v >= 0: min 0.5 v^T G v + d^T v  s.t. A v = b. Stalled
// returns the last iterate, which only a KKT-certified polish may accept.
IpmStatus interior_point(const L1QpProblem& p, const ToleranceConfig& tol, int max_iterations,
                    double tolerance, Vector& out, int& iterations) {
  const Eigen::Index n = p.c.size();
  const Eigen::Index nv = 2 * n;
  // Consistent E x = f is equivalent to its projection on the row space of E.
  const Eigen::Index r = p.E.rows() > 0 ? numerical_rank(p.E, tol) : 0;
  Matrix Er(0, n);
  Vector b(0);
  if (r > 0) {
    Eigen::BDCSVD<Matrix> svd(p.E, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Er = svd.singularValues().head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
    b = svd.matrixU().leftCols(r).transpose() * p.f;
  }

  Matrix A(r, nv);
  A << Er, -Er;
  Matrix G(nv, nv);
  G << p.Q, -p.Q, -p.Q, p.Q;
  Vector d(nv);
  d << p.c.array() + p.lambda, -p.c.array() + p.lambda;

  Vector v = Vector::Ones(nv), s = Vector::Ones(nv), y = Vector::Zero(r);
  const double scale_p = 1.0 + b.norm();
  const double scale_d = 1.0 + d.norm();
  // Newton systems are reduced to x-space: with Sp, Sq the barrier blocks of
  // v+ and v-, dx solves (Q + D) dx = ... for D = Sp Sq / (Sp + Sq).
  Eigen::LLT<Matrix> hf, mf;
  Matrix HinvEt;
  Vector Sp, Sq;
  auto factor = [&]() {
    const Vector sigma = (s.array() / v.array()).matrix();
    Sp = sigma.head(n);
    Sq = sigma.tail(n);
    Matrix H = p.Q;
    H.diagonal() += (Sp.array() * Sq.array() / (Sp.array() + Sq.array())).matrix();
    hf.compute(H);
    if (hf.info() != Eigen::Success) return false;
    if (r == 0) return true;
    HinvEt = hf.solve(Er.transpose());
    mf.compute(Er * HinvEt);
    return mf.info() == Eigen::Success;
  };
  // Newton direction for the complementarity target v o s = rc.
  auto direction = [&](const Vector& rd, const Vector& rp, const Vector& rc, Vector& dv,
                       Vector& dy, Vector& ds) {
    const Vector w = -rd - (rc.array() / v.array()).matrix();
    const Vector wp = w.head(n), wq = w.tail(n);
    const Vector h0 = hf.solve(((Sq.array() * wp.array() - Sp.array() * wq.array()) /
                                (Sp.array() + Sq.array())).matrix());
    dy = r > 0 ? Vector(mf.solve(-rp - Er * h0)) : Vector();
    const Vector dx = r > 0 ? Vector(h0 + HinvEt * dy) : h0;
    const Vector Ety = r > 0 ? Vector(Er.transpose() * dy) : Vector::Zero(n);
    const Vector Qdx = p.Q * dx;
    // Divide by the larger barrier term and recover the other half from dx,
    // so that dv+ - dv- = dx holds exactly.
    dv.resize(nv);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (Sp(i) >= Sq(i)) {
        dv(i) = (wp(i) + Ety(i) - Qdx(i)) / Sp(i);
        dv(n + i) = dv(i) - dx(i);
      } else {
        dv(n + i) = (wq(i) - Ety(i) + Qdx(i)) / Sq(i);
        dv(i) = dv(n + i) + dx(i);
      }
    }
    ds = ((-rc.array() - s.array() * dv.array()) / v.array()).matrix();
  };
  auto max_step = [](const Vector& z, const Vector& dz) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (dz(i) < 0.0) a = std::min(a, -z(i) / dz(i));
    }
    return a;
  };

  for (iterations = 1; iterations <= max_iterations; ++iterations) {
    const Vector rd = G * v + d - A.transpose() * y - s;
    const Vector rp = A * v - b;
    const double mu = v.dot(s) / static_cast<double>(nv);
    const double objective = 0.5 * v.dot(G * v) + d.dot(v);
    if (rp.norm() <= tolerance * scale_p && rd.norm() <= tolerance * scale_d &&
        mu * static_cast<double>(nv) <= tolerance * (1.0 + std::abs(objective))) {
      out = v.head(n) - v.tail(n);
      return IpmStatus::Converged;
    }
    if (!factor() || !std::isfinite(mu)) {
      // Definiteness is lost only near the solution; accept an iterate that
      // meets the square root of the requested accuracy.
      const double loose = std::sqrt(tolerance);
      out = v.head(n) - v.tail(n);
      const bool close = rp.norm() <= loose * scale_p && rd.norm() <= loose * scale_d &&
                         mu * static_cast<double>(nv) <= loose * (1.0 + std::abs(objective));
      return close ? IpmStatus::Converged : IpmStatus::Stalled;
    }
    Vector dv, dy, ds;
    direction(rd, rp, (v.array() * s.array()).matrix(), dv, dy, ds);
    const double a_aff = std::min(max_step(v, dv), max_step(s, ds));
    const double mu_aff = (v + a_aff * dv).dot(s + a_aff * ds) / static_cast<double>(nv);
    const double sigma = std::pow(mu_aff / mu, 3);
    const Vector rc = (v.array() * s.array() + dv.array() * ds.array() - sigma * mu).matrix();
    direction(rd, rp, rc, dv, dy, ds);
    const double a = 0.99 * std::min(max_step(v, dv), max_step(s, ds));
    v += a * dv;
    y += a * dy;
    s += a * ds;
  }
  out = v.head(n) - v.tail(n);
  return IpmStatus::Stalled;
}

}  // namespace

double L1QpProblem::objective(const Vector& x) const {
  return 0.5 * x.dot(Q * x) + c.dot(x) + lambda * x.lpNorm<1>();
}

void L1QpProblem::validate() const {
  const Eigen::Index n = c.size();
  if (Q.rows() != n || Q.cols() != n || E.cols() != n || f.size() != E.rows()) {
    throw DimensionError("l1-QP dimensions are inconsistent");
  }
  if (!(lambda >= 0.0)) throw InputError("l1 weight must be nonnegative");
}

L1QpSolution solve_l1qp(const L1QpProblem& p, const L1QpSettings& s) {
  p.validate();
  const Eigen::Index n = p.c.size();

  const AffineSolutionSummary feas = analyze_affine_system(p.E, p.f, s.tol);
  if (!feas.consistent) {
    throw DataIntegrityError("equality constraints of the l1-QP are inconsistent");
  }
  const Vector x0 = feas.least_norm_solution;
  const Matrix Z = null_space_basis(p.E, s.tol);
  const Eigen::Index d = Z.cols();

  // x = x0 + Z y; the x-update minimizes over y in closed form.
  const Matrix H = Z.transpose() * p.Q * Z;
  const Vector h = Z.transpose() * (p.Q * x0 + p.c);
  double rho = s.rho;
  Eigen::LLT<Matrix> llt;
  auto factor = [&] { llt.compute(H + rho * Matrix::Identity(d, d)); };
  factor();

  Vector x = x0;
  Vector z = soft_threshold(x, p.lambda / rho);
  Vector u = Vector::Zero(n);
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  L1QpSolution sol;
  auto finish = [&](const Vector& point, bool polished) {
    sol.x = point;
    sol.objective = p.objective(point);
    sol.polished = polished;
    sol.constraint_residual = (p.E * point - p.f).norm() / (1.0 + p.f.norm());
    return sol;
  };
  Vector polished;
  for (int it = 1; it <= s.max_iterations; ++it) {
    if (d > 0) {
      const Vector y = llt.solve(rho * Z.transpose() * (z - u - x0) - h);
      x = x0 + Z * y;
    }
    const Vector z_prev = z;
    const Vector x_relaxed = s.relaxation * x + (1.0 - s.relaxation) * z_prev;
    z = soft_threshold(x_relaxed + u, p.lambda / rho);
    u += x_relaxed - z;

    // Dual residual lives in the null space of E.
    const double r_pri = (x - z).norm();
    const double r_dual = rho * (Z.transpose() * (z - z_prev)).norm();
    const double eps_pri = s.abs_tol * sqrt_n + s.rel_tol * std::max(x.norm(), z.norm());
    const double eps_dual = s.abs_tol * sqrt_n + s.rel_tol * rho * (Z.transpose() * u).norm();
    sol.iterations = it;
    sol.primal_residual = r_pri;
    sol.dual_residual = r_dual;
    if (!std::isfinite(r_pri) || !std::isfinite(r_dual)) break;
    const bool converged = r_pri <= eps_pri && r_dual <= eps_dual;
    const bool try_polish = s.polish && (converged || it % s.polish_interval == 0);
    if (try_polish && polish_on_support(p, z, s.tol, s.kkt_tol, s.max_support_moves, polished)) {
      return finish(polished, true);
    }
    if (converged) return finish(x, false);
    if (s.adaptive_rho && it % 50 == 0) {
      // Balance the residuals relative to their own tolerances.
      const double balance = std::sqrt((r_pri / eps_pri) / std::max(r_dual / eps_dual, 1e-300));
      if (balance > 5.0 || balance < 0.2) {
        const double scale = std::clamp(balance, 1e-3, 1e3);
        rho *= scale;
        u /= scale;
        factor();
      }
    }
  }
  // Stalled splitting: fall back to an interior point solve, then polish its
  // numerical support.
  Vector ipm;
  int ipm_iterations = 0;
  const IpmStatus status =
      s.interior_point_fallback
          ? interior_point(p, s.tol, s.max_ipm_iterations, s.ipm_tol, ipm, ipm_iterations)
          : IpmStatus::Failed;
  if (status != IpmStatus::Failed) {
    sol.iterations += ipm_iterations;
    sol.interior_point = true;
    const double cut = 1e-9 * (1.0 + ipm.cwiseAbs().maxCoeff());
    const Vector pattern = (ipm.array().abs() > cut).select(ipm, 0.0);
    if (polish_on_support(p, pattern, s.tol, s.kkt_tol, s.max_support_moves, polished)) {
      return finish(polished, true);
    }
    if (status == IpmStatus::Converged) return finish(ipm, false);
  }
  throw SolverError("l1-QP did not converge in " + std::to_string(sol.iterations) +
                        " iterations",
                    sol.iterations, sol.primal_residual, sol.dual_residual);
}

}  // namespace becaus
