#include "becaus/lti.hpp"

#include "becaus/error.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace becaus {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

// rows x cols matrix of rank at most `rank`.
Matrix low_rank_matrix(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank,
                       bool zero_rows, Rng& rng) {
  if (rank <= 0) return Matrix::Zero(rows, cols);
  if (zero_rows) {
    Matrix m = Matrix::Zero(rows, cols);
    m.topRows(rank) = uniform_matrix(rank, cols, rng);
    return m;
  }
  const Matrix left = uniform_matrix(rows, rank, rng);
  const Matrix right = uniform_matrix(rank, cols, rng);
  return left * right;
}

bool has_full_row_rank(const Matrix& m, const ToleranceConfig& tol) {
  return numerical_rank(m, tol) == m.rows();
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::EigenSolver<Matrix>(a, false).eigenvalues().cwiseAbs().maxCoeff();
}

double normalized_sigma_min(const Matrix& m, Eigen::Index n) {
  if (n == 0) return 1.0;
  const Vector s = Eigen::BDCSVD<Matrix>(m).singularValues();
  if (s.size() < n || s(0) <= 0.0) return 0.0;
  return s(n - 1) / s(0);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostringstream& os, const char* name, const Matrix& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ' ';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

}  // namespace

void LtiSystem::validate() const {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw DimensionError("A must be square");
  if (B.rows() != n) throw DimensionError("B must have order rows");
  if (C.cols() != n) throw DimensionError("C must have order columns");
  if (D.rows() != C.rows() || D.cols() != B.cols()) {
    throw DimensionError("D must be outputs x inputs");
  }
  if (input_split < 0 || input_split > B.cols()) {
    throw DimensionError("input split out of range");
  }
  if (output_split < 0 || output_split > C.rows()) {
    throw DimensionError("output split out of range");
  }
}

LtiSystem make_system(Matrix A, Matrix B, Matrix C, Matrix D,
                      Eigen::Index input_split, Eigen::Index output_split) {
  LtiSystem sys{std::move(A), std::move(B), std::move(C), std::move(D), 0, 0};
  sys.input_split = input_split < 0 ? sys.B.cols() : input_split;
  sys.output_split = output_split < 0 ? sys.C.rows() : output_split;
  sys.validate();
  return sys;
}

Simulation simulate(const LtiSystem& sys, const TimeSeries& u, const Vector& x0,
                    Eigen::Index T) {
  sys.validate();
  if (u.dim() != sys.input_dim() && !(sys.input_dim() == 0 && u.empty())) {
    throw DimensionError("input series dimension does not match B");
  }
  if (u.length() < T && sys.input_dim() > 0) {
    throw LengthError("input series shorter than simulation horizon");
  }
  if (x0.size() != sys.order()) throw DimensionError("x0 has wrong dimension");

  Simulation out{TimeSeries(sys.output_dim(), T),
                 StateTrajectory{Matrix(sys.order(), T + 1)}};
  out.x.states.col(0) = x0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto x = out.x.states.col(t);
    if (sys.input_dim() > 0) {
      out.y.sample(t) = sys.C * x + sys.D * u.sample(t);
      out.x.states.col(t + 1) = sys.A * x + sys.B * u.sample(t);
    } else {
      out.y.sample(t) = sys.C * x;
      out.x.states.col(t + 1) = sys.A * x;
    }
  }
  return out;
}

Matrix observability_matrix(const LtiSystem& sys, Eigen::Index tau) {
  if (tau < 1) throw InputError("observability horizon must be at least 1");
  const Eigen::Index p = sys.output_dim();
  Matrix o(p * tau, sys.order());
  Matrix block = sys.C;
  for (Eigen::Index i = 0; i < tau; ++i) {
    o.middleRows(i * p, p) = block;
    block = block * sys.A;
  }
  return o;
}

Matrix controllability_matrix(const LtiSystem& sys, Eigen::Index tau) {
  if (tau < 1) throw InputError("controllability horizon must be at least 1");
  const Eigen::Index k = sys.input_dim();
  Matrix c(sys.order(), k * tau);
  Matrix block = sys.B;
  for (Eigen::Index i = 0; i < tau; ++i) {
    c.middleCols(i * k, k) = block;
    block = sys.A * block;
  }
  return c;
}

Matrix toeplitz_matrix(const LtiSystem& sys, Eigen::Index tau) {
  if (tau < 1) throw InputError("Toeplitz horizon must be at least 1");
  const Eigen::Index p = sys.output_dim();
  const Eigen::Index k = sys.input_dim();
  Matrix t = Matrix::Zero(p * tau, k * tau);
  // markov[d] = C A^(d-1) B for d >= 1
  std::vector<Matrix> markov(static_cast<std::size_t>(tau));
  Matrix cak = sys.C;
  for (Eigen::Index d = 1; d < tau; ++d) {
    markov[static_cast<std::size_t>(d)] = cak * sys.B;
    cak = cak * sys.A;
  }
  for (Eigen::Index i = 0; i < tau; ++i) {
    t.block(i * p, i * k, p, k) = sys.D;
    for (Eigen::Index j = 0; j < i; ++j) {
      t.block(i * p, j * k, p, k) = markov[static_cast<std::size_t>(i - j)];
    }
  }
  return t;
}

bool is_observable(const LtiSystem& sys, const ToleranceConfig& tol) {
  const Eigen::Index n = sys.order();
  if (n == 0) return true;
  return numerical_rank(observability_matrix(sys, n), tol) == n;
}

bool is_controllable(const LtiSystem& sys, const ToleranceConfig& tol) {
  const Eigen::Index n = sys.order();
  if (n == 0) return true;
  return numerical_rank(controllability_matrix(sys, n), tol) == n;
}

Eigen::Index compute_lag(const LtiSystem& sys, const ToleranceConfig& tol) {
  const Eigen::Index n = sys.order();
  if (n == 0) return 1;
  for (Eigen::Index tau = 1; tau <= n; ++tau) {
    if (numerical_rank(observability_matrix(sys, tau), tol) == n) return tau;
  }
  throw UnobservableSystemError("(C, A) is not observable: rank of O_n below " +
                                std::to_string(n));
}

bool DiscoverabilityReport::holds_for(Structure s) const {
  switch (s) {
    case Structure::Independence: return true;
    case Structure::FullCausality: return structure2;
    case Structure::PartialCausality: return structure3;
    case Structure::LatentCommonCause: return structure4;
  }
  return false;
}

DiscoverabilityReport check_discoverable(const LtiSystem& sys,
                                         const ToleranceConfig& tol) {
  sys.validate();
  const Matrix cd = hcat(sys.C, sys.D);
  const double scale =
      std::max(1.0, cd.size() == 0 ? 0.0 : Eigen::BDCSVD<Matrix>(cd).singularValues()(0));
  auto nonzero = [&](const Matrix& m) {
    return m.size() > 0 && m.cwiseAbs().maxCoeff() > tol.rank_rtol * scale;
  };

  DiscoverabilityReport r;
  r.d11_nonzero = nonzero(sys.D11());
  r.d22_nonzero = nonzero(sys.D22());
  const Eigen::Index p2 = sys.output_dim() - sys.output_split;
  const Matrix block1 =
      sys.C1().rows() == 0 ? Matrix() : hcat(sys.C1(), sys.D.topRows(sys.output_split));
  const Matrix block2 = sys.C2().rows() == 0 ? Matrix() : hcat(sys.C2(), sys.D.bottomRows(p2));
  r.block1_rank_deficient = !has_full_row_rank(block1, tol);
  r.block2_rank_deficient = !has_full_row_rank(block2, tol);
  r.unified = r.d11_nonzero && r.d22_nonzero && r.block1_rank_deficient &&
              r.block2_rank_deficient;

  r.structure2 = !has_full_row_rank(sys.D, tol);

  const Matrix d_v = sys.D.rightCols(sys.input_dim() - sys.input_split);
  r.structure3 = !has_full_row_rank(cd, tol) && nonzero(d_v);

  const Matrix d_theta = sys.D.topRows(sys.output_split);
  const Matrix d_psi = sys.D.bottomRows(sys.output_dim() - sys.output_split);
  r.structure4 = r.block1_rank_deficient && r.block2_rank_deficient &&
                 nonzero(d_theta) && nonzero(d_psi);
  return r;
}

LtiSystem draw_system(const SystemStructure& st, const CausalScenario& scenario,
                      Rng& rng, const GeneratorOptions& opts) {
  const Eigen::Index n = st.order;
  const Eigen::Index k = st.input_dim;
  const Eigen::Index p = st.output_dim;
  if (n < 0 || k < 1 || p < 1) {
    throw DimensionError("system needs at least one input and one output");
  }

  Matrix A = uniform_matrix(n, n, rng);
  const double rho = spectral_radius(A);
  if (rho > opts.spectral_radius_cap) A *= opts.spectral_radius_cap / rho;
  Matrix B = uniform_matrix(n, k, rng);
  Matrix C;
  Matrix D;
  Eigen::Index input_split = k;
  Eigen::Index output_split = p;
  const bool full = opts.full_row_rank_feedthrough;

  switch (scenario.relation) {
    case Relation::Independence: {
      input_split = st.input_split >= 0 ? st.input_split : k / 2;
      if (input_split < 1 || input_split >= k) {
        throw DimensionError("Structure I needs two nonempty input blocks");
      }
      C = uniform_matrix(p, n, rng);
      D = uniform_matrix(p, k, rng);
      break;
    }
    case Relation::ThetaCausesPsi:
    case Relation::PsiCausesTheta: {
      C = uniform_matrix(p, n, rng);
      if (full) {
        D = uniform_matrix(p, k, rng);
      } else {
        const Eigen::Index max_rank = std::min(p - 1, k);
        D = low_rank_matrix(p, k, rng.uniform_int(0, static_cast<int>(max_rank)),
                            false, rng);
      }
      break;
    }
    case Relation::ThetaPartiallyCausesPsi:
    case Relation::PsiPartiallyCausesTheta: {
      input_split = st.input_split >= 0 ? st.input_split : std::max<Eigen::Index>(1, k - 1);
      if (input_split < 1 || input_split >= k) {
        throw DimensionError("Structure III needs an observed and a latent input block");
      }
      Matrix cd;
      if (full || p < 2) {
        cd = uniform_matrix(p, n + k, rng);
      } else {
        const int rank = rng.uniform_int(1, static_cast<int>(p - 1));
        cd = low_rank_matrix(p, n + k, rank, opts.zero_row_padding, rng);
      }
      C = cd.leftCols(n);
      D = cd.rightCols(k);
      break;
    }
    case Relation::LatentCommonCause: {
      output_split = st.output_split >= 0 ? st.output_split : p / 2;
      if (output_split < 1 || output_split >= p) {
        throw DimensionError("Structure IV needs two nonempty output blocks");
      }
      auto block = [&](Eigen::Index rows) {
        if (full || rows < 2) return Matrix(uniform_matrix(rows, n + k, rng));
        const int rank = rng.uniform_int(1, static_cast<int>(rows - 1));
        return low_rank_matrix(rows, n + k, rank, opts.zero_row_padding, rng);
      };
      Matrix cd(p, n + k);
      cd.topRows(output_split) = block(output_split);
      cd.bottomRows(p - output_split) = block(p - output_split);
      C = cd.leftCols(n);
      D = cd.rightCols(k);
      break;
    }
    case Relation::Inconclusive:
      throw InputError("cannot generate a system for Inconclusive");
  }
  return make_system(std::move(A), std::move(B), std::move(C), std::move(D),
                     input_split, output_split);
}

LtiSystem random_system(const SystemStructure& st, const CausalScenario& scenario,
                        std::uint64_t seed, bool require_discoverable,
                        const GeneratorOptions& opts, const ToleranceConfig& tol) {
  Rng rng(seed);
  const Eigen::Index n = st.order;
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    LtiSystem sys = draw_system(st, scenario, rng, opts);
    if (n > 0) {
      const Matrix ctrb = controllability_matrix(sys, n);
      const Matrix obsv = observability_matrix(sys, n);
      if (numerical_rank(ctrb, tol) != n || numerical_rank(obsv, tol) != n) continue;
      if (normalized_sigma_min(ctrb, n) < opts.min_normalized_sigma ||
          normalized_sigma_min(obsv, n) < opts.min_normalized_sigma) {
        continue;
      }
    }
    if (require_discoverable &&
        !check_discoverable(sys, tol).holds_for(scenario.structure())) {
      continue;
    }
    if (st.lag > 0 && compute_lag(sys, tol) != st.lag) continue;
    return sys;
  }
  throw ExhaustionError("no admissible system for scenario " +
                        std::string(relation_label(scenario.relation)) + " after " +
                        std::to_string(opts.max_attempts) + " draws");
}

XiniReconstruction reconstruct_xini(const LtiSystem& sys, const TimeSeries& u_ini,
                                    const TimeSeries& y_ini,
                                    const ToleranceConfig& tol) {
  sys.validate();
  const Eigen::Index len = y_ini.length();
  if (len < 1) throw LengthError("initial window is empty");
  if (u_ini.length() != len) throw LengthError("u_ini and y_ini lengths differ");
  if (u_ini.dim() != sys.input_dim() || y_ini.dim() != sys.output_dim()) {
    throw DimensionError("initial window dimensions do not match the system");
  }
  const Matrix o = observability_matrix(sys, len);
  const Vector u = u_ini.flatten();
  const Vector rhs = y_ini.flatten() - toeplitz_matrix(sys, len) * u;

  XiniReconstruction out;
  out.observability_rank = numerical_rank(o, tol);
  out.unique = out.observability_rank == sys.order();
  out.state = least_squares(o, rhs, tol);
  Vector x = out.state;
  for (Eigen::Index t = 0; t < len; ++t) {
    x = sys.A * x + sys.B * u_ini.sample(t);
  }
  out.state_after = std::move(x);
  return out;
}

std::string serialize_system(const LtiSystem& sys) {
  sys.validate();
  std::ostringstream os;
  os << "lti_system 1\n";
  os << "order " << sys.order() << '\n';
  os << "inputs " << sys.input_dim() << '\n';
  os << "outputs " << sys.output_dim() << '\n';
  os << "input_split " << sys.input_split << '\n';
  os << "output_split " << sys.output_split << '\n';
  write_matrix(os, "A", sys.A);
  write_matrix(os, "B", sys.B);
  write_matrix(os, "C", sys.C);
  write_matrix(os, "D", sys.D);
  return os.str();
}

LtiSystem parse_system(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::string current;
    for (char c : text) {
      if (c == '\n') {
        lines.push_back(current);
        current.clear();
      } else if (c != '\r') {
        current.push_back(c);
      }
    }
    if (!current.empty()) lines.push_back(current);
  }

  std::size_t li = 0;
  auto next_line = [&]() -> std::pair<std::istringstream, std::size_t> {
    while (li < lines.size()) {
      const std::string& l = lines[li++];
      const auto first = l.find_first_not_of(" \t");
      if (first == std::string::npos || l[first] == '#') continue;
      return {std::istringstream(l), li};
    }
    throw ParseError("unexpected end of system description", li + 1);
  };

  auto expect_key = [&](const char* key) -> Eigen::Index {
    auto [is, line] = next_line();
    std::string name;
    long long value = -1;
    if (!(is >> name >> value) || name != key || value < 0) {
      throw ParseError(std::string("expected '") + key + " <count>'", line);
    }
    return static_cast<Eigen::Index>(value);
  };

  auto read_matrix = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
    auto [is, line] = next_line();
    std::string name;
    long long r = -1;
    long long c = -1;
    if (!(is >> name >> r >> c) || name != key) {
      throw ParseError(std::string("expected matrix header '") + key + " <rows> <cols>'",
                       line);
    }
    if (r != rows || c != cols) {
      throw ParseError(std::string("matrix ") + key + " has shape " +
                           std::to_string(r) + "x" + std::to_string(c) +
                           ", expected " + std::to_string(rows) + "x" +
                           std::to_string(cols),
                       line);
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      auto [row, row_line] = next_line();
      for (Eigen::Index j = 0; j < cols; ++j) {
        double v = 0.0;
        if (!(row >> v)) {
          throw ParseError(std::string("matrix ") + key + ": missing entry", row_line,
                           static_cast<std::size_t>(j + 1));
        }
        m(i, j) = v;
      }
      std::string extra;
      if (row >> extra) {
        throw ParseError(std::string("matrix ") + key + ": too many entries", row_line);
      }
    }
    return m;
  };

  {
    auto [is, line] = next_line();
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "lti_system" || version != 1) {
      throw ParseError("missing 'lti_system 1' header", line);
    }
  }
  const Eigen::Index n = expect_key("order");
  const Eigen::Index k = expect_key("inputs");
  const Eigen::Index p = expect_key("outputs");
  const Eigen::Index isplit = expect_key("input_split");
  const Eigen::Index osplit = expect_key("output_split");
  Matrix A = read_matrix("A", n, n);
  Matrix B = read_matrix("B", n, k);
  Matrix C = read_matrix("C", p, n);
  Matrix D = read_matrix("D", p, k);
  return make_system(std::move(A), std::move(B), std::move(C), std::move(D), isplit,
                     osplit);
}

}  // namespace becaus
