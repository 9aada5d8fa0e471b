#include "becaus/linalg.hpp"

#include "becaus/error.hpp"

#include <algorithm>
#include <string>

namespace becaus {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericalError(std::string(what) + ": matrix has non-finite entries");
  }
}

double rank_cut(double sigma_max, Eigen::Index rows, Eigen::Index cols,
                const ToleranceConfig& tol) {
  return tol.rank_rtol * static_cast<double>(std::max(rows, cols)) * sigma_max;
}

}  // namespace

void ToleranceConfig::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(rank_rtol) || !in_unit(feasibility_rtol)) {
    throw InputError("tolerances must lie strictly between 0 and 1");
  }
}

TimeSeries::TimeSeries(Matrix values) : values_(std::move(values)) {}

TimeSeries TimeSeries::from_samples(
    const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return TimeSeries{};
  const auto dim = static_cast<Eigen::Index>(rows.front().size());
  TimeSeries out(dim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (static_cast<Eigen::Index>(rows[t].size()) != dim) {
      throw DimensionError("sample " + std::to_string(t) + " has " +
                           std::to_string(rows[t].size()) +
                           " components, expected " + std::to_string(dim));
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
      out(i, static_cast<Eigen::Index>(t)) = rows[t][static_cast<std::size_t>(i)];
    }
  }
  return out;
}

TimeSeries TimeSeries::window(Eigen::Index start, Eigen::Index count) const {
  if (start < 0 || count < 0 || start + count > length()) {
    throw LengthError("window [" + std::to_string(start) + ", " +
                      std::to_string(start + count) + ") exceeds series length " +
                      std::to_string(length()));
  }
  return TimeSeries(Matrix(values_.middleCols(start, count)));
}

TimeSeries TimeSeries::components(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > dim()) {
    throw DimensionError("component range exceeds series dimension");
  }
  return TimeSeries(Matrix(values_.middleRows(first, count)));
}

Vector TimeSeries::flatten(Eigen::Index start, Eigen::Index count) const {
  const TimeSeries w = window(start, count);
  return Eigen::Map<const Vector>(w.values_.data(), w.values_.size());
}

TimeSeries TimeSeries::stack(std::initializer_list<const TimeSeries*> parts) {
  Eigen::Index dim = 0;
  Eigen::Index length = -1;
  for (const TimeSeries* p : parts) {
    if (length >= 0 && p->length() != length) {
      throw DimensionError("cannot stack series of different lengths");
    }
    length = p->length();
    dim += p->dim();
  }
  TimeSeries out(dim, std::max<Eigen::Index>(length, 0));
  Eigen::Index row = 0;
  for (const TimeSeries* p : parts) {
    out.values_.middleRows(row, p->dim()) = p->values_;
    row += p->dim();
  }
  return out;
}

Matrix build_hankel(const TimeSeries& w, Eigen::Index depth) {
  if (depth < 1) throw LengthError("Hankel depth must be at least 1");
  if (w.length() < depth) {
    throw LengthError("series of length " + std::to_string(w.length()) +
                      " is shorter than Hankel depth " + std::to_string(depth));
  }
  const Eigen::Index q = w.dim();
  const Eigen::Index cols = w.length() - depth + 1;
  Matrix h(q * depth, cols);
  for (Eigen::Index i = 0; i < depth; ++i) {
    h.middleRows(i * q, q) = w.values().middleCols(i, cols);
  }
  return h;
}

int numerical_rank(const Matrix& m, const ToleranceConfig& tol) {
  if (m.size() == 0) return 0;
  require_finite(m, "numerical_rank");
  const Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double cut = rank_cut(s(0), m.rows(), m.cols(), tol);
  return static_cast<int>((s.array() > cut).count());
}

Matrix vstack(std::initializer_list<const Matrix*> blocks) {
  Eigen::Index rows = 0;
  Eigen::Index cols = -1;
  for (const Matrix* b : blocks) {
    if (cols >= 0 && b->cols() != cols) {
      throw DimensionError("vstack: blocks have different column counts");
    }
    cols = b->cols();
    rows += b->rows();
  }
  Matrix out(rows, std::max<Eigen::Index>(cols, 0));
  Eigen::Index r = 0;
  for (const Matrix* b : blocks) {
    out.middleRows(r, b->rows()) = *b;
    r += b->rows();
  }
  return out;
}

Matrix null_space_basis(const Matrix& m, const ToleranceConfig& tol) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0 || n == 0) return Matrix::Identity(n, n);
  require_finite(m, "null_space_basis");
  const Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  int rank = 0;
  if (s(0) > 0.0) {
    rank = static_cast<int>(
        (s.array() > rank_cut(s(0), m.rows(), m.cols(), tol)).count());
  }
  return svd.matrixV().rightCols(n - rank);
}

Vector least_squares(const Matrix& m, const Vector& rhs,
                     const ToleranceConfig& tol) {
  if (rhs.size() != m.rows()) {
    throw DimensionError("least_squares: rhs length does not match rows");
  }
  if (m.size() == 0) return Vector::Zero(m.cols());
  require_finite(m, "least_squares");
  const Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Vector x = Vector::Zero(m.cols());
  if (s(0) <= 0.0) return x;
  const double cut = rank_cut(s(0), m.rows(), m.cols(), tol);
  for (Eigen::Index i = 0; i < s.size() && s(i) > cut; ++i) {
    x += svd.matrixV().col(i) * (svd.matrixU().col(i).dot(rhs) / s(i));
  }
  return x;
}

AffineSolutionSummary analyze_affine_system(const Matrix& m, const Vector& rhs,
                                            std::span<const Matrix> probes,
                                            const ToleranceConfig& tol) {
  if (rhs.size() != m.rows()) {
    throw DimensionError("analyze_affine_system: rhs has " +
                         std::to_string(rhs.size()) + " entries for " +
                         std::to_string(m.rows()) + " rows");
  }
  for (const Matrix& p : probes) {
    if (p.cols() != m.cols()) {
      throw DimensionError("analyze_affine_system: probe has " +
                           std::to_string(p.cols()) + " columns, expected " +
                           std::to_string(m.cols()));
    }
  }
  require_finite(m, "analyze_affine_system");

  AffineSolutionSummary out;
  const Eigen::Index n = m.cols();
  Matrix null_basis;
  double sigma_max = 0.0;

  if (m.size() == 0) {
    out.least_norm_solution = Vector::Zero(n);
    null_basis = Matrix::Identity(n, n);
  } else {
    const Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    sigma_max = s(0);
    if (sigma_max > 0.0) {
      out.coefficient_rank = static_cast<int>(
          (s.array() > rank_cut(sigma_max, m.rows(), m.cols(), tol)).count());
    }
    Vector x = Vector::Zero(n);
    for (int i = 0; i < out.coefficient_rank; ++i) {
      x += svd.matrixV().col(i) * (svd.matrixU().col(i).dot(rhs) / s(i));
    }
    out.least_norm_solution = std::move(x);
    null_basis = svd.matrixV().rightCols(n - out.coefficient_rank);
  }

  out.residual = (m * out.least_norm_solution - rhs).norm();
  out.consistent = out.residual <= tol.feasibility_rtol * (1.0 + rhs.norm());
  out.augmented_rank = out.coefficient_rank + (out.consistent ? 0 : 1);

  // The cut for probe images uses the scale of the stacked system [M; P] so
  // that image_dim matches rank([M; P]) - rank(M).
  out.image_dims.reserve(probes.size());
  for (const Matrix& p : probes) {
    if (null_basis.cols() == 0 || p.rows() == 0) {
      out.image_dims.push_back(0);
      continue;
    }
    require_finite(p, "analyze_affine_system probe");
    const double probe_norm =
        p.size() == 0 ? 0.0 : Eigen::BDCSVD<Matrix>(p).singularValues()(0);
    const double scale = std::max(sigma_max, probe_norm);
    if (scale <= 0.0) {
      out.image_dims.push_back(0);
      continue;
    }
    const Matrix image = p * null_basis;
    const Vector s = Eigen::BDCSVD<Matrix>(image).singularValues();
    const double cut = rank_cut(scale, m.rows() + p.rows(), n, tol);
    out.image_dims.push_back(static_cast<int>((s.array() > cut).count()));
  }
  return out;
}

}  // namespace becaus
