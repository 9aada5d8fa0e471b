#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <span>
#include <vector>

namespace becaus {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thresholds behind every rank and feasibility decision in the library.
struct ToleranceConfig {
  /// Singular values at or below rank_rtol * max(rows, cols) * sigma_max are
  /// treated as zero.
  double rank_rtol = 1e-9;
  /// A linear system is consistent when its least-squares residual is at most
  /// feasibility_rtol * (1 + |rhs|).
  double feasibility_rtol = 1e-8;

  /// Throws InputError unless both thresholds lie in (0, 1).
  void validate() const;
};

/// A q-dimensional discrete-time signal of length T.
///
/// Samples are stored column-wise: values().col(t) is w(t). Indices are
/// zero-based.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(Eigen::Index dim, Eigen::Index length)
      : values_(Matrix::Zero(dim, length)) {}
  explicit TimeSeries(Matrix values);

  /// Builds a series from one row per time step.
  static TimeSeries from_samples(const std::vector<std::vector<double>>& rows);

  Eigen::Index dim() const noexcept { return values_.rows(); }
  Eigen::Index length() const noexcept { return values_.cols(); }
  bool empty() const noexcept { return values_.size() == 0; }

  auto sample(Eigen::Index t) { return values_.col(t); }
  auto sample(Eigen::Index t) const { return values_.col(t); }
  double operator()(Eigen::Index component, Eigen::Index t) const {
    return values_(component, t);
  }
  double& operator()(Eigen::Index component, Eigen::Index t) {
    return values_(component, t);
  }

  const Matrix& values() const noexcept { return values_; }
  Matrix& values() noexcept { return values_; }

  /// Samples [start, start + count) as a new series.
  TimeSeries window(Eigen::Index start, Eigen::Index count) const;
  /// Components [first, first + count).
  TimeSeries components(Eigen::Index first, Eigen::Index count) const;
  /// The window flattened as col(w(start), ..., w(start + count - 1)).
  Vector flatten(Eigen::Index start, Eigen::Index count) const;
  Vector flatten() const { return flatten(0, length()); }

  /// Component-wise stacking of equally long series: col(a, b, ...).
  static TimeSeries stack(std::initializer_list<const TimeSeries*> parts);

  bool operator==(const TimeSeries& other) const {
    return values_.rows() == other.values_.rows() &&
           values_.cols() == other.values_.cols() && values_ == other.values_;
  }

 private:
  Matrix values_;
};

/// Depth-L block Hankel matrix: column j stacks w(j), ..., w(j + L - 1).
/// Throws LengthError when the series is shorter than the depth.
Matrix build_hankel(const TimeSeries& w, Eigen::Index depth);

/// Number of singular values above rank_rtol * max(rows, cols) * sigma_max.
/// Empty and all-zero matrices have rank 0.
int numerical_rank(const Matrix& m, const ToleranceConfig& tol = {});

/// Vertical concatenation of blocks with equal column counts.
Matrix vstack(std::initializer_list<const Matrix*> blocks);

/// Orthonormal basis (as columns) of the null space of m, using the same
/// singular-value cut as numerical_rank.
Matrix null_space_basis(const Matrix& m, const ToleranceConfig& tol = {});

/// Minimum-norm least-squares solution of m * x = rhs via the rank-truncated
/// SVD.
Vector least_squares(const Matrix& m, const Vector& rhs,
                     const ToleranceConfig& tol = {});

struct AffineSolutionSummary {
  int coefficient_rank = 0;
  int augmented_rank = 0;
  bool consistent = false;
  /// | M x* - rhs | at the minimum-norm least-squares solution x*.
  double residual = 0.0;
  Vector least_norm_solution;
  /// dim(P_i * null(M)) for each probe P_i in the order given.
  std::vector<int> image_dims;

  int image_dim_under(std::size_t probe) const { return image_dims.at(probe); }
};

/// Consistency, rank and probe-image summary of the affine set {x : M x = rhs}.
AffineSolutionSummary analyze_affine_system(const Matrix& m, const Vector& rhs,
                                            std::span<const Matrix> probes,
                                            const ToleranceConfig& tol = {});

inline AffineSolutionSummary analyze_affine_system(
    const Matrix& m, const Vector& rhs, const ToleranceConfig& tol = {}) {
  return analyze_affine_system(m, rhs, std::span<const Matrix>{}, tol);
}

}  // namespace becaus
