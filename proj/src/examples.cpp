#include "becaus/examples.hpp"

#include "becaus/error.hpp"

namespace becaus {

namespace {

Matrix mat(Eigen::Index rows, Eigen::Index cols, std::initializer_list<double> v) {
  Matrix m(rows, cols);
  auto it = v.begin();
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = *it++;
  }
  return m;
}

}  // namespace

ReferenceExample reference_example(int n) {
  ReferenceExample ex;
  ex.number = n;
  switch (n) {
    case 1:
      ex.scenario = {Relation::Independence};
      ex.distributions.theta = {-1.0, 1.0};
      ex.distributions.psi = {-10.0, 10.0};
      ex.independence_mode = IndependenceMode::IndependentStreams;
      break;
    case 2:
      ex.scenario = {Relation::ThetaCausesPsi};
      ex.sys = make_system(mat(2, 2, {1.0, -0.5, 0.5, 1.0}), mat(2, 1, {-0.5, 2.0}),
                           mat(1, 2, {2.0, -2.0}), Matrix::Zero(1, 1));
      ex.distributions.theta = {0.0, 1.0};
      break;
    case 3:
      ex.scenario = {Relation::ThetaPartiallyCausesPsi};
      // u = col(theta, v)
      ex.sys = make_system(mat(2, 2, {1.5, -0.5, 0.5, 0.8}),
                           mat(2, 2, {-0.5, 1.5, 2.0, -2.0}),
                           mat(2, 2, {2.0, -2.0, 1.0, -1.0}),
                           mat(2, 2, {2.0, 2.0, 1.0, 1.0}), 1, -1);
      ex.distributions.theta = {-1.0, 1.0};
      ex.distributions.latent = {-10.0, 10.0};
      // theta is tested against psi_1 and psi_2 separately.
      ex.granger_mode = CauseMode::PerComponent;
      break;
    case 4:
      ex.scenario = {Relation::LatentCommonCause};
      // y = col(theta_1, theta_2, psi_1, psi_2); theta_2 and psi_2 are identically zero.
      ex.sys = make_system(mat(2, 2, {0.5, -0.5, 0.5, 0.5}),
                           mat(2, 2, {-0.5, 3.0, -2.0, 1.0}),
                           mat(4, 2, {1.0, -2.0, 0.0, 0.0, 2.0, 0.5, 0.0, 0.0}),
                           mat(4, 2, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0}), -1, 2);
      ex.distributions.latent = {0.0, 1.0};
      ex.granger_theta_components = {0};
      ex.granger_psi_components = {0};
      break;
    default:
      throw InputError("reference examples are numbered 1 to 4, got " + std::to_string(n));
  }
  return ex;
}

LabeledDataset reference_dataset(const ReferenceExample& ex, std::uint64_t seed,
                                 const ToleranceConfig& tol) {
  GenerateOptions opts;
  opts.distributions = ex.distributions;
  opts.independence_mode = ex.independence_mode;
  opts.tol = tol;
  return generate(ex.scenario, ex.sys, ex.T, seed, opts);
}

}  // namespace becaus
