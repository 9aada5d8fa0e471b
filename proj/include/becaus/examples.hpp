#pragma once

#include "becaus/data_gen.hpp"
#include "becaus/granger.hpp"
#include "becaus/lti.hpp"

#include <cstdint>
#include <optional>

namespace becaus {

/// The four reference scenarios (n = 1..4): independence, full causality,
/// partial causality and a latent common cause, each with a two-state system
/// (none for n = 1), x(0) = [1, 0] and T = 50.
struct ReferenceExample {
  int number = 0;
  CausalScenario scenario;
  std::optional<LtiSystem> sys;
  InputDistributions distributions;
  IndependenceMode independence_mode = IndependenceMode::IndependentStreams;
  Eigen::Index T = 50;
  /// Components of theta / psi fed to the Granger baseline (all when empty).
  std::vector<Eigen::Index> granger_theta_components;
  std::vector<Eigen::Index> granger_psi_components;
  CauseMode granger_mode = CauseMode::Block;
};

/// Throws InputError unless 1 <= n <= 4.
ReferenceExample reference_example(int n);

/// Default seeds for which the reference runs are documented in the README.
inline constexpr std::uint64_t kDefaultExampleSeed = 2;

LabeledDataset reference_dataset(const ReferenceExample& ex, std::uint64_t seed,
                                 const ToleranceConfig& tol = {});

}  // namespace becaus
