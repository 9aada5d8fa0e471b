#pragma once

#include "becaus/linalg.hpp"
#include "becaus/scenario.hpp"

#include <json.hpp>

#include <array>
#include <span>
#include <vector>

namespace becaus {

/// Augmented Dickey-Fuller test with a constant term.
struct StationarityReport {
  double adf_statistic = 0.0;
  double p_value = 1.0;
  int used_lag = 0;
  int nobs = 0;
  /// 1%, 5% and 10% critical values for nobs.
  std::array<double, 3> critical_values{};
  bool stationary = false;
};

/// Default ADF lag bound for a series of length T: ceil(12 (T/100)^(1/4)),
/// capped at T/2 - 2.
int default_adf_max_lag(Eigen::Index T);

/// Lag picked by AIC over 0..max_lag on a common sample, then refit.
/// max_lag < 0 selects default_adf_max_lag. Throws LengthError unless
/// length >= max_lag + 10, DegenerateVarianceError for a constant series.
StationarityReport adf_test(std::span<const double> x, int max_lag = -1,
                            double alpha = 0.05);
/// Scalar series only; DimensionError otherwise.
StationarityReport adf_test(const TimeSeries& x, int max_lag = -1, double alpha = 0.05);

/// Approximate p-value of an ADF statistic (constant, one series).
double adf_p_value(double statistic);
/// Finite-sample response-surface critical values at 1%, 5%, 10%.
std::array<double, 3> adf_critical_values(int nobs);

struct GrangerResult {
  /// Component indices of the cause and effect inside their series.
  std::vector<Eigen::Index> cause_components;
  Eigen::Index effect_component = 0;
  int lag_order = 0;
  double f_statistic = 0.0;
  double p_value = 1.0;
  int df_num = 0;
  int df_den = 0;
  double rss_restricted = 0.0;
  double rss_unrestricted = 0.0;
  bool verdict = false;
};

/// F-test of "cause lags improve the OLS prediction of effect" with a
/// constant and lag_order lags of effect and of every cause component.
/// effect must be scalar. Throws LengthError unless
/// T >= lag_order (1 + dim(cause)) + 10, RankDeficientRegressionError when
/// the lagged regressors are collinear.
GrangerResult granger_test(const TimeSeries& cause, const TimeSeries& effect,
                           int lag_order, double alpha = 0.05);

/// Lag in 1..max_lag minimizing the BIC of the joint VAR in (effect, cause),
/// all candidates fitted on the observations available to max_lag. Scoring
/// the effect equation alone, or the joint VAR by AIC, favors lags where the
/// cause fits by chance and inflates the F-test's size well above alpha.
/// Collinear candidates are skipped; RankDeficientRegressionError if none
/// remains.
int select_granger_lag(const TimeSeries& cause, const TimeSeries& effect, int max_lag);

enum class CauseMode {
  /// All cause components enter one joint F-test against each effect
  /// component; components linearly dependent on earlier ones are dropped.
  Block,
  /// One test per (cause component, effect component) pair.
  PerComponent,
};

struct GrangerConfig {
  /// Fixed lag order; 0 chooses by VAR BIC over 1..max_lag per test.
  int lag = 0;
  int max_lag = 5;
  double alpha = 0.05;
  CauseMode mode = CauseMode::Block;
  /// Difference components rejected by the ADF screen, at most max_differences times.
  bool difference_nonstationary = true;
  int max_differences = 2;
  /// Components of theta / psi to use; empty means all.
  std::vector<Eigen::Index> theta_components;
  std::vector<Eigen::Index> psi_components;
};

/// How one component was prepared before testing.
struct ComponentPreparation {
  Eigen::Index component = 0;
  int differences = 0;
  /// Constant components carry no information and are left out.
  bool constant = false;
  std::vector<StationarityReport> adf;
};

struct GrangerScreen {
  std::vector<GrangerResult> theta_to_psi;
  std::vector<GrangerResult> psi_to_theta;
  std::vector<ComponentPreparation> theta_prep;
  std::vector<ComponentPreparation> psi_prep;
  GrangerConfig config;

  bool theta_causes_psi() const;
  bool psi_causes_theta() const;
};

GrangerScreen granger_screen(const TimeSeries& theta, const TimeSeries& psi,
                             const GrangerConfig& config = {});

/// Whether the screen's directions agree with a mechanistic relation: no
/// direction for R1 and R6, theta -> psi alone for R2 and R4, psi -> theta
/// alone for R3 and R5.
bool granger_agrees(const GrangerScreen& screen, Relation truth);

nlohmann::json to_json(const StationarityReport& r);
nlohmann::json to_json(const GrangerResult& r);
nlohmann::json to_json(const GrangerScreen& s);

}  // namespace becaus
