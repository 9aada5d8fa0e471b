#include "becaus/granger.hpp"

#include "becaus/error.hpp"

#include <Eigen/Cholesky>
#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace becaus {

namespace {

struct OlsFit {
  Vector beta;
  double rss = 0.0;
  Eigen::HouseholderQR<Matrix> qr;
};

OlsFit ols(const Matrix& x, const Vector& y) {
  if (numerical_rank(x) < x.cols()) {
    throw RankDeficientRegressionError("regressors are collinear (" +
                                       std::to_string(x.cols()) + " columns, " +
                                       std::to_string(x.rows()) + " observations)");
  }
  OlsFit fit;
  fit.qr.compute(x);
  fit.beta = fit.qr.solve(y);
  fit.rss = (y - x * fit.beta).squaredNorm();
  return fit;
}

// Standard error of coefficient i: sqrt(s^2 [(X^T X)^-1]_ii).
double standard_error(const OlsFit& fit, Eigen::Index i, Eigen::Index nobs) {
  const Eigen::Index k = fit.beta.size();
  const Matrix r = fit.qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Matrix r_inv = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
  const double s2 = fit.rss / static_cast<double>(nobs - k);
  return std::sqrt(s2 * r_inv.row(i).squaredNorm());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Gaussian log-likelihood AIC in the form used by common OLS packages.
double ols_aic(double rss, Eigen::Index nobs, Eigen::Index ncols) {
  const double n = static_cast<double>(nobs);
  return n * (std::log(2.0 * std::numbers::pi) + std::log(rss / n) + 1.0) +
         2.0 * static_cast<double>(ncols);
}

std::vector<double> difference(const std::vector<double>& x) {
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

bool is_constant(std::span<const double> x) {
  if (x.empty()) return true;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *lo == *hi;
}

// Rows t = first..T-1: [const, effect lags 1..L, (cause lags 1..L)].
Matrix lag_design(const TimeSeries& cause, const TimeSeries& effect, int lag,
                  Eigen::Index first, bool with_cause) {
  const Eigen::Index T = effect.length();
  const Eigen::Index q = with_cause ? cause.dim() : 0;
  Matrix x(T - first, 1 + lag + lag * q);
  for (Eigen::Index t = first; t < T; ++t) {
    const Eigen::Index r = t - first;
    x(r, 0) = 1.0;
    for (int j = 1; j <= lag; ++j) {
      x(r, j) = effect(0, t - j);
      for (Eigen::Index c = 0; c < q; ++c) x(r, 1 + lag + (j - 1) * q + c) = cause(c, t - j);
    }
  }
  return x;
}

void check_granger_inputs(const TimeSeries& cause, const TimeSeries& effect, int lag) {
  if (effect.dim() != 1) throw DimensionError("Granger effect must be scalar");
  if (cause.dim() < 1) throw DimensionError("Granger cause has no components");
  if (cause.length() != effect.length()) {
    throw DimensionError("cause and effect lengths differ");
  }
  if (lag < 1) throw InputError("Granger lag order must be at least 1");
  const Eigen::Index need = lag * (1 + cause.dim()) + 10;
  if (effect.length() < need) {
    throw LengthError("Granger test at lag " + std::to_string(lag) + " needs " +
                      std::to_string(need) + " samples, got " +
                      std::to_string(effect.length()));
  }
}

int largest_feasible_lag(Eigen::Index T, Eigen::Index cause_dim, int max_lag) {
  int lag = max_lag;
  while (lag >= 1 && T < lag * (1 + cause_dim) + 10) --lag;
  return lag;
}

}  // namespace

int default_adf_max_lag(Eigen::Index T) {
  const int schwert = static_cast<int>(std::ceil(12.0 * std::pow(T / 100.0, 0.25)));
  return std::min(static_cast<int>(T / 2 - 2), schwert);
}

double adf_p_value(double stat) {
  constexpr double kMax = 2.74;
  constexpr double kMin = -18.83;
  constexpr double kStar = -1.61;
  if (stat > kMax) return 1.0;
  if (stat < kMin) return 0.0;
  if (stat <= kStar) {
    return normal_cdf(2.1659 + stat * (1.4412 + stat * 0.038269));
  }
  return normal_cdf(1.7339 + stat * (0.93202 + stat * (-0.12745 + stat * -0.010368)));
}

std::array<double, 3> adf_critical_values(int nobs) {
  static constexpr double kTau[3][4] = {{-3.43035, -6.5393, -16.786, -79.433},
                                        {-2.86154, -2.8903, -4.234, -40.04},
                                        {-2.56677, -1.5384, -2.809, 0.0}};
  const double h = 1.0 / static_cast<double>(nobs);
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    out[i] = kTau[i][0] + h * (kTau[i][1] + h * (kTau[i][2] + h * kTau[i][3]));
  }
  return out;
}

StationarityReport adf_test(std::span<const double> x, int max_lag, double alpha) {
  const Eigen::Index T = static_cast<Eigen::Index>(x.size());
  if (is_constant(x)) throw DegenerateVarianceError("ADF input is constant");
  if (max_lag < 0) max_lag = default_adf_max_lag(T);
  if (max_lag < 0 || T < max_lag + 10) {
    throw LengthError("ADF test needs at least max_lag + 10 samples, got " +
                      std::to_string(T));
  }
  if (max_lag > T / 2 - 2) {
    throw InputError("ADF max_lag must not exceed T/2 - 2");
  }

  std::vector<double> dx(x.size() - 1);
  for (Eigen::Index i = 0; i + 1 < T; ++i) dx[i] = x[i + 1] - x[i];

  // Rows i = lag..T-2: dx(i) on [x(i), dx(i-1), ..., dx(i-lag), 1].
  auto design = [&](int lag, int first_row, bool constant_first) {
    const Eigen::Index nobs = T - 1 - first_row;
    Matrix m(nobs, lag + 2);
    Vector y(nobs);
    for (Eigen::Index r = 0; r < nobs; ++r) {
      const Eigen::Index i = r + first_row;
      const Eigen::Index off = constant_first ? 1 : 0;
      m(r, constant_first ? 0 : lag + 1) = 1.0;
      m(r, off) = x[i];
      for (int j = 1; j <= lag; ++j) m(r, off + j) = dx[i - j];
      y(r) = dx[i];
    }
    return std::pair{m, y};
  };

  int best_lag = 0;
  double best_aic = std::numeric_limits<double>::infinity();
  for (int lag = 0; lag <= max_lag; ++lag) {
    auto [m, y] = design(lag, max_lag, true);
    const double aic = ols_aic(ols(m, y).rss, m.rows(), m.cols());
    if (aic < best_aic) {
      best_aic = aic;
      best_lag = lag;
    }
  }

  auto [m, y] = design(best_lag, best_lag, false);
  const OlsFit fit = ols(m, y);
  StationarityReport rep;
  rep.used_lag = best_lag;
  rep.nobs = static_cast<int>(m.rows());
  rep.adf_statistic = fit.beta(0) / standard_error(fit, 0, m.rows());
  rep.p_value = adf_p_value(rep.adf_statistic);
  rep.critical_values = adf_critical_values(rep.nobs);
  rep.stationary = rep.p_value < alpha;
  return rep;
}

StationarityReport adf_test(const TimeSeries& x, int max_lag, double alpha) {
  if (x.dim() != 1) throw DimensionError("ADF test takes a scalar series");
  return adf_test(std::span<const double>(x.values().data(), x.length()), max_lag, alpha);
}

GrangerResult granger_test(const TimeSeries& cause, const TimeSeries& effect,
                           int lag_order, double alpha) {
  check_granger_inputs(cause, effect, lag_order);
  const Eigen::Index T = effect.length();
  const Vector y = effect.values().row(0).segment(lag_order, T - lag_order).transpose();
  const Matrix xr = lag_design(cause, effect, lag_order, lag_order, false);
  const Matrix xu = lag_design(cause, effect, lag_order, lag_order, true);
  const OlsFit restricted = ols(xr, y);
  const OlsFit unrestricted = ols(xu, y);

  GrangerResult res;
  res.effect_component = 0;
  res.lag_order = lag_order;
  res.df_num = static_cast<int>(lag_order * cause.dim());
  res.df_den = static_cast<int>(xu.rows() - xu.cols());
  res.rss_restricted = restricted.rss;
  res.rss_unrestricted = unrestricted.rss;
  const double gain = std::max(0.0, restricted.rss - unrestricted.rss);
  if (gain == 0.0) {
    res.f_statistic = 0.0;
    res.p_value = 1.0;
  } else if (unrestricted.rss == 0.0) {
    res.f_statistic = std::numeric_limits<double>::infinity();
    res.p_value = 0.0;
  } else {
    res.f_statistic = (gain / res.df_num) / (unrestricted.rss / res.df_den);
    const boost::math::fisher_f_distribution<double> f(res.df_num, res.df_den);
    res.p_value = std::isfinite(res.f_statistic)
                      ? boost::math::cdf(boost::math::complement(f, res.f_statistic))
                      : 0.0;
  }
  res.verdict = res.p_value < alpha;
  return res;
}

int select_granger_lag(const TimeSeries& cause, const TimeSeries& effect, int max_lag) {
  max_lag = largest_feasible_lag(effect.length(), cause.dim(), max_lag);
  check_granger_inputs(cause, effect, std::max(max_lag, 1));
  const Eigen::Index T = effect.length();
  const Eigen::Index n = T - max_lag;
  const Eigen::Index k = 1 + cause.dim();
  // Every VAR equation regresses on the same lags, so one design serves all.
  Matrix y(n, k);
  y.col(0) = effect.values().row(0).segment(max_lag, n).transpose();
  y.rightCols(k - 1) = cause.values().middleCols(max_lag, n).transpose();
  int best = 0;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int lag = 1; lag <= max_lag; ++lag) {
    const Matrix x = lag_design(cause, effect, lag, max_lag, true);
    Matrix resid(n, k);
    try {
      for (Eigen::Index e = 0; e < k; ++e) {
        const Vector col = y.col(e);
        resid.col(e) = col - x * ols(x, col).beta;
      }
    } catch (const RankDeficientRegressionError&) {
      continue;  // collinear candidates are not eligible
    }
    const Matrix sigma = resid.transpose() * resid / static_cast<double>(n);
    const Eigen::LDLT<Matrix> ldlt(sigma);
    const Vector d = ldlt.vectorD();
    double bic = -std::numeric_limits<double>::infinity();
    if (d.minCoeff() > 0.0) {
      bic = d.array().log().sum() + std::log(static_cast<double>(n)) *
                                        static_cast<double>(lag * k * k + k) /
                                        static_cast<double>(n);
    }
    if (best == 0 || bic < best_bic) {
      best_bic = bic;
      best = lag;
    }
  }
  if (best == 0) {
    throw RankDeficientRegressionError("every candidate Granger lag has collinear regressors");
  }
  return best;
}

bool GrangerScreen::theta_causes_psi() const {
  return std::any_of(theta_to_psi.begin(), theta_to_psi.end(),
                     [](const GrangerResult& r) { return r.verdict; });
}

bool GrangerScreen::psi_causes_theta() const {
  return std::any_of(psi_to_theta.begin(), psi_to_theta.end(),
                     [](const GrangerResult& r) { return r.verdict; });
}

namespace {

struct PreparedComponent {
  ComponentPreparation prep;
  std::vector<double> values;
};

std::vector<PreparedComponent> prepare(const TimeSeries& s,
                                       const std::vector<Eigen::Index>& wanted,
                                       const GrangerConfig& cfg) {
  std::vector<Eigen::Index> comps = wanted;
  if (comps.empty()) {
    for (Eigen::Index c = 0; c < s.dim(); ++c) comps.push_back(c);
  }
  std::vector<PreparedComponent> out;
  for (Eigen::Index c : comps) {
    if (c < 0 || c >= s.dim()) throw DimensionError("component index out of range");
    PreparedComponent pc;
    pc.prep.component = c;
    pc.values.resize(s.length());
    for (Eigen::Index t = 0; t < s.length(); ++t) pc.values[t] = s(c, t);
    while (true) {
      if (is_constant(pc.values)) {
        pc.prep.constant = true;
        break;
      }
      if (!cfg.difference_nonstationary) break;
      StationarityReport rep;
      try {
        rep = adf_test(pc.values, -1, cfg.alpha);
      } catch (const LengthError&) {
        break;
      }
      pc.prep.adf.push_back(rep);
      if (rep.stationary || pc.prep.differences >= cfg.max_differences) break;
      pc.values = difference(pc.values);
      ++pc.prep.differences;
    }
    out.push_back(std::move(pc));
  }
  return out;
}

TimeSeries aligned(const std::vector<const PreparedComponent*>& parts, std::size_t length) {
  TimeSeries s(static_cast<Eigen::Index>(parts.size()), static_cast<Eigen::Index>(length));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& v = parts[i]->values;
    const std::size_t skip = v.size() - length;
    for (std::size_t t = 0; t < length; ++t) s(i, t) = v[skip + t];
  }
  return s;
}

std::vector<GrangerResult> run_direction(const std::vector<PreparedComponent>& causes,
                                         const std::vector<PreparedComponent>& effects,
                                         std::size_t length, const GrangerConfig& cfg) {
  std::vector<const PreparedComponent*> live_causes;
  for (const auto& c : causes) {
    if (!c.prep.constant) live_causes.push_back(&c);
  }
  std::vector<GrangerResult> out;
  if (live_causes.empty()) return out;

  std::vector<std::vector<const PreparedComponent*>> cause_sets;
  if (cfg.mode == CauseMode::Block) {
    // Components that are linear combinations of earlier ones add no lags.
    std::vector<const PreparedComponent*> independent;
    for (const auto* c : live_causes) {
      independent.push_back(c);
      const Matrix rows = aligned(independent, length).values();
      if (numerical_rank(rows) < rows.rows()) independent.pop_back();
    }
    cause_sets.push_back(independent);
  } else {
    for (const auto* c : live_causes) cause_sets.push_back({c});
  }
  for (const auto& e : effects) {
    if (e.prep.constant) continue;
    const TimeSeries effect = aligned({&e}, length);
    for (const auto& set : cause_sets) {
      const TimeSeries cause = aligned(set, length);
      const int lag = cfg.lag > 0 ? cfg.lag : select_granger_lag(cause, effect, cfg.max_lag);
      GrangerResult r = granger_test(cause, effect, lag, cfg.alpha);
      r.effect_component = e.prep.component;
      for (const auto* c : set) r.cause_components.push_back(c->prep.component);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace

GrangerScreen granger_screen(const TimeSeries& theta, const TimeSeries& psi,
                             const GrangerConfig& config) {
  if (theta.length() != psi.length()) {
    throw DimensionError("theta and psi have different lengths");
  }
  if (config.max_differences < 0 || config.max_lag < 1 || config.lag < 0) {
    throw InputError("invalid Granger configuration");
  }
  GrangerScreen screen;
  screen.config = config;
  const auto th = prepare(theta, config.theta_components, config);
  const auto ps = prepare(psi, config.psi_components, config);

  std::size_t length = static_cast<std::size_t>(theta.length());
  for (const auto* set : {&th, &ps}) {
    for (const auto& c : *set) {
      if (!c.prep.constant) length = std::min(length, c.values.size());
    }
  }
  screen.theta_to_psi = run_direction(th, ps, length, config);
  screen.psi_to_theta = run_direction(ps, th, length, config);
  for (const auto& c : th) screen.theta_prep.push_back(c.prep);
  for (const auto& c : ps) screen.psi_prep.push_back(c.prep);
  return screen;
}

bool granger_agrees(const GrangerScreen& screen, Relation truth) {
  const bool fwd = screen.theta_causes_psi();
  const bool rev = screen.psi_causes_theta();
  switch (truth) {
    case Relation::Independence:
    case Relation::LatentCommonCause:
      return !fwd && !rev;
    case Relation::ThetaCausesPsi:
    case Relation::ThetaPartiallyCausesPsi:
      return fwd && !rev;
    case Relation::PsiCausesTheta:
    case Relation::PsiPartiallyCausesTheta:
      return !fwd && rev;
    case Relation::Inconclusive:
      break;
  }
  return false;
}

nlohmann::json to_json(const StationarityReport& r) {
  return {{"adf_statistic", r.adf_statistic},
          {"p_value", r.p_value},
          {"used_lag", r.used_lag},
          {"nobs", r.nobs},
          {"critical_values",
           {{"1%", r.critical_values[0]}, {"5%", r.critical_values[1]},
            {"10%", r.critical_values[2]}}},
          {"stationary", r.stationary}};
}

nlohmann::json to_json(const GrangerResult& r) {
  // Infinite F (exact fit) is reported as null.
  nlohmann::json f = std::isfinite(r.f_statistic) ? nlohmann::json(r.f_statistic)
                                                  : nlohmann::json(nullptr);
  return {{"cause_components", r.cause_components},
          {"effect_component", r.effect_component},
          {"lag_order", r.lag_order},
          {"f_statistic", f},
          {"p_value", r.p_value},
          {"df_num", r.df_num},
          {"df_den", r.df_den},
          {"verdict", r.verdict}};
}

nlohmann::json to_json(const GrangerScreen& s) {
  auto list = [](const std::vector<GrangerResult>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : v) a.push_back(to_json(r));
    return a;
  };
  auto preps = [](const std::vector<ComponentPreparation>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v) {
      nlohmann::json adf = nlohmann::json::array();
      for (const auto& r : p.adf) adf.push_back(to_json(r));
      a.push_back({{"component", p.component},
                   {"differences", p.differences},
                   {"constant", p.constant},
                   {"adf", adf}});
    }
    return a;
  };
  return {{"theta_causes_psi", s.theta_causes_psi()},
          {"psi_causes_theta", s.psi_causes_theta()},
          {"theta_to_psi", list(s.theta_to_psi)},
          {"psi_to_theta", list(s.psi_to_theta)},
          {"theta_preparation", preps(s.theta_prep)},
          {"psi_preparation", preps(s.psi_prep)},
          {"lag", s.config.lag},
          {"max_lag", s.config.max_lag},
          {"alpha", s.config.alpha},
          {"mode", s.config.mode == CauseMode::Block ? "block" : "per_component"}};
}

}  // namespace becaus
