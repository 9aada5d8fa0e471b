#include "becaus/experiment.hpp"

#include "becaus/error.hpp"
#include "becaus/examples.hpp"
#include "becaus/lti.hpp"
#include "becaus/rng.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <ostream>
#include <thread>

namespace becaus {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr std::array<std::pair<ExperimentMode, std::string_view>, 7> kModes = {{
    {ExperimentMode::Example1, "example1"},
    {ExperimentMode::Example2, "example2"},
    {ExperimentMode::Example3, "example3"},
    {ExperimentMode::Example4, "example4"},
    {ExperimentMode::MonteCarlo, "montecarlo"},
    {ExperimentMode::Classify, "classify"},
    {ExperimentMode::NonlinearProbe, "nonlinear_probe"},
}};

int example_number(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::Example1: return 1;
    case ExperimentMode::Example2: return 2;
    case ExperimentMode::Example3: return 3;
    case ExperimentMode::Example4: return 4;
    default: return 0;
  }
}

// Runs body(i) for i in [0, count) on a pool; results are written by index,
// so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto run = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct ExampleExpectation {
  Relation relation;
  std::string_view granger;
};

ExampleExpectation expectation(int n) {
  switch (n) {
    case 1: return {Relation::Independence, "correct"};
    case 2: return {Relation::ThetaCausesPsi, "misses theta->psi"};
    case 3: return {Relation::ThetaPartiallyCausesPsi, "misses theta->psi"};
    default: return {Relation::LatentCommonCause, "bidirectional"};
  }
}

bool matches_expected_granger(std::string_view expected, bool theta_to_psi, bool psi_to_theta) {
  if (expected == "correct") return !theta_to_psi && !psi_to_theta;
  if (expected == "misses theta->psi") return !theta_to_psi;
  return theta_to_psi && psi_to_theta;
}

GrangerConfig example_granger_config(const ReferenceExample& ex, GrangerConfig cfg) {
  cfg.theta_components = ex.granger_theta_components;
  cfg.psi_components = ex.granger_psi_components;
  cfg.mode = ex.granger_mode;
  return cfg;
}

void run_granger(TrialRecord& rec, const TimeSeries& theta, const TimeSeries& psi,
                 const GrangerConfig& cfg) {
  const Clock::time_point start = Clock::now();
  try {
    rec.granger = granger_screen(theta, psi, cfg);
  } catch (const NumericalError& e) {
    rec.granger_error = e.what();
  }
  rec.granger_ms = ms_since(start);
  if (rec.granger && rec.truth) rec.granger_correct = granger_agrees(*rec.granger, *rec.truth);
}

void run_becaus(TrialRecord& rec, const TimeSeries& theta, const TimeSeries& psi,
                Eigen::Index T_ini, const ToleranceConfig& tol) {
  const Clock::time_point start = Clock::now();
  rec.becaus = classify(theta, psi, T_ini, tol);
  rec.becaus_ms = ms_since(start);
  if (rec.truth) rec.becaus_correct = rec.becaus->relation == *rec.truth;
}

TrialRecord montecarlo_trial(const ExperimentSpec& spec, Relation rel, std::size_t index,
                             std::uint64_t seed) {
  TrialRecord rec;
  rec.index = index;
  rec.seed = seed;
  rec.truth = rel;
  try {
    Rng rng(seed);
    const Eigen::Index n = rng.uniform_int(1, static_cast<int>(spec.max_order));
    rec.order = n;
    rec.T = spec.T > 0 ? spec.T
                       : rng.uniform_int(static_cast<int>(spec.T_min),
                                         static_cast<int>(spec.T_max));
    ScenarioDims dims = minimal_dims(rel);
    if (rng.canonical() < 0.3) dims.theta += 1;
    if (rng.canonical() < 0.3) dims.psi += 1;
    GeneratorOptions gen;
    gen.full_row_rank_feedthrough = spec.negative_control;
    const LtiSystem sys = random_system(layout_for(rel, n, dims), {rel}, derive_seed(seed, 1),
                                        !spec.negative_control, gen, spec.tol);
    GenerateOptions opts;
    opts.T_ini = spec.T_ini;
    opts.tol = spec.tol;
    const LabeledDataset d = generate({rel}, sys, rec.T, derive_seed(seed, 2), opts);
    rec.T_ini = d.T_ini;
    rec.theta_dim = d.theta.dim();
    rec.psi_dim = d.psi.dim();
    run_becaus(rec, d.theta, d.psi, d.T_ini, spec.tol);
    run_granger(rec, d.theta, d.psi, spec.granger);
  } catch (const Error& e) {
    rec.error = e.what();
    rec.becaus_correct = false;
  }
  return rec;
}

TrialRecord probe_trial(const ExperimentSpec& spec, std::size_t index) {
  TrialRecord rec;
  rec.index = index;
  rec.seed = spec.seed + index;
  const std::uint64_t s = rec.seed;
  rec.T = spec.T > 0 ? spec.T : 50;
  try {
    TimeSeries theta, psi;
    ProbeInput truth = ProbeInput::Theta;
    if (spec.probe_family == ProbeFamily::Tanh) {
      rec.order = spec.tanh_order;
      const NonlinearSystem sys = random_tanh_network(rec.order, 1, 1, derive_seed(s, 1));
      Rng rng(derive_seed(s, 2));
      theta = TimeSeries(1, rec.T);
      for (Eigen::Index t = 0; t < rec.T; ++t) theta(0, t) = rng.uniform(-1.0, 1.0);
      Vector x0 = Vector::Zero(rec.order);
      x0(0) = 1.0;
      psi = simulate_nonlinear(sys, theta, x0, rec.T);
      rec.T_ini = spec.T_ini > 0 ? spec.T_ini : 4;
    } else {
      const Relation rel = index % 2 ? Relation::PsiCausesTheta : Relation::ThetaCausesPsi;
      rec.truth = rel;
      truth = rel == Relation::ThetaCausesPsi ? ProbeInput::Theta : ProbeInput::Psi;
      Rng rng(derive_seed(s, 4));
      rec.order = rng.uniform_int(1, static_cast<int>(spec.max_order));
      const LtiSystem sys =
          random_discoverable_system(layout_for(rel, rec.order, {}), {rel}, derive_seed(s, 5),
                                     {}, spec.tol);
      GenerateOptions opts;
      opts.T_ini = spec.T_ini;
      opts.tol = spec.tol;
      const LabeledDataset d = generate({rel}, sys, rec.T, derive_seed(s, 6), opts);
      theta = d.theta;
      psi = d.psi;
      rec.T_ini = d.T_ini;
    }
    rec.theta_dim = theta.dim();
    rec.psi_dim = psi.dim();
    const Clock::time_point start = Clock::now();
    rec.probe = solve_probe(theta, psi, rec.T_ini, spec.probe);
    rec.becaus_ms = ms_since(start);
    rec.probe_correct = rec.probe->inferred_input == truth;
  } catch (const Error& e) {
    rec.error = e.what();
  }
  return rec;
}

std::vector<RelationAccuracy> aggregate(const std::vector<TrialRecord>& trials) {
  std::vector<RelationAccuracy> out;
  for (const Relation rel : kAllRelations) {
    RelationAccuracy acc;
    acc.relation = rel;
    for (const TrialRecord& t : trials) {
      if (t.truth != rel) continue;
      ++acc.trials;
      if (!t.error.empty()) {
        ++acc.errors;
      } else if (t.becaus_correct) {
        ++acc.becaus_correct;
      } else if (t.becaus && t.becaus->relation == Relation::Inconclusive) {
        ++acc.becaus_inconclusive;
      } else {
        ++acc.becaus_misclassified;
      }
      if (t.granger_correct) ++acc.granger_correct;
    }
    if (acc.trials == 0) continue;
    acc.becaus_accuracy = static_cast<double>(acc.becaus_correct) / acc.trials;
    acc.granger_accuracy = static_cast<double>(acc.granger_correct) / acc.trials;
    out.push_back(acc);
  }
  return out;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (const char ch : text) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : "nan";
  nlohmann::json j = v;
  return j.dump();
}

}  // namespace

std::string_view mode_label(ExperimentMode m) {
  for (const auto& [mode, label] : kModes) {
    if (mode == m) return label;
  }
  return "example1";
}

ExperimentMode parse_mode(std::string_view text) {
  for (const auto& [mode, label] : kModes) {
    if (label == text) return mode;
  }
  throw InputError("unknown mode '" + std::string(text) + "'");
}

std::string_view probe_family_label(ProbeFamily f) {
  return f == ProbeFamily::Tanh ? "tanh" : "lti";
}

ProbeFamily parse_probe_family(std::string_view text) {
  if (text == "tanh") return ProbeFamily::Tanh;
  if (text == "lti") return ProbeFamily::Lti;
  throw InputError("unknown probe family '" + std::string(text) + "'");
}

void ExperimentSpec::validate() const {
  tol.validate();
  probe.validate();
  if (threads < 0) throw InputError("thread count must be nonnegative");
  if (T < 0 || T_ini < 0) throw InputError("T and T_ini must be nonnegative");
  switch (mode) {
    case ExperimentMode::MonteCarlo:
    case ExperimentMode::NonlinearProbe:
      if (trials < 1) {
        throw InputError("the experiment needs at least one trial; report would be empty");
      }
      if (max_order < 1 || tanh_order < 1) throw InputError("state dimensions must be at least 1");
      if (T == 0 && (T_min < 10 || T_min > T_max)) {
        throw InputError("horizon range must satisfy 10 <= T_min <= T_max");
      }
      break;
    case ExperimentMode::Classify:
      if (csv_path.empty()) throw InputError("classify mode needs a CSV path");
      if (T_ini < 1) throw InputError("classify mode needs T_ini >= 1");
      if (theta_dim < 1 || psi_dim < 1) throw InputError("theta and psi dimensions must be >= 1");
      break;
    default:
      break;
  }
}

ExperimentReport run_example(int n, std::uint64_t seed, const ExperimentSpec& spec) {
  if (n < 1 || n > 4) throw InputError("examples are numbered 1 to 4");
  spec.tol.validate();
  const Clock::time_point start = Clock::now();
  ExperimentReport report;
  report.spec = spec;
  report.spec.seed = seed;

  const ReferenceExample ex = reference_example(n);
  const ExampleExpectation want = expectation(n);
  const LabeledDataset d = reference_dataset(ex, seed, spec.tol);

  TrialRecord rec;
  rec.seed = d.seed;
  rec.truth = d.truth.relation;
  rec.order = d.sys ? d.sys->order() : 0;
  rec.T = d.T;
  rec.T_ini = d.T_ini;
  rec.theta_dim = d.theta.dim();
  rec.psi_dim = d.psi.dim();
  run_becaus(rec, d.theta, d.psi, d.T_ini, spec.tol);
  const GrangerConfig cfg = example_granger_config(ex, spec.granger);
  run_granger(rec, d.theta, d.psi, cfg);

  ExampleCheck check;
  check.example = n;
  check.expected_relation = want.relation;
  check.expected_granger = std::string(want.granger);
  check.becaus_matches = rec.becaus->relation == want.relation;
  for (int lag = 1; lag <= 5; ++lag) {
    GrangerLagVerdict v;
    v.lag = lag;
    GrangerConfig fixed = cfg;
    fixed.lag = lag;
    try {
      const GrangerScreen screen = granger_screen(d.theta, d.psi, fixed);
      v.theta_causes_psi = screen.theta_causes_psi();
      v.psi_causes_theta = screen.psi_causes_theta();
      v.reproduces_expected =
          matches_expected_granger(want.granger, v.theta_causes_psi, v.psi_causes_theta);
    } catch (const NumericalError& e) {
      v.error = e.what();
    }
    check.granger_matches = check.granger_matches || v.reproduces_expected;
    check.lag_sweep.push_back(v);
  }

  if (!check.becaus_matches) {
    report.failures.push_back("example " + std::to_string(n) + ": BeCaus returned " +
                              std::string(relation_label(rec.becaus->relation)) + ", expected " +
                              std::string(relation_label(want.relation)));
  }
  if (!check.granger_matches) {
    report.failures.push_back("example " + std::to_string(n) +
                              ": no lag order in 1..5 reproduces the Granger outcome '" +
                              std::string(want.granger) + "'");
  }
  report.passed = report.failures.empty();
  report.trials.push_back(std::move(rec));
  report.accuracy = aggregate(report.trials);
  report.example = std::move(check);
  report.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

ExperimentReport run_montecarlo(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.mode = ExperimentMode::MonteCarlo;
  s.validate();
  const Clock::time_point start = Clock::now();
  ExperimentReport report;
  report.spec = s;
  const std::size_t per = static_cast<std::size_t>(s.trials);
  report.trials.resize(per * kAllRelations.size());
  parallel_for(report.trials.size(), s.threads, [&](std::size_t i) {
    const std::size_t r = i / per;
    const std::size_t t = i % per;
    const std::uint64_t seed = derive_seed(derive_seed(s.seed, r + 1), t);
    report.trials[i] = montecarlo_trial(s, kAllRelations[r], t, seed);
  });
  report.accuracy = aggregate(report.trials);
  if (!s.negative_control) {
    for (const RelationAccuracy& a : report.accuracy) {
      if (a.becaus_correct != a.trials) {
        report.failures.push_back(std::string(relation_label(a.relation)) + ": " +
                                  std::to_string(a.trials - a.becaus_correct) + " of " +
                                  std::to_string(a.trials) + " trials not classified correctly");
      }
    }
  }
  report.passed = report.failures.empty();
  report.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

ExperimentReport classify_csv(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.mode = ExperimentMode::Classify;
  s.validate();
  const Clock::time_point start = Clock::now();
  const ObservedData data = read_dataset_csv_file(s.csv_path, s.theta_dim, s.psi_dim);
  ExperimentReport report;
  report.spec = s;
  TrialRecord rec;
  rec.T = data.theta.length();
  rec.T_ini = s.T_ini;
  rec.theta_dim = data.theta.dim();
  rec.psi_dim = data.psi.dim();
  run_becaus(rec, data.theta, data.psi, s.T_ini, s.tol);
  report.trials.push_back(std::move(rec));
  report.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

ExperimentReport run_probe_study(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.mode = ExperimentMode::NonlinearProbe;
  s.validate();
  const Clock::time_point start = Clock::now();
  ExperimentReport report;
  report.spec = s;
  report.trials.resize(static_cast<std::size_t>(s.trials));
  parallel_for(report.trials.size(), s.threads,
               [&](std::size_t i) { report.trials[i] = probe_trial(s, i); });
  int correct = 0;
  for (const TrialRecord& t : report.trials) {
    correct += t.probe_correct ? 1 : 0;
    if (!t.error.empty()) {
      report.failures.push_back("trial " + std::to_string(t.index) + ": " + t.error);
    }
  }
  report.probe_accuracy = static_cast<double>(correct) / s.trials;
  report.passed = report.failures.empty();
  report.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  switch (spec.mode) {
    case ExperimentMode::MonteCarlo: return run_montecarlo(spec);
    case ExperimentMode::Classify: return classify_csv(spec);
    case ExperimentMode::NonlinearProbe: return run_probe_study(spec);
    default: {
      ExperimentReport r = run_example(example_number(spec.mode), spec.seed, spec);
      r.spec.mode = spec.mode;
      return r;
    }
  }
}

nlohmann::json to_json(const ExperimentSpec& s) {
  nlohmann::json j = {
      {"mode", std::string(mode_label(s.mode))},
      {"seed", s.seed},
      {"T", s.T},
      {"T_ini", s.T_ini},
      {"tolerances",
       {{"rank_rtol", s.tol.rank_rtol}, {"feasibility_rtol", s.tol.feasibility_rtol}}},
  };
  switch (s.mode) {
    case ExperimentMode::MonteCarlo:
      j["trials"] = s.trials;
      j["T_range"] = {s.T_min, s.T_max};
      j["max_order"] = s.max_order;
      j["negative_control"] = s.negative_control;
      break;
    case ExperimentMode::NonlinearProbe:
      j["trials"] = s.trials;
      j["probe_family"] = std::string(probe_family_label(s.probe_family));
      j["max_order"] = s.max_order;
      j["tanh_order"] = s.tanh_order;
      j["reference"] = s.probe.r;
      break;
    case ExperimentMode::Classify:
      j["csv_path"] = s.csv_path;
      j["theta_dim"] = s.theta_dim;
      j["psi_dim"] = s.psi_dim;
      break;
    default:
      break;
  }
  if (s.mode != ExperimentMode::Classify && s.mode != ExperimentMode::NonlinearProbe) {
    j["granger"] = {{"lag", s.granger.lag},
                    {"max_lag", s.granger.max_lag},
                    {"alpha", s.granger.alpha}};
  }
  return j;
}

nlohmann::json to_json(const TrialRecord& r, bool timings) {
  nlohmann::json j = {
      {"index", r.index},
      {"seed", r.seed},
      {"truth", r.truth ? nlohmann::json(std::string(relation_label(*r.truth)))
                        : nlohmann::json(nullptr)},
      {"order", r.order},
      {"T", r.T},
      {"T_ini", r.T_ini},
      {"theta_dim", r.theta_dim},
      {"psi_dim", r.psi_dim},
  };
  if (r.becaus) {
    j["becaus"] = to_json(*r.becaus);
    if (r.truth) j["becaus_correct"] = r.becaus_correct;
  }
  if (r.granger) {
    j["granger"] = to_json(*r.granger);
    j["granger"]["theta_causes_psi"] = r.granger->theta_causes_psi();
    j["granger"]["psi_causes_theta"] = r.granger->psi_causes_theta();
    if (r.truth) j["granger_correct"] = r.granger_correct;
  }
  if (!r.granger_error.empty()) j["granger_error"] = r.granger_error;
  if (r.probe) {
    j["probe"] = to_json(*r.probe);
    j["probe_correct"] = r.probe_correct;
  }
  if (!r.error.empty()) j["error"] = r.error;
  if (timings) j["timings_ms"] = {{"becaus", r.becaus_ms}, {"granger", r.granger_ms}};
  return j;
}

nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json accuracy = nlohmann::json::array();
  for (const RelationAccuracy& a : r.accuracy) {
    accuracy.push_back({{"relation", std::string(relation_label(a.relation))},
                        {"trials", a.trials},
                        {"becaus_correct", a.becaus_correct},
                        {"becaus_inconclusive", a.becaus_inconclusive},
                        {"becaus_misclassified", a.becaus_misclassified},
                        {"granger_correct", a.granger_correct},
                        {"errors", a.errors},
                        {"becaus_accuracy", a.becaus_accuracy},
                        {"granger_accuracy", a.granger_accuracy}});
  }
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialRecord& t : r.trials) trials.push_back(to_json(t, r.spec.record_timings));
  nlohmann::json j = {
      {"schema_version", 1},
      {"mode", std::string(mode_label(r.spec.mode))},
      {"spec", to_json(r.spec)},
      {"passed", r.passed},
      {"failures", r.failures},
      {"accuracy", accuracy},
      {"trials", trials},
  };
  if (r.probe_accuracy) j["probe_accuracy"] = *r.probe_accuracy;
  if (r.example) {
    const ExampleCheck& e = *r.example;
    nlohmann::json sweep = nlohmann::json::array();
    for (const GrangerLagVerdict& v : e.lag_sweep) {
      nlohmann::json row = {{"lag", v.lag}, {"reproduces_expected", v.reproduces_expected}};
      if (v.error.empty()) {
        row["theta_causes_psi"] = v.theta_causes_psi;
        row["psi_causes_theta"] = v.psi_causes_theta;
      } else {
        row["error"] = v.error;
      }
      sweep.push_back(row);
    }
    j["example"] = {{"number", e.example},
                    {"expected_relation", std::string(relation_label(e.expected_relation))},
                    {"expected_granger", e.expected_granger},
                    {"becaus_matches", e.becaus_matches},
                    {"granger_matches", e.granger_matches},
                    {"granger_lag_sweep", sweep}};
  }
  if (r.spec.record_timings) j["elapsed_seconds"] = r.elapsed_seconds;
  return j;
}

void write_trials_csv(std::ostream& os, const ExperimentReport& r) {
  const bool timings = r.spec.record_timings;
  os << "mode,index,seed,truth,order,T,T_ini,theta_dim,psi_dim,becaus_relation,t1,t2,t3,t4,"
        "becaus_correct,granger_theta_to_psi,granger_psi_to_theta,granger_correct,"
        "probe_ratio_psi,probe_ratio_theta,probe_inferred,probe_correct,error";
  if (timings) os << ",becaus_ms,granger_ms";
  os << '\n';
  auto flag = [](bool b) { return b ? "1" : "0"; };
  for (const TrialRecord& t : r.trials) {
    os << mode_label(r.spec.mode) << ',' << t.index << ',' << t.seed << ','
       << (t.truth ? relation_label(*t.truth) : "") << ',' << t.order << ',' << t.T << ','
       << t.T_ini << ',' << t.theta_dim << ',' << t.psi_dim << ',';
    if (t.becaus) {
      const TestVerdicts& v = t.becaus->tests;
      os << relation_label(t.becaus->relation) << ',' << flag(v.t1) << ',' << flag(v.t2) << ','
         << flag(v.t3) << ',' << flag(v.t4) << ',' << (t.truth ? flag(t.becaus_correct) : "");
    } else {
      os << ",,,,,";
    }
    os << ',';
    if (t.granger) {
      os << flag(t.granger->theta_causes_psi()) << ',' << flag(t.granger->psi_causes_theta())
         << ',' << (t.truth ? flag(t.granger_correct) : "");
    } else {
      os << ",,";
    }
    os << ',';
    if (t.probe) {
      os << csv_number(t.probe->ratio_psi) << ',' << csv_number(t.probe->ratio_theta) << ','
         << probe_input_label(t.probe->inferred_input) << ',' << flag(t.probe_correct);
    } else {
      os << ",,,";
    }
    std::string error = t.error;
    if (error.empty() && !t.granger_error.empty()) error = "granger: " + t.granger_error;
    os << ',' << csv_field(error);
    if (timings) os << ',' << csv_number(t.becaus_ms) << ',' << csv_number(t.granger_ms);
    os << '\n';
  }
}

}  // namespace becaus
