#include "becaus/error.hpp"
#include "becaus/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitAssertion = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumerical = 4;

void print_summary(std::ostream& os, const becaus::ExperimentReport& r) {
  os << becaus::mode_label(r.spec.mode) << ": " << (r.passed ? "passed" : "FAILED") << '\n';
  if (r.spec.mode == becaus::ExperimentMode::Classify && !r.trials.empty() &&
      r.trials.front().becaus) {
    const becaus::BeCausOutcome& o = *r.trials.front().becaus;
    os << "relation " << becaus::relation_label(o.relation) << " (tests " << o.tests.t1
       << o.tests.t2 << o.tests.t3 << o.tests.t4 << ")\n";
  }
  for (const becaus::RelationAccuracy& a : r.accuracy) {
    os << becaus::relation_label(a.relation) << ": becaus " << a.becaus_correct << '/'
       << a.trials << ", granger " << a.granger_correct << '/' << a.trials << '\n';
  }
  if (r.probe_accuracy) os << "probe accuracy " << *r.probe_accuracy << '\n';
  for (const std::string& f : r.failures) os << "failure: " << f << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mechanistic causality discovery on recorded time series"};
  becaus::ExperimentSpec spec;
  std::string mode = "example1";
  std::string format = "json";
  std::string out;
  std::string family = "tanh";

  app.add_option("--mode", mode, "example1..example4, montecarlo, classify, nonlinear_probe")
      ->required();
  app.add_option("--seed", spec.seed, "Base seed")->envname("BECAUS_SEED");
  app.add_option("--trials", spec.trials, "Trials per relation (montecarlo) or probe trials");
  app.add_option("--T", spec.T, "Horizon; 0 draws T per trial in montecarlo mode");
  app.add_option("--Tini", spec.T_ini, "Initial window length; 0 selects the default");
  app.add_option("--rank-rtol", spec.tol.rank_rtol, "Relative numerical-rank tolerance");
  app.add_option("--out", out, "Report path; stdout when omitted");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--csv", spec.csv_path, "Dataset to classify");
  app.add_option("--theta-dim", spec.theta_dim, "Leading CSV columns holding theta");
  app.add_option("--psi-dim", spec.psi_dim, "CSV columns holding psi");
  app.add_flag("--negative-control", spec.negative_control,
               "Draw non-discoverable systems in montecarlo mode");
  app.add_option("--probe-family", family, "tanh or lti")
      ->check(CLI::IsMember({"tanh", "lti"}));
  app.add_option("--threads", spec.threads, "Worker threads; 0 uses all cores");
  app.add_flag("--timings", spec.record_timings, "Record wall-clock timings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    spec.mode = becaus::parse_mode(mode);
    spec.probe_family = becaus::parse_probe_family(family);
    const becaus::ExperimentReport report = becaus::run_experiment(spec);

    std::ostringstream body;
    if (format == "csv") {
      becaus::write_trials_csv(body, report);
    } else {
      body << becaus::to_json(report).dump(2) << '\n';
    }
    if (out.empty()) {
      std::cout << body.str();
    } else {
      std::ofstream file(out, std::ios::binary);
      if (!file) throw becaus::InputError("cannot open '" + out + "' for writing");
      file << body.str();
      if (!file) throw becaus::InputError("failed writing '" + out + "'");
    }
    print_summary(std::cerr, report);
    return report.passed ? kExitSuccess : kExitAssertion;
  } catch (const becaus::ParseError& e) {
    std::cerr << "parse error at line " << e.line();
    if (e.column() > 0) std::cerr << ", column " << e.column();
    std::cerr << ": " << e.what() << '\n';
    return kExitInput;
  } catch (const becaus::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const becaus::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
