#include "becaus/data_gen.hpp"

#include "becaus/error.hpp"
#include "becaus/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace becaus {

namespace {

enum Stream : std::uint64_t { kThetaStream = 1, kPsiStream = 2, kLatentStream = 3 };

TimeSeries draw_iid(Eigen::Index dim, Eigen::Index T, UniformRange range,
                    std::uint64_t seed, Stream stream) {
  Rng rng(derive_seed(seed, stream));
  TimeSeries out(dim, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < dim; ++i) out(i, t) = rng.uniform(range.lo, range.hi);
  }
  return out;
}

Vector default_x0(Eigen::Index n) {
  Vector x = Vector::Zero(n);
  if (n > 0) x(0) = 1.0;
  return x;
}

std::uint64_t attempt_seed(std::uint64_t seed, int attempt) {
  return attempt == 0 ? seed : derive_seed(seed, 1000 + static_cast<std::uint64_t>(attempt));
}

LabeledDataset draw_dataset(const CausalScenario& scenario,
                            const std::optional<LtiSystem>& sys, Eigen::Index T,
                            std::uint64_t seed, const GenerateOptions& opts) {
  const InputDistributions& dist = opts.distributions;
  LabeledDataset d;
  d.truth = scenario;
  d.sys = sys;
  d.T = T;
  d.seed = seed;

  if (!sys) {
    if (scenario.relation != Relation::Independence ||
        opts.independence_mode != IndependenceMode::IndependentStreams) {
      throw InputError("a system is required unless generating independent streams");
    }
    d.theta = draw_iid(opts.theta_dim, T, dist.theta, seed, kThetaStream);
    d.psi = draw_iid(opts.psi_dim, T, dist.psi, seed, kPsiStream);
    return d;
  }

  const LtiSystem& s = *sys;
  s.validate();
  const Eigen::Index k = s.input_dim();
  const Eigen::Index split = s.input_split;
  d.x0 = opts.x0 ? *opts.x0 : default_x0(s.order());

  TimeSeries u;
  switch (scenario.relation) {
    case Relation::Independence: {
      d.theta = draw_iid(split, T, dist.theta, seed, kThetaStream);
      d.psi = draw_iid(k - split, T, dist.psi, seed, kPsiStream);
      u = TimeSeries::stack({&d.theta, &d.psi});
      break;
    }
    case Relation::ThetaCausesPsi:
      d.theta = draw_iid(k, T, dist.theta, seed, kThetaStream);
      u = d.theta;
      break;
    case Relation::PsiCausesTheta:
      d.psi = draw_iid(k, T, dist.psi, seed, kPsiStream);
      u = d.psi;
      break;
    case Relation::ThetaPartiallyCausesPsi: {
      d.theta = draw_iid(split, T, dist.theta, seed, kThetaStream);
      TimeSeries v = draw_iid(k - split, T, dist.latent, seed, kLatentStream);
      u = TimeSeries::stack({&d.theta, &v});
      d.latent = std::move(v);
      break;
    }
    case Relation::PsiPartiallyCausesTheta: {
      d.psi = draw_iid(split, T, dist.psi, seed, kPsiStream);
      TimeSeries v = draw_iid(k - split, T, dist.latent, seed, kLatentStream);
      u = TimeSeries::stack({&d.psi, &v});
      d.latent = std::move(v);
      break;
    }
    case Relation::LatentCommonCause:
      d.latent = draw_iid(k, T, dist.latent, seed, kLatentStream);
      u = *d.latent;
      break;
    case Relation::Inconclusive:
      throw InputError("cannot generate data for Inconclusive");
  }

  const Simulation sim = simulate(s, u, d.x0, T);
  switch (scenario.relation) {
    case Relation::Independence:
      d.latent = sim.y;
      break;
    case Relation::ThetaCausesPsi:
    case Relation::ThetaPartiallyCausesPsi:
      d.psi = sim.y;
      break;
    case Relation::PsiCausesTheta:
    case Relation::PsiPartiallyCausesTheta:
      d.theta = sim.y;
      break;
    case Relation::LatentCommonCause:
      d.theta = sim.y.components(0, s.output_split);
      d.psi = sim.y.components(s.output_split, s.output_dim() - s.output_split);
      break;
    case Relation::Inconclusive:
      break;
  }
  return d;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

LabeledDataset generate(const CausalScenario& scenario,
                        const std::optional<LtiSystem>& sys, Eigen::Index T,
                        std::uint64_t seed, const GenerateOptions& opts) {
  opts.tol.validate();
  if (T < 1) throw LengthError("horizon T must be positive");

  Eigen::Index t_ini = opts.T_ini;
  if (t_ini == 0) t_ini = (sys ? compute_lag(*sys, opts.tol) : 1) + 1;
  if (T < t_ini + 2) {
    throw LengthError("T = " + std::to_string(T) + " is too short for T_ini = " +
                      std::to_string(t_ini));
  }

  IdentifiabilityReport last;
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    LabeledDataset d = draw_dataset(scenario, sys, T, attempt_seed(seed, attempt), opts);
    d.T_ini = t_ini;
    d.requested_seed = seed;
    last = check_identifiable(d, opts.tol);
    if (last.identifiable) return d;
  }
  throw IdentifiabilityError(
      "data for " + std::string(relation_label(scenario.relation)) +
      " failed the identifiability rank condition (rank " + std::to_string(last.rank) +
      ", expected " + std::to_string(last.expected) + ") after " +
      std::to_string(opts.max_attempts) + " attempts");
}

TimeSeries system_inputs(const LabeledDataset& d) {
  switch (d.truth.relation) {
    case Relation::Independence:
      return TimeSeries::stack({&d.theta, &d.psi});
    case Relation::ThetaCausesPsi:
      return d.theta;
    case Relation::PsiCausesTheta:
      return d.psi;
    case Relation::ThetaPartiallyCausesPsi:
      return TimeSeries::stack({&d.theta, &*d.latent});
    case Relation::PsiPartiallyCausesTheta:
      return TimeSeries::stack({&d.psi, &*d.latent});
    case Relation::LatentCommonCause:
      return *d.latent;
    case Relation::Inconclusive:
      break;
  }
  throw InputError("dataset has no scenario");
}

TimeSeries system_outputs(const LabeledDataset& d) {
  switch (d.truth.relation) {
    case Relation::Independence:
      return d.latent ? *d.latent : TimeSeries{};
    case Relation::ThetaCausesPsi:
    case Relation::ThetaPartiallyCausesPsi:
      return d.psi;
    case Relation::PsiCausesTheta:
    case Relation::PsiPartiallyCausesTheta:
      return d.theta;
    case Relation::LatentCommonCause:
      return TimeSeries::stack({&d.theta, &d.psi});
    case Relation::Inconclusive:
      break;
  }
  throw InputError("dataset has no scenario");
}

SystemStructure layout_for(Relation rel, Eigen::Index order, const ScenarioDims& dims) {
  if (dims.theta < 1 || dims.psi < 1 || dims.latent < 0) {
    throw DimensionError("scenario dimensions must be positive");
  }
  SystemStructure st;
  st.order = order;
  switch (rel) {
    case Relation::Independence:
      st.input_dim = dims.theta + dims.psi;
      st.input_split = dims.theta;
      st.output_dim = std::max<Eigen::Index>(1, dims.latent);
      break;
    case Relation::ThetaCausesPsi:
      st.input_dim = dims.theta;
      st.output_dim = dims.psi;
      break;
    case Relation::PsiCausesTheta:
      st.input_dim = dims.psi;
      st.output_dim = dims.theta;
      break;
    case Relation::ThetaPartiallyCausesPsi:
      st.input_dim = dims.theta + dims.latent;
      st.input_split = dims.theta;
      st.output_dim = dims.psi;
      break;
    case Relation::PsiPartiallyCausesTheta:
      st.input_dim = dims.psi + dims.latent;
      st.input_split = dims.psi;
      st.output_dim = dims.theta;
      break;
    case Relation::LatentCommonCause:
      st.input_dim = dims.latent;
      st.output_dim = dims.theta + dims.psi;
      st.output_split = dims.theta;
      break;
    case Relation::Inconclusive:
      throw InputError("no layout for Inconclusive");
  }
  if (has_latent(rel) && dims.latent < 1) {
    throw DimensionError("scenario needs a latent input");
  }
  return st;
}

ScenarioDims minimal_dims(Relation rel) {
  switch (rel) {
    case Relation::ThetaPartiallyCausesPsi: return {1, 2, 1};
    case Relation::PsiPartiallyCausesTheta: return {2, 1, 1};
    case Relation::LatentCommonCause: return {2, 2, 1};
    default: return {1, 1, 1};
  }
}

IdentifiabilityReport hankel_rank_condition(const TimeSeries& w, Eigen::Index k,
                                            Eigen::Index n, Eigen::Index depth,
                                            const ToleranceConfig& tol) {
  IdentifiabilityReport r;
  r.depth = depth;
  r.expected = static_cast<int>(k * depth + n);
  if (w.length() < depth) return r;
  r.rank = numerical_rank(build_hankel(w, depth), tol);
  r.identifiable = r.rank == r.expected;
  return r;
}

IdentifiabilityReport check_identifiable(const LabeledDataset& d,
                                         const ToleranceConfig& tol) {
  const Eigen::Index depth = d.T_ini + 2;
  if (!d.sys) {
    const TimeSeries w = TimeSeries::stack({&d.theta, &d.psi});
    return hankel_rank_condition(w, w.dim(), 0, depth, tol);
  }
  const Eigen::Index k = d.sys->input_dim();
  const Eigen::Index n = d.sys->order();
  if (d.truth.structure() == Structure::FullCausality || !d.latent) {
    return hankel_rank_condition(TimeSeries::stack({&d.theta, &d.psi}), k, n, depth,
                                 tol);
  }
  return hankel_rank_condition(TimeSeries::stack({&d.theta, &d.psi, &*d.latent}), k, n,
                               depth, tol);
}

void write_dataset_csv(std::ostream& os, const TimeSeries& theta,
                       const TimeSeries& psi) {
  if (theta.length() != psi.length()) {
    throw DimensionError("theta and psi have different lengths");
  }
  std::string header;
  for (Eigen::Index i = 0; i < theta.dim(); ++i) {
    header += (header.empty() ? "" : ",") + std::string("theta_") + std::to_string(i);
  }
  for (Eigen::Index i = 0; i < psi.dim(); ++i) {
    header += (header.empty() ? "" : ",") + std::string("psi_") + std::to_string(i);
  }
  os << header << '\n';
  for (Eigen::Index t = 0; t < theta.length(); ++t) {
    std::string row;
    for (Eigen::Index i = 0; i < theta.dim(); ++i) {
      if (!row.empty()) row += ',';
      row += format_double(theta(i, t));
    }
    for (Eigen::Index i = 0; i < psi.dim(); ++i) {
      if (!row.empty()) row += ',';
      row += format_double(psi(i, t));
    }
    os << row << '\n';
  }
}

std::string dataset_csv(const LabeledDataset& d) {
  std::ostringstream os;
  write_dataset_csv(os, d.theta, d.psi);
  return os.str();
}

ObservedData read_dataset_csv(std::istream& is, Eigen::Index theta_dim,
                              Eigen::Index psi_dim) {
  if (theta_dim < 1 || psi_dim < 1) {
    throw DimensionError("theta and psi dimensions must be positive");
  }
  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
  };

  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split(line);
    if (!have_header) {
      have_header = true;
      columns = fields.size();
      const auto wanted = static_cast<std::size_t>(theta_dim + psi_dim);
      if (wanted != columns) {
        throw DimensionError("declared dimensions " + std::to_string(theta_dim) + "+" +
                             std::to_string(psi_dim) + " do not match the " +
                             std::to_string(columns) + " columns in the header");
      }
      continue;
    }
    if (fields.size() != columns) {
      throw ParseError("row " + std::to_string(line_no) + " has " +
                           std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(columns),
                       line_no);
    }
    std::vector<double> values(columns);
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string& f = fields[c];
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      const bool blank_tail =
          end != f.c_str() && std::string_view(end).find_first_not_of(" \t") ==
                                  std::string_view::npos;
      if (f.empty() || !blank_tail || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(line_no) + ", column " +
                             std::to_string(c + 1) + ": '" + f + "' is not a finite number",
                         line_no, c + 1);
      }
      values[c] = v;
    }
    rows.push_back(std::move(values));
  }
  if (!have_header) throw ParseError("dataset file is empty", line_no);

  const TimeSeries all = TimeSeries::from_samples(rows);
  if (rows.empty()) {
    return ObservedData{TimeSeries(theta_dim, 0), TimeSeries(psi_dim, 0)};
  }
  return ObservedData{all.components(0, theta_dim), all.components(theta_dim, psi_dim)};
}

ObservedData read_dataset_csv_file(const std::string& path, Eigen::Index theta_dim,
                                   Eigen::Index psi_dim) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset file '" + path + "'");
  return read_dataset_csv(in, theta_dim, psi_dim);
}

nlohmann::json dataset_sidecar(const LabeledDataset& d) {
  nlohmann::json j;
  j["format"] = "becaus-dataset";
  j["version"] = 1;
  j["truth"] = std::string(relation_label(d.truth.relation));
  j["structure"] = std::string(structure_label(d.truth.structure()));
  j["T"] = d.T;
  j["T_ini"] = d.T_ini;
  j["seed"] = d.seed;
  j["requested_seed"] = d.requested_seed;
  j["theta_dim"] = d.theta.dim();
  j["psi_dim"] = d.psi.dim();
  j["latent_dim"] = d.latent ? d.latent->dim() : 0;
  j["system"] = d.sys ? nlohmann::json(serialize_system(*d.sys)) : nlohmann::json(nullptr);
  j["x0"] = std::vector<double>(d.x0.data(), d.x0.data() + d.x0.size());
  return j;
}

void export_dataset(const LabeledDataset& d, const std::string& stem) {
  {
    std::ofstream csv(stem + ".csv", std::ios::binary);
    if (!csv) throw InputError("cannot write '" + stem + ".csv'");
    write_dataset_csv(csv, d.theta, d.psi);
  }
  nlohmann::json side = dataset_sidecar(d);
  const auto slash = stem.find_last_of('/');
  side["csv"] = (slash == std::string::npos ? stem : stem.substr(slash + 1)) + ".csv";
  std::ofstream js(stem + ".json", std::ios::binary);
  if (!js) throw InputError("cannot write '" + stem + ".json'");
  js << side.dump(2) << '\n';
}

}  // namespace becaus
