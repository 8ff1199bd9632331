// contactotherm: exponential-family thermodynamics on the contact phase
// space. Subcommands cover the metric routes, the reparametrization
// invariance checks, Legendre/contact verification, maxent inversion,
// fluctuation sampling, Ruppeiner consistency and scalar curvature.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cth/ensemble.hpp"
#include "cth/exterior.hpp"
#include "cth/maxent.hpp"
#include "cth/phase_space.hpp"
#include "cth/report.hpp"
#include "cth/rng.hpp"

using namespace cth;

namespace {

struct VerificationFailed {}; // print the report, exit 2

// ---------------------------------------------------------------- parsing

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("malformed " + what + ": '" + s + "'");
  }
}

std::vector<double> parse_point(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const std::string& part : split(s, ','))
    out.push_back(parse_number(part, what));
  return out;
}

struct ModelSpec {
  std::string name;
  std::map<std::string, double> params;
  std::string path; // file-backed models
};

ModelSpec parse_model_spec(const std::string& text) {
  ModelSpec spec;
  if (text.size() > 5 && text.substr(text.size() - 5) == ".json") {
    spec.name = "file";
    spec.path = text;
    return spec;
  }
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (colon != std::string::npos) {
    for (const std::string& kv : split(text.substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw InvalidArgument("malformed model parameter '" + kv +
                              "' (expected key=value)");
      spec.params[kv.substr(0, eq)] = parse_number(kv.substr(eq + 1), "model parameter");
    }
  }
  return spec;
}

double param_or(const ModelSpec& spec, const std::string& key, double fallback) {
  const auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

Ensemble build_model(const std::string& text) {
  const ModelSpec spec = parse_model_spec(text);
  if (spec.name == "file") return ensemble_from_json_file(spec.path);
  if (spec.name == "two_level") return two_level(param_or(spec, "eps", 2.0));
  if (spec.name == "ising_ring")
    return ising_ring(static_cast<int>(param_or(spec, "N", 4)), param_or(spec, "J", 1.0),
                      param_or(spec, "h", 0.0));
  if (spec.name == "quadratic") {
    const int n = static_cast<int>(param_or(spec, "n", 1));
    if (n < 1 || n > 8) throw InvalidArgument("quadratic: n must be in [1, 8]");
    SymMat c(n);
    if (n == 1) {
      c.at(0, 0) = param_or(spec, "c", 1.0);
    } else {
      const double diag = param_or(spec, "c", 2.0);
      for (int i = 0; i < n; ++i) c.at(i, i) = diag;
      for (int i = 0; i + 1 < n; ++i) c.at(i, i + 1) = 1.0;
    }
    return quadratic(c, std::vector<double>(n, param_or(spec, "b", 0.0)));
  }
  throw InvalidArgument("unknown model '" + spec.name +
                        "' (see `contactotherm models list`)");
}

Report model_report(const Ensemble& ens) {
  Report m = Report::object();
  m.set("name", ens.model_name());
  Report params = Report::object();
  for (const auto& [k, v] : ens.model_params()) params.set(k, v);
  m.set("params", std::move(params));
  m.set("n", ens.n());
  Report names = Report::array();
  for (const auto& name : ens.names()) names.push(Report::string(name));
  m.set("names", std::move(names));
  return m;
}

Reparametrization load_reparametrization(const std::string& text, int n) {
  if (!text.empty() && text.front() == '{')
    return Reparametrization::from_json_text(text, n);
  return Reparametrization::from_json_file(text, n);
}

// ----------------------------------------------------------------- output

struct Output {
  Report json = Report::object();
  std::optional<CsvWriter> csv;
  bool pass_known = false;
  bool passed = true;
};

void emit(const Output& out, const std::string& format) {
  if (format == "csv" && out.csv)
    std::cout << out.csv->str();
  else
    std::cout << out.json.dump() << "\n";
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// ------------------------------------------------------------- subcommands

struct CommonArgs {
  std::string model;
  std::string format = "json";
  unsigned threads = 1;
  std::uint64_t seed = 0;
  double tol = 0.0; // 0 = per-command default
};

Output run_metric(const CommonArgs& common, const std::string& at_text,
                  const std::string& reparam_text) {
  const Ensemble ens = build_model(common.model);
  const std::vector<double> at = parse_point(at_text, "point");
  const Reparametrization rep = reparam_text.empty()
                                    ? Reparametrization::identity(ens.n())
                                    : load_reparametrization(reparam_text, ens.n());
  const double tol = common.tol > 0 ? common.tol : 1e-9;
  const InvarianceReport chain = verify_invariance_chain(ens, at, rep, tol, common.threads);

  Output out;
  out.json.set("command", "metric");
  out.json.set("model", model_report(ens));
  Report results = Report::object();
  results.set("at", Report::vector(at));
  results.set("hessian", Report::matrix(chain.hessian));
  if (chain.covariance) results.set("covariance", Report::matrix(*chain.covariance));
  results.set("pullback_G1", Report::matrix(chain.pullback_G1));
  results.set("pullback_G2", Report::matrix(chain.pullback_G2));
  results.set("pullback_t1", Report::matrix(chain.pullback_t1));
  results.set("pullback_t2", Report::matrix(chain.pullback_t2));
  Report deltas = Report::object();
  for (const auto& [label, d] : chain.pairwise_deltas) deltas.set(label, d);
  results.set("deltas", std::move(deltas));
  out.json.set("results", std::move(results));
  out.json.set("pass", chain.pass);
  out.json.set("max_delta", chain.max_delta);
  Report tols = Report::object();
  tols.set("metric_agreement", tol);
  out.json.set("tolerances", std::move(tols));

  std::vector<std::string> header{"max_delta", "pass"};
  for (int a = 0; a < ens.n(); ++a) header.insert(header.begin() + a, "I" + std::to_string(a + 1));
  for (int i = 0; i < ens.n(); ++i)
    for (int j = 0; j <= i; ++j)
      header.push_back("g" + std::to_string(i + 1) + std::to_string(j + 1));
  CsvWriter csv(header);
  std::vector<double> row(at.begin(), at.end());
  row.push_back(chain.max_delta);
  row.push_back(chain.pass ? 1.0 : 0.0);
  for (int i = 0; i < ens.n(); ++i)
    for (int j = 0; j <= i; ++j) row.push_back(chain.hessian(i, j));
  csv.row(row);
  out.csv = std::move(csv);

  out.pass_known = true;
  out.passed = chain.pass;
  return out;
}

Output run_verify_invariance(const CommonArgs& common, const std::string& reparam_text,
                             int points) {
  const Ensemble ens = build_model(common.model);
  const int n = ens.n();
  const double tol = common.tol > 0 ? common.tol : 1e-9;
  const double first_law_tol = 1e-12;
  std::optional<Reparametrization> fixed_rep;
  if (!reparam_text.empty()) fixed_rep = load_reparametrization(reparam_text, n);

  double max_delta = 0.0, fl1 = 0.0, fl2 = 0.0;
  Report per_point = Report::array();
  CsvWriter csv([&] {
    std::vector<std::string> h;
    for (int a = 0; a < n; ++a) h.push_back("I" + std::to_string(a + 1));
    h.push_back("det_lambda");
    h.push_back("max_delta");
    h.push_back("first_law_eta1");
    h.push_back("first_law_eta2");
    return h;
  }());

  for (int k = 0; k < points; ++k) {
    Rng rng = Rng::for_task(common.seed, k);
    std::vector<double> at(n);
    for (double& x : at) x = rng.uniform(-1.0, 1.0);
    const Reparametrization rep =
        fixed_rep ? *fixed_rep : sample_reparametrization(rng, n);
    const InvarianceReport r = verify_invariance_chain(ens, at, rep, tol, common.threads);
    max_delta = std::max(max_delta, r.max_delta);
    fl1 = std::max(fl1, r.first_law_eta1);
    fl2 = std::max(fl2, r.first_law_eta2);

    Report p = Report::object();
    p.set("I", Report::vector(at));
    p.set("det_lambda", r.det_lambda);
    p.set("max_delta", r.max_delta);
    p.set("first_law_eta1", r.first_law_eta1);
    p.set("first_law_eta2", r.first_law_eta2);
    per_point.push(std::move(p));

    std::vector<double> row(at.begin(), at.end());
    row.push_back(r.det_lambda);
    row.push_back(r.max_delta);
    row.push_back(r.first_law_eta1);
    row.push_back(r.first_law_eta2);
    csv.row(row);
  }

  const bool pass = max_delta <= tol && fl1 <= first_law_tol && fl2 <= first_law_tol;
  Output out;
  out.json.set("command", "verify invariance");
  out.json.set("model", model_report(ens));
  Report results = Report::object();
  results.set("points", points);
  results.set("reparametrization", fixed_rep ? "file" : "sampled");
  results.set("first_law_eta1_max", fl1);
  results.set("first_law_eta2_max", fl2);
  results.set("per_point", std::move(per_point));
  out.json.set("results", std::move(results));
  out.json.set("pass", pass);
  out.json.set("max_delta", max_delta);
  Report tols = Report::object();
  tols.set("invariance", tol);
  tols.set("first_law", first_law_tol);
  out.json.set("tolerances", std::move(tols));
  out.json.set("seed", static_cast<long long>(common.seed));
  out.csv = std::move(csv);
  out.pass_known = true;
  out.passed = pass;
  return out;
}

Output run_verify_contact(const CommonArgs& common, int points) {
  const Ensemble ens = build_model(common.model);
  const int n = ens.n();
  if (n > 5)
    throw InvalidArgument("verify contact: form-level checks support n <= 5");
  const double floor_factor = 0.5;
  const double nfact = factorial(n);

  double min_vol1 = 1e300, min_vol2 = 1e300, max_formula_dev = 0.0;
  Report per_point = Report::array();
  CsvWriter csv({"volume_eta1", "volume_eta2", "det_lambda", "det_e"});
  bool pass = true;

  const CoefficientField field1 = eta1_field(n);
  for (int k = 0; k < points; ++k) {
    Rng rng = Rng::for_task(common.seed, k);
    std::vector<double> coords(2 * n + 1);
    for (double& x : coords) x = rng.uniform(-1.5, 1.5);
    const PhasePoint p = PhasePoint::from_coords(coords);

    RepDrawOptions opts;
    opts.dual_scale_e = true;
    opts.i_hint = p.I;
    const Reparametrization rep = sample_reparametrization(rng, n, opts);

    const double vol1 = nonintegrability_volume(field1, coords, n);
    const double vol2 = nonintegrability_volume(eta2_field(rep), coords, n);
    const double det_lam = det(rep.i_jacobian(p.I));
    const double det_e = det(rep.e_jacobian(p.E));
    min_vol1 = std::min(min_vol1, std::abs(vol1));
    const double expected2 = nfact * std::abs(det_lam * det_e);
    max_formula_dev = std::max(max_formula_dev,
                               std::abs(std::abs(vol2) - expected2) /
                                   std::max(1.0, expected2));
    if (std::abs(vol1) < floor_factor * nfact) pass = false;
    if (std::abs(det_lam) >= 0.1) {
      min_vol2 = std::min(min_vol2, std::abs(vol2));
      if (std::abs(vol2) < floor_factor * nfact) pass = false;
    }

    Report pr = Report::object();
    pr.set("volume_eta1", vol1);
    pr.set("volume_eta2", vol2);
    pr.set("det_lambda", det_lam);
    pr.set("det_e", det_e);
    per_point.push(std::move(pr));
    const std::vector<double> row{vol1, vol2, det_lam, det_e};
    csv.row(row);
  }
  if (max_formula_dev > 1e-9) pass = false;

  Output out;
  out.json.set("command", "verify contact");
  out.json.set("model", model_report(ens));
  Report results = Report::object();
  results.set("points", points);
  results.set("n_factorial", nfact);
  results.set("min_abs_volume_eta1", min_vol1);
  results.set("min_abs_volume_eta2", min_vol2 == 1e300 ? 0.0 : min_vol2);
  results.set("max_volume_formula_deviation", max_formula_dev);
  results.set("per_point", std::move(per_point));
  out.json.set("results", std::move(results));
  out.json.set("pass", pass);
  Report tols = Report::object();
  tols.set("min_volume_factor", floor_factor);
  tols.set("volume_formula", 1e-9);
  out.json.set("tolerances", std::move(tols));
  out.json.set("seed", static_cast<long long>(common.seed));
  out.csv = std::move(csv);
  out.pass_known = true;
  out.passed = pass;
  return out;
}

Output run_verify_legendre(const CommonArgs& common, int points) {
  const Ensemble ens = build_model(common.model);
  const int n = ens.n();
  if (n > 8) throw InvalidArgument("verify legendre: supports n <= 8");
  const double tol = common.tol > 0 ? common.tol : 1e-12;

  double max_dev = 0.0;
  Report per_partition = Report::array();
  CsvWriter csv({"partition_mask", "max_deviation"});
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const LegendrePartition part = LegendrePartition::subset(n, mask);
    double dev = 0.0;
    for (int k = 0; k < points; ++k) {
      Rng rng = Rng::for_task(common.seed ^ (0x9e37u + mask), k);
      std::vector<double> E(n), I(n);
      for (double& x : E) x = rng.uniform(-2.0, 2.0);
      for (double& x : I) x = rng.uniform(-2.0, 2.0);
      const PhasePoint p(rng.uniform(-1.0, 1.0), E, I);
      dev = std::max(dev, legendre_contact_deviation(p, part));
    }
    max_dev = std::max(max_dev, dev);
    Report pr = Report::object();
    pr.set("partition_mask", static_cast<long long>(mask));
    pr.set("max_deviation", dev);
    per_partition.push(std::move(pr));
    const std::vector<double> row{static_cast<double>(mask), dev};
    csv.row(row);
  }

  const bool pass = max_dev <= tol;
  Output out;
  out.json.set("command", "verify legendre");
  out.json.set("model", model_report(ens));
  Report results = Report::object();
  results.set("points", points);
  results.set("partitions", static_cast<long long>(1u << n));
  results.set("per_partition", std::move(per_partition));
  out.json.set("results", std::move(results));
  out.json.set("pass", pass);
  out.json.set("max_delta", max_dev);
  Report tols = Report::object();
  tols.set("contact_invariance", tol);
  out.json.set("tolerances", std::move(tols));
  out.json.set("seed", static_cast<long long>(common.seed));
  out.csv = std::move(csv);
  out.pass_known = true;
  out.passed = pass;
  return out;
}

Output run_maxent(const CommonArgs& common, const std::string& targets_text) {
  const Ensemble ens = build_model(common.model);
  MaxEntProblem problem{ens, parse_point(targets_text, "target")};
  const MaxEntSolution sol = solve(problem);

  Output out;
  out.json.set("command", "maxent");
  out.json.set("model", model_report(ens));
  Report results = Report::object();
  results.set("targets", Report::vector(problem.targets));
  results.set("I", Report::vector(sol.I));
  results.set("phi", sol.phi);
  results.set("entropy", sol.entropy);
  results.set("iterations", sol.iterations);
  results.set("residual", sol.residual);
  out.json.set("results", std::move(results));
  Report tols = Report::object();
  tols.set("residual", problem.tol);
  out.json.set("tolerances", std::move(tols));

  std::vector<std::string> header;
  for (int a = 0; a < ens.n(); ++a) header.push_back("I" + std::to_string(a + 1));
  header.push_back("phi");
  header.push_back("entropy");
  header.push_back("iterations");
  header.push_back("residual");
  CsvWriter csv(header);
  std::vector<double> row(sol.I.begin(), sol.I.end());
  row.push_back(sol.phi);
  row.push_back(sol.entropy);
  row.push_back(sol.iterations);
  row.push_back(sol.residual);
  csv.row(row);
  out.csv = std::move(csv);
  return out;
}

Output run_sample(const CommonArgs& common, const std::string& at_text,
                  std::size_t samples) {
  const Ensemble ens = build_model(common.model);
  const std::vector<double> at = parse_point(at_text, "point");
  const McCovariance mc = mc_covariance(ens, at, samples, common.seed, common.threads);

  Output out;
  out.json.set("command", "sample");
  out.json.set("model", model_report(ens));
  Report results = Report::object();
  results.set("at", Report::vector(at));
  results.set("samples", mc.samples);
  results.set("covariance", Report::matrix(mc.covariance));
  results.set("std_error", Report::matrix(mc.std_error));
  out.json.set("results", std::move(results));
  out.json.set("tolerances", Report::object());
  out.json.set("seed", static_cast<long long>(common.seed));

  std::vector<std::string> header;
  for (int i = 0; i < ens.n(); ++i)
    for (int j = 0; j <= i; ++j) {
      header.push_back("cov" + std::to_string(i + 1) + std::to_string(j + 1));
      header.push_back("se" + std::to_string(i + 1) + std::to_string(j + 1));
    }
  CsvWriter csv(header);
  std::vector<double> row;
  for (int i = 0; i < ens.n(); ++i)
    for (int j = 0; j <= i; ++j) {
      row.push_back(mc.covariance(i, j));
      row.push_back(mc.std_error(i, j));
    }
  csv.row(row);
  out.csv = std::move(csv);
  return out;
}

Output run_curvature(const CommonArgs& common, const std::string& at_text) {
  const Ensemble ens = build_model(common.model);
  const std::vector<double> at = parse_point(at_text, "point");
  const double r = curvature_scalar(ens, at, common.threads);

  Output out;
  out.json.set("command", "curvature");
  out.json.set("model", model_report(ens));
  Report results = Report::object();
  results.set("at", Report::vector(at));
  results.set("scalar_curvature", r);
  out.json.set("results", std::move(results));
  out.json.set("tolerances", Report::object());

  std::vector<std::string> header;
  for (int a = 0; a < ens.n(); ++a) header.push_back("I" + std::to_string(a + 1));
  header.push_back("scalar_curvature");
  CsvWriter csv(header);
  std::vector<double> row(at.begin(), at.end());
  row.push_back(r);
  csv.row(row);
  out.csv = std::move(csv);
  return out;
}

Output run_ruppeiner(const CommonArgs& common, const std::string& grid_text) {
  const Ensemble ens = build_model(common.model);
  const auto parts = split(grid_text, ':');
  if (parts.size() != 3)
    throw InvalidArgument("malformed grid '" + grid_text + "' (expected lo:hi:steps)");
  const double lo = parse_number(parts[0], "grid bound");
  const double hi = parse_number(parts[1], "grid bound");
  const int steps = static_cast<int>(parse_number(parts[2], "grid step count"));
  const RuppeinerReport rep = ruppeiner_check(ens, lo, hi, steps, common.threads);

  Output out;
  out.json.set("command", "ruppeiner");
  out.json.set("model", model_report(ens));
  Report results = Report::object();
  results.set("grid_E", Report::vector(rep.grid_E));
  results.set("grid_I", Report::vector(rep.grid_I));
  results.set("entropy", Report::vector(rep.entropy));
  results.set("transported_metric", Report::vector(rep.transported));
  results.set("fd_ruppeiner", Report::vector(rep.fd_ruppeiner));
  results.set("max_rel_deviation", rep.max_rel_deviation);
  out.json.set("results", std::move(results));
  out.json.set("pass", rep.pass);
  out.json.set("max_delta", rep.max_rel_deviation);
  Report tols = Report::object();
  tols.set("relative", rep.tolerance);
  out.json.set("tolerances", std::move(tols));

  CsvWriter csv({"E", "I", "entropy", "transported_metric", "fd_ruppeiner"});
  for (std::size_t k = 0; k < rep.grid_E.size(); ++k) {
    const std::vector<double> row{rep.grid_E[k], rep.grid_I[k], rep.entropy[k],
                                  rep.transported[k], rep.fd_ruppeiner[k]};
    csv.row(row);
  }
  out.csv = std::move(csv);
  out.pass_known = true;
  out.passed = rep.pass;
  return out;
}

Output run_models_list() {
  Output out;
  out.json.set("command", "models list");
  out.json.set("model", Report::object());
  Report results = Report::object();
  Report list = Report::array();
  auto entry = [&](const char* name, const char* grammar, const char* about) {
    Report e = Report::object();
    e.set("name", name);
    e.set("grammar", grammar);
    e.set("about", about);
    list.push(std::move(e));
  };
  entry("two_level", "two_level:eps=<float>", "two microstates with values {0, eps}");
  entry("ising_ring", "ising_ring:N=<int>,J=<float>,h=<float>",
        "periodic Ising chain, observables (energy, magnetization), N <= 20");
  entry("quadratic", "quadratic:n=<int>,c=<float>,b=<float>",
        "analytic phi = 1/2 I^T C I + b.I (tridiagonal C for n > 1)");
  entry("file", "<path>.json", "enumerated model from a JSON microstate table");
  results.set("models", std::move(list));
  out.json.set("results", std::move(results));
  out.json.set("tolerances", Report::object());
  CsvWriter csv({"name", "grammar"});
  const std::vector<std::string> rows[] = {
      {"two_level", "two_level:eps=<float>"},
      {"ising_ring", "ising_ring:N=<int>,J=<float>,h=<float>"},
      {"quadratic", "quadratic:n=<int>,c=<float>,b=<float>"},
      {"file", "<path>.json"}};
  for (const auto& r : rows) csv.row_mixed(r);
  out.csv = std::move(csv);
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometric thermodynamics of exponential families"};
  app.require_subcommand(1);

  CommonArgs common;
  if (const char* env = std::getenv("CONTACTOTHERM_THREADS"))
    common.threads = static_cast<unsigned>(std::max(1, std::atoi(env)));

  auto add_common = [&](CLI::App* cmd, bool with_seed = true) {
    cmd->add_option("--model", common.model, "builtin spec name:key=val,... or model JSON path")
        ->required();
    cmd->add_option("--format", common.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--threads", common.threads, "partition count for sweeps/enumeration");
    cmd->add_option("--tol", common.tol, "override the pass tolerance");
    if (with_seed) cmd->add_option("--seed", common.seed, "RNG seed");
  };

  // models list
  CLI::App* models_cmd = app.add_subcommand("models", "model registry");
  std::string models_action = "list";
  models_cmd->add_option("action", models_action)->check(CLI::IsMember({"list"}));
  models_cmd->add_option("--format", common.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  // metric
  CLI::App* metric_cmd =
      app.add_subcommand("metric", "equilibrium metric along every route");
  std::string at_text, reparam_text;
  add_common(metric_cmd, false);
  metric_cmd->add_option("--at", at_text, "intensive point I1[,I2,...]")->required();
  metric_cmd->add_option("--reparam", reparam_text,
                         "reparametrization JSON (path or inline)");

  // verify
  CLI::App* verify_cmd = app.add_subcommand("verify", "property verification sweeps");
  std::string verify_what;
  int points = 100;
  verify_cmd->add_option("what", verify_what, "invariance|contact|legendre")
      ->required()
      ->check(CLI::IsMember({"invariance", "contact", "legendre"}));
  add_common(verify_cmd);
  verify_cmd->add_option("--points", points, "random draws per check");
  verify_cmd->add_option("--reparam", reparam_text,
                         "fixed reparametrization instead of sampled ones");

  // maxent
  CLI::App* maxent_cmd = app.add_subcommand("maxent", "invert the equations of state");
  std::string targets_text;
  add_common(maxent_cmd, false);
  maxent_cmd->add_option("--targets", targets_text, "target averages E1[,E2,...]")
      ->required();

  // sample
  CLI::App* sample_cmd = app.add_subcommand("sample", "Monte-Carlo fluctuation estimate");
  std::size_t samples = 100000;
  add_common(sample_cmd);
  sample_cmd->add_option("--at", at_text, "intensive point")->required();
  sample_cmd->add_option("--samples", samples, "draw count");

  // curvature
  CLI::App* curv_cmd = app.add_subcommand("curvature", "scalar curvature of Hess phi");
  add_common(curv_cmd, false);
  curv_cmd->add_option("--at", at_text, "intensive point")->required();

  // ruppeiner
  CLI::App* rup_cmd =
      app.add_subcommand("ruppeiner", "entropy-Hessian consistency on an E-grid");
  std::string grid_text;
  add_common(rup_cmd, false);
  rup_cmd->add_option("--grid", grid_text, "lo:hi:steps")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    Output out;
    if (models_cmd->parsed()) {
      out = run_models_list();
    } else if (metric_cmd->parsed()) {
      out = run_metric(common, at_text, reparam_text);
    } else if (verify_cmd->parsed()) {
      if (verify_what == "invariance")
        out = run_verify_invariance(common, reparam_text, points);
      else if (verify_what == "contact")
        out = run_verify_contact(common, points);
      else
        out = run_verify_legendre(common, points);
    } else if (maxent_cmd->parsed()) {
      out = run_maxent(common, targets_text);
    } else if (sample_cmd->parsed()) {
      out = run_sample(common, at_text, samples);
    } else if (curv_cmd->parsed()) {
      out = run_curvature(common, at_text);
    } else if (rup_cmd->parsed()) {
      out = run_ruppeiner(common, grid_text);
    }
    emit(out, common.format);
    if (out.pass_known && !out.passed) return 2;
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
