// Acceptance suite: one line per criterion, nonzero exit when any fails.
// End-to-end criteria go through the CLI binary (CONTACTOTHERM_BIN); the
// rest run in process against the library.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <json.hpp>

#include "cth/ensemble.hpp"
#include "cth/maxent.hpp"
#include "cth/phase_space.hpp"
#include "cth/rng.hpp"

using namespace cth;
using nlohmann::json;

namespace {

int g_failures = 0;

class Timer {
public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

void report(int criterion, const std::string& label, bool pass,
            const std::string& detail, double elapsed) {
  std::printf("criterion %2d (%s): %s (%s) [%.2f s]\n", criterion, label.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str(), elapsed);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string cli_binary() {
  if (const char* env = std::getenv("CONTACTOTHERM_BIN")) return env;
  return "./build/contactotherm";
}

struct CliResult {
  int exit_code = -1;
  std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = cli_binary() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {};
  CliResult out;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    out.stdout_text.append(buf.data(), got);
  const int status = pclose(pipe);
  out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::vector<double> random_point(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> at(n);
  for (double& x : at) x = rng.uniform(lo, hi);
  return at;
}

// --------------------------------------------------------------- criteria

void criterion_1_fisher() {
  Timer timer;
  std::vector<Ensemble> enumerated{two_level(2.0)};
  for (int N = 4; N <= 12; ++N) enumerated.push_back(ising_ring(N, 1.0, 0.0));
  double worst = 0.0;
  Rng rng(101);
  for (const Ensemble& ens : enumerated) {
    for (int k = 0; k < 100; ++k) {
      const auto at = random_point(rng, ens.n());
      const SymMat hess = potential_jet(ens, at, 2).hessian_matrix();
      const SymMat cov = covariance_metric(ens, at);
      worst = std::max(worst, max_abs_diff(hess, cov));
    }
  }
  // The analytic quadratic model has no microstates; its Hessian must
  // reproduce the coefficient matrix instead.
  SymMat c(2);
  c.at(0, 0) = 2.0;
  c.at(1, 1) = 2.0;
  c.at(0, 1) = 1.0;
  const Ensemble quad = quadratic(c, {});
  for (int k = 0; k < 100; ++k) {
    const auto at = random_point(rng, 2);
    const SymMat hess = potential_jet(quad, at, 2).hessian_matrix();
    worst = std::max(worst, max_abs_diff(hess, c));
  }
  const double elapsed = timer.seconds();
  report(1, "fisher three-way identity", worst <= 1e-10 && elapsed <= 10.0,
         "max |Hess phi - cov| = " + fmt(worst), elapsed);
}

void criteria_2_3_invariance_first_law() {
  Timer timer;
  const std::vector<std::string> models{"two_level:eps=2", "ising_ring:N=4,J=1,h=0",
                                        "ising_ring:N=8,J=1,h=0.3", "quadratic:n=2"};
  double max_delta = 0.0, max_first_law = 0.0;
  bool pass = true;
  int seed = 7;
  for (const std::string& model : models) {
    const CliResult r = run_cli("verify invariance --model " + model +
                                " --points 100 --seed " + std::to_string(seed++));
    if (r.exit_code != 0) {
      pass = false;
      continue;
    }
    const json doc = json::parse(r.stdout_text);
    pass = pass && doc["pass"].get<bool>();
    max_delta = std::max(max_delta, doc["max_delta"].get<double>());
    max_first_law = std::max({max_first_law,
                              doc["results"]["first_law_eta1_max"].get<double>(),
                              doc["results"]["first_law_eta2_max"].get<double>()});
  }
  const double elapsed = timer.seconds();
  report(2, "metric invariance under reparametrization",
         pass && max_delta <= 1e-9 && elapsed <= 30.0, "max delta = " + fmt(max_delta),
         elapsed);
  report(3, "first law on both embeddings", max_first_law <= 1e-12,
         "max |pullback eta| = " + fmt(max_first_law), elapsed);
}

void criterion_4_legendre() {
  Timer timer;
  // one model per dimension n = 1..4
  const std::vector<std::string> models{"two_level:eps=2", "ising_ring:N=4,J=1,h=0",
                                        "quadratic:n=3", "quadratic:n=4"};
  double worst = 0.0;
  bool pass = true;
  for (const std::string& model : models) {
    const CliResult r =
        run_cli("verify legendre --model " + model + " --points 100 --seed 19");
    if (r.exit_code != 0) {
      pass = false;
      continue;
    }
    const json doc = json::parse(r.stdout_text);
    pass = pass && doc["pass"].get<bool>();
    worst = std::max(worst, doc["max_delta"].get<double>());
  }
  const double elapsed = timer.seconds();
  report(4, "contact invariance of Legendre transformations",
         pass && worst <= 1e-12 && elapsed <= 5.0, "max deviation = " + fmt(worst),
         elapsed);
}

void criterion_5_nonintegrability() {
  Timer timer;
  const std::vector<std::string> models{"two_level:eps=2", "ising_ring:N=4,J=1,h=0",
                                        "quadratic:n=3", "quadratic:n=4"};
  bool pass = true;
  double min_ratio = 1e300; // min |volume| / (0.5 n!)
  for (const std::string& model : models) {
    const CliResult r =
        run_cli("verify contact --model " + model + " --points 100 --seed 23");
    if (r.exit_code != 0) {
      pass = false;
      continue;
    }
    const json doc = json::parse(r.stdout_text);
    pass = pass && doc["pass"].get<bool>();
    const double nfact = doc["results"]["n_factorial"].get<double>();
    min_ratio = std::min(
        {min_ratio, doc["results"]["min_abs_volume_eta1"].get<double>() / (0.5 * nfact),
         doc["results"]["min_abs_volume_eta2"].get<double>() / (0.5 * nfact)});
  }
  report(5, "non-integrability volumes", pass && min_ratio >= 1.0,
         "min |volume| / (0.5 n!) = " + fmt(min_ratio), timer.seconds());
}

void criterion_6_maxent() {
  Timer timer;
  const std::vector<Ensemble> models{two_level(2.0), ising_ring(4, 1.0, 0.0),
                                     ising_ring(6, 1.0, 0.3)};
  double worst = 0.0;
  bool pass = true;
  Rng rng(606);
  for (const Ensemble& ens : models) {
    for (int k = 0; k < 50; ++k) {
      const auto I0 = random_point(rng, ens.n());
      MaxEntProblem p{ens, equations_of_state(ens, I0)};
      const MaxEntSolution s = solve(p);
      for (int a = 0; a < ens.n(); ++a)
        worst = std::max(worst, std::abs(s.I[a] - I0[a]));
    }
  }
  if (worst > 1e-8) pass = false;
  // boundary target through the CLI: usage/domain exit code 1
  const CliResult boundary = run_cli("maxent --model two_level:eps=2 --targets 2");
  if (boundary.exit_code != 1) pass = false;
  report(6, "maxent round-trip and infeasible boundary", pass,
         "max |I* - I0| = " + fmt(worst) + ", boundary exit = " +
             std::to_string(boundary.exit_code),
         timer.seconds());
}

void criterion_7_ruppeiner() {
  Timer timer;
  const CliResult r = run_cli("ruppeiner --model two_level:eps=2 --grid 0.4:1.6:50");
  bool pass = r.exit_code == 0;
  double worst = 0.0;
  if (pass) {
    const json doc = json::parse(r.stdout_text);
    pass = doc["pass"].get<bool>();
    const auto& grid = doc["results"]["grid_E"];
    const auto& transported = doc["results"]["transported_metric"];
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double e = grid[k].get<double>();
      const double closed = 1.0 / (e * (2.0 - e));
      worst = std::max(worst,
                       std::abs(transported[k].get<double>() - closed) / closed);
    }
    if (worst > 1e-4) pass = false;
  }
  report(7, "ruppeiner metric vs closed-form entropy Hessian", pass,
         "max rel deviation = " + fmt(worst), timer.seconds());
}

void criterion_8_ad_correctness() {
  Timer timer;
  std::vector<Ensemble> models{two_level(2.0), ising_ring(6, 1.0, 0.2)};
  SymMat c(2);
  c.at(0, 0) = 2.0;
  c.at(1, 1) = 2.0;
  c.at(0, 1) = 1.0;
  models.push_back(quadratic(c, {}));
  const double h = 1e-5;
  double worst = 0.0;
  Rng rng(808);
  for (const Ensemble& ens : models) {
    const int n = ens.n();
    for (int k = 0; k < 100; ++k) {
      const auto at = random_point(rng, n);
      const SymMat hess = potential_jet(ens, at, 2).hessian_matrix();
      const double scale = std::max(1.0, hess.max_abs());
      for (int b = 0; b < n; ++b) {
        auto plus = at, minus = at;
        plus[b] += h;
        minus[b] -= h;
        const auto ep = equations_of_state(ens, plus);
        const auto em = equations_of_state(ens, minus);
        for (int a = 0; a < n; ++a)
          worst = std::max(worst,
                           std::abs(hess(a, b) - (ep[a] - em[a]) / (2 * h)) / scale);
      }
    }
  }
  report(8, "AD Hessians vs central finite differences", worst <= 1e-6,
         "max rel deviation = " + fmt(worst), timer.seconds());
}

void criterion_9_mc() {
  Timer timer;
  const Ensemble tl = two_level(2.0);
  const std::vector<double> zero{0.0};
  const McCovariance big = mc_covariance(tl, zero, 1000000, 1);
  bool pass = std::abs(big.covariance(0, 0) - 1.0) <= 5.0 * big.std_error(0, 0);

  std::vector<double> err_small, err_large;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    err_small.push_back(
        std::abs(mc_covariance(tl, zero, 250000, seed).covariance(0, 0) - 1.0));
    err_large.push_back(
        std::abs(mc_covariance(tl, zero, 1000000, seed).covariance(0, 0) - 1.0));
  }
  std::sort(err_small.begin(), err_small.end());
  std::sort(err_large.begin(), err_large.end());
  const double ratio = err_small[10] / std::max(err_large[10], 1e-300);
  if (ratio < 1.4) pass = false;
  const double elapsed = timer.seconds();
  report(9, "monte-carlo fluctuation estimator",
         pass && elapsed <= 20.0,
         "|g - 1| = " + fmt(std::abs(big.covariance(0, 0) - 1.0)) + " vs 5 se = " +
             fmt(5.0 * big.std_error(0, 0)) + ", median error ratio = " + fmt(ratio),
         elapsed);
}

void criterion_10_determinism() {
  Timer timer;
  bool pass = true;
  const std::vector<std::string> commands{
      "verify invariance --model ising_ring:N=4,J=1,h=0 --points 20 --seed 11",
      "verify legendre --model ising_ring:N=4,J=1,h=0 --points 20 --seed 11",
      "sample --model two_level:eps=2 --at 0 --samples 20000 --seed 5"};
  for (const std::string& cmd : commands) {
    const CliResult a = run_cli(cmd);
    const CliResult b = run_cli(cmd);
    if (a.exit_code != 0 || a.stdout_text != b.stdout_text || a.stdout_text.empty())
      pass = false;
  }
  report(10, "byte-identical reports for identical argv and seed", pass,
         std::to_string(commands.size()) + " commands replayed", timer.seconds());
}

} // namespace

int main() {
  criterion_1_fisher();
  criteria_2_3_invariance_first_law();
  criterion_4_legendre();
  criterion_5_nonintegrability();
  criterion_6_maxent();
  criterion_7_ruppeiner();
  criterion_8_ad_correctness();
  criterion_9_mc();
  criterion_10_determinism();
  if (g_failures == 0)
    std::printf("acceptance: all criteria PASS\n");
  else
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
