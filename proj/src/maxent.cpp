#include "cth/maxent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cth {

namespace {

constexpr double kDivergenceRadius = 1e3;
constexpr double kArmijo = 1e-4;

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

} // namespace

MaxEntSolution invert_equations_of_state(const Ensemble& ens,
                                         std::span<const double> targets,
                                         std::span<const double> initial_I, double tol,
                                         int max_iter, unsigned threads) {
  const int n = ens.n();
  if (static_cast<int>(targets.size()) != n)
    throw InvalidArgument("maxent: target vector length does not match model n");
  for (double t : targets)
    if (!std::isfinite(t)) throw InvalidArgument("maxent: non-finite target");

  // Averages can only lie strictly inside the range spanned by the
  // observable values; hitting or crossing an endpoint needs an infinite
  // multiplier.
  if (ens.kind() == Ensemble::Kind::Enumerated) {
    for (int a = 0; a < n; ++a) {
      const auto [lo, hi] = ens.observable_range(a);
      if (targets[a] <= lo || targets[a] >= hi)
        throw InfeasibleTarget("maxent: target " + std::to_string(targets[a]) +
                               " for observable " + std::to_string(a + 1) +
                               " is at or outside the achievable range (" +
                               std::to_string(lo) + ", " + std::to_string(hi) + ")");
    }
  }

  std::vector<double> I(n, 0.0);
  if (!initial_I.empty()) {
    if (static_cast<int>(initial_I.size()) != n)
      throw InvalidArgument("maxent: initial point length does not match model n");
    I.assign(initial_I.begin(), initial_I.end());
  }

  MaxEntSolution sol;
  ad::Jet jet = potential_jet(ens, I, 2, threads);
  auto dual = [&](double phi_value, std::span<const double> at) {
    double d = phi_value;
    for (int a = 0; a < n; ++a) d -= at[a] * targets[a];
    return d;
  };
  double D = dual(jet.value, I);
  sol.dual_history.push_back(D);

  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<double> F(n);
    for (int a = 0; a < n; ++a) F[a] = jet.grad[a] - targets[a];
    const double res = inf_norm(F);
    if (res <= tol) {
      sol.I = I;
      sol.phi = jet.value;
      double ie = 0.0;
      for (int a = 0; a < n; ++a) ie += I[a] * targets[a];
      sol.entropy = jet.value - ie;
      sol.iterations = iter;
      sol.residual = res;
      return sol;
    }

    SymMat hess = jet.hessian_matrix();
    std::vector<double> step;
    if (!solve_spd(hess, F, step)) {
      // Levenberg damping against near-boundary ill conditioning.
      double trace = 0.0;
      for (int a = 0; a < n; ++a) trace += hess(a, a);
      SymMat damped = hess;
      const double lambda = 1e-8 * trace / n;
      for (int a = 0; a < n; ++a) damped.at(a, a) += lambda;
      if (!solve_spd(damped, F, step))
        throw SingularityError("maxent: Hessian factorization failed");
    }

    // Armijo backtracking on the dual along the Newton direction -step.
    // Trial points whose exponents overflow the log-sum-exp range are
    // treated as rejected; a line search that dies against that wall is the
    // unbounded-dual signature of an infeasible target.
    double slope = 0.0;
    for (int a = 0; a < n; ++a) slope -= F[a] * step[a];
    double alpha = 1.0;
    bool overflowed = false;
    std::vector<double> trial(n);
    for (int ls = 0;; ++ls) {
      for (int a = 0; a < n; ++a) trial[a] = I[a] - alpha * step[a];
      bool ok = true;
      ad::Jet trial_jet;
      try {
        trial_jet = potential_jet(ens, trial, 2, threads);
      } catch (const DomainError&) {
        ok = false;
        overflowed = true;
      }
      if (ok) {
        const double trial_D = dual(trial_jet.value, trial);
        // The 4e-16 slack keeps full Newton steps acceptable once the dual
        // decrease falls below representable resolution.
        if (trial_D <= D + kArmijo * alpha * slope + 4e-16 * (1.0 + std::abs(D))) {
          I = trial;
          jet = std::move(trial_jet);
          D = trial_D;
          break;
        }
      }
      alpha *= 0.5;
      if (ls == 59) {
        if (overflowed)
          throw InfeasibleTarget(
              "maxent: dual descent runs into the representable range -- the "
              "targets lie outside the achievable hull of the observables");
        throw NonConvergence("maxent: line search stalled at residual " +
                                 std::to_string(res),
                             res);
      }
    }
    sol.dual_history.push_back(D);

    if (inf_norm(I) > kDivergenceRadius)
      throw InfeasibleTarget(
          "maxent: dual descent diverges -- the targets lie outside the "
          "achievable hull of the observables");
  }

  std::vector<double> F(n);
  for (int a = 0; a < n; ++a) F[a] = jet.grad[a] - targets[a];
  if (inf_norm(I) > 100.0)
    throw InfeasibleTarget(
        "maxent: multipliers drift outward without meeting the targets -- the "
        "targets lie outside the achievable hull of the observables");
  throw NonConvergence("maxent: no convergence after " + std::to_string(max_iter) +
                           " iterations, residual " + std::to_string(inf_norm(F)),
                       inf_norm(F));
}

MaxEntSolution solve(const MaxEntProblem& problem) {
  if (problem.ensemble.kind() != Ensemble::Kind::Enumerated)
    throw UnsupportedOperation("maxent: analytic ensembles are not supported");
  if (problem.max_iter < 1) throw InvalidArgument("maxent: max_iter must be >= 1");
  if (!(problem.tol > 0.0)) throw InvalidArgument("maxent: tolerance must be positive");
  return invert_equations_of_state(problem.ensemble, problem.targets, problem.initial_I,
                                   problem.tol, problem.max_iter);
}

} // namespace cth
