#ifndef CTH_MAXENT_HPP
#define CTH_MAXENT_HPP

#include <span>
#include <vector>

#include "cth/ensemble.hpp"

namespace cth {

/// Find the multipliers I* with dphi/dI = E* for target averages E*
/// (equivalently, maximize the entropy under the n + 1 moment constraints).
struct MaxEntProblem {
  Ensemble ensemble;
  std::vector<double> targets;
  std::vector<double> initial_I; // empty = origin
  double tol = 1e-10;
  int max_iter = 100;
};

struct MaxEntSolution {
  std::vector<double> I;
  double phi = 0.0;
  double entropy = 0.0; // S* = phi* - I*.E*
  int iterations = 0;
  double residual = 0.0; // ||dphi/dI - E*||_inf at the solution
  std::vector<double> dual_history; // D(I_k) at accepted iterates
};

/// Newton iteration on F(I) = dphi/dI - E* with the exact Hessian of phi,
/// Cholesky solves, Armijo backtracking on the convex dual
/// D(I) = phi(I) - I.E*, and Levenberg damping when the factorization
/// fails. Targets outside the achievable hull are detected as dual descent
/// running away (||I||_inf > 1e3) and reported as InfeasibleTarget.
MaxEntSolution solve(const MaxEntProblem& problem);

/// The same Newton inversion without the enumerated-ensemble restriction;
/// used wherever E(I) must be inverted (e.g. entropy as a function of E).
MaxEntSolution invert_equations_of_state(const Ensemble& ens,
                                         std::span<const double> targets,
                                         std::span<const double> initial_I,
                                         double tol = 1e-10, int max_iter = 100,
                                         unsigned threads = 1);

} // namespace cth

#endif
