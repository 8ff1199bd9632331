#include <doctest.h>

#include <cmath>
#include <vector>

#include "cth/maxent.hpp"
#include "cth/rng.hpp"

using namespace cth;

TEST_CASE("symmetric target solves at the origin") {
  MaxEntProblem p{two_level(2.0), {1.0}};
  const MaxEntSolution s = solve(p);
  CHECK(std::abs(s.I[0]) <= 1e-10);
  CHECK(std::abs(s.entropy - std::log(2.0)) <= 1e-10);
  CHECK(s.residual <= 1e-10);
}

TEST_CASE("boundary target is reported as infeasible") {
  MaxEntProblem p{two_level(2.0), {2.0}};
  CHECK_THROWS_AS(solve(p), InfeasibleTarget);
  MaxEntProblem below{two_level(2.0), {-0.5}};
  CHECK_THROWS_AS(solve(below), InfeasibleTarget);
}

TEST_CASE("argument validation") {
  MaxEntProblem bad_len{two_level(2.0), {1.0, 2.0}};
  CHECK_THROWS_AS(solve(bad_len), InvalidArgument);
  SymMat c(1);
  c.at(0, 0) = 1.0;
  MaxEntProblem analytic{quadratic(c, {}), {0.5}};
  CHECK_THROWS_AS(solve(analytic), UnsupportedOperation);
  MaxEntProblem bad_iter{two_level(2.0), {1.0}};
  bad_iter.max_iter = 0;
  CHECK_THROWS_AS(solve(bad_iter), InvalidArgument);
}

TEST_CASE("iteration cap reports non-convergence with the residual") {
  MaxEntProblem p{two_level(2.0), {1.7}};
  p.max_iter = 1;
  CHECK_THROWS_AS(solve(p), NonConvergence);
}

TEST_CASE("round-trip through the equations of state") {
  const std::vector<Ensemble> models{two_level(2.0), ising_ring(4, 1.0, 0.0),
                                     ising_ring(6, 1.0, 0.3)};
  Rng rng(314);
  for (const Ensemble& ens : models) {
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> I0(ens.n());
      for (double& x : I0) x = rng.uniform(-1.0, 1.0);
      const std::vector<double> targets = equations_of_state(ens, I0);
      MaxEntProblem p{ens, targets};
      const MaxEntSolution s = solve(p);
      for (int a = 0; a < ens.n(); ++a) CHECK(std::abs(s.I[a] - I0[a]) <= 1e-8);
      // the reported maximum entropy matches S = phi - I.E
      double ie = 0.0;
      for (int a = 0; a < ens.n(); ++a) ie += s.I[a] * targets[a];
      CHECK(std::abs(s.entropy - (s.phi - ie)) <= 1e-12);
    }
  }
}

TEST_CASE("dual descent is monotone across accepted iterations") {
  const Ensemble ens = ising_ring(5, 1.0, 0.2);
  Rng rng(218);
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<double> I0{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    MaxEntProblem p{ens, equations_of_state(ens, I0)};
    p.initial_I = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const MaxEntSolution s = solve(p);
    for (std::size_t k = 1; k < s.dual_history.size(); ++k)
      CHECK(s.dual_history[k] <= s.dual_history[k - 1] + 1e-12);
  }
}

TEST_CASE("solution maximizes entropy among constraint-preserving perturbations") {
  const Ensemble ens = ising_ring(4, 1.0, 0.0);
  const std::vector<double> I0{-0.4, 0.25};
  const std::vector<double> targets = equations_of_state(ens, I0);
  MaxEntProblem p{ens, targets};
  const MaxEntSolution sol = solve(p);
  const GibbsState st = gibbs_state(ens, sol.I);
  const std::size_t m = st.probs.size();
  const int n = ens.n();

  // Basis of the constraint rows: (1, H_1(x), H_2(x)).
  std::vector<std::vector<double>> rows(n + 1, std::vector<double>(m, 1.0));
  for (std::size_t x = 0; x < m; ++x) {
    const Microstate micro = ens.microstate(x);
    for (int a = 0; a < n; ++a) rows[a + 1][x] = micro.observables[a];
  }
  auto dot = [m](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t x = 0; x < m; ++x) s += u[x] * v[x];
    return s;
  };
  // Gram-Schmidt so perturbations can be projected onto the constraint kernel.
  std::vector<std::vector<double>> ortho;
  for (auto& r : rows) {
    std::vector<double> v = r;
    for (const auto& o : ortho) {
      const double c = dot(v, o);
      for (std::size_t x = 0; x < m; ++x) v[x] -= c * o[x];
    }
    const double nrm = std::sqrt(dot(v, v));
    for (double& e : v) e /= nrm;
    ortho.push_back(std::move(v));
  }
  auto entropy_of = [&](const std::vector<double>& probs) {
    double S = 0.0;
    for (double q : probs)
      if (q > 0.0) S -= q * std::log(q);
    return S;
  };

  const double S_star = entropy_of(st.probs);
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> delta(m);
    for (double& d : delta) d = rng.uniform(-1.0, 1.0);
    for (const auto& o : ortho) {
      const double c = dot(delta, o);
      for (std::size_t x = 0; x < m; ++x) delta[x] -= c * o[x];
    }
    double nrm = std::sqrt(dot(delta, delta));
    if (nrm == 0.0) continue;
    for (double& d : delta) d *= 1e-3 / nrm;
    std::vector<double> perturbed = st.probs;
    bool valid = true;
    for (std::size_t x = 0; x < m; ++x) {
      perturbed[x] += delta[x];
      if (perturbed[x] < 0.0) valid = false;
    }
    if (!valid) continue;
    CHECK(entropy_of(perturbed) <= S_star + 1e-9);
  }
}
