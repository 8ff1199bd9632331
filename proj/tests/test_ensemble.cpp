#include <doctest.h>

#include <array>
#include <cmath>
#include <memory>
#include <tuple>
#include <vector>

#include "cth/ensemble.hpp"
#include "cth/rng.hpp"

using namespace cth;
using ad::Jet;

namespace {

bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

/// Test-side oracle: direct enumeration of the periodic Ising chain with
/// plain shifted exp sums, independent of the streaming machinery.
struct IsingOracle {
  double phi;
  std::vector<double> mean;
  SymMat cov;
};

IsingOracle brute_force_ising(int N, double J, double h, std::vector<double> I) {
  const std::size_t states = std::size_t{1} << N;
  std::vector<double> expo(states);
  std::vector<std::array<double, 2>> obs(states);
  double mx = -1e300;
  for (std::size_t s = 0; s < states; ++s) {
    int bonds = 0, mag = 0;
    for (int i = 0; i < N; ++i) {
      const int si = (s >> i) & 1u ? 1 : -1;
      const int sj = (s >> ((i + 1) % N)) & 1u ? 1 : -1;
      bonds += si * sj;
      mag += si;
    }
    obs[s] = {-J * bonds - h * mag, static_cast<double>(mag)};
    expo[s] = I[0] * obs[s][0] + I[1] * obs[s][1];
    mx = std::max(mx, expo[s]);
  }
  double z = 0.0;
  for (std::size_t s = 0; s < states; ++s) z += std::exp(expo[s] - mx);
  IsingOracle out{mx + std::log(z), {0.0, 0.0}, SymMat(2)};
  for (std::size_t s = 0; s < states; ++s) {
    const double p = std::exp(expo[s] - mx) / z;
    out.mean[0] += p * obs[s][0];
    out.mean[1] += p * obs[s][1];
  }
  for (std::size_t s = 0; s < states; ++s) {
    const double p = std::exp(expo[s] - mx) / z;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b <= a; ++b)
        out.cov.at(a, b) += p * (obs[s][a] - out.mean[a]) * (obs[s][b] - out.mean[b]);
  }
  return out;
}

class ConstantPairSource final : public MicrostateSource {
public:
  std::size_t size() const override { return 4; }
  int n_observables() const override { return 2; }
  double fetch(std::size_t index, std::span<double> out) const override {
    out[0] = static_cast<double>(index);
    out[1] = 5.0; // affinely dependent second observable
    return 0.0;
  }
};

} // namespace

TEST_CASE("log partition values") {
  const Ensemble tl = two_level(2.0);
  const std::vector<double> zero{0.0};
  CHECK(near(potential_jet(tl, zero, 2).value, std::log(2.0)));

  const Ensemble ising = ising_ring(4, 1.0, 0.0);
  const std::vector<double> origin{0.0, 0.0};
  CHECK(near(potential_jet(ising, origin, 2).value, std::log(16.0)));

  // frozen oracle values (direct 16-state enumeration)
  const std::vector<double> at{-0.5, 0.0};
  const Jet j = potential_jet(ising, at, 1);
  CHECK(near(j.value, 3.2976420048099113, 1e-12));
  CHECK(near(j.grad[0], -2.145374415963298, 1e-12));
  CHECK(near(j.grad[1], 0.0, 1e-12));
}

TEST_CASE("degenerate observables are rejected at construction") {
  CHECK_THROWS_AS(Ensemble::enumerated(std::make_shared<ConstantPairSource>(), {}),
                  InvalidArgument);
  // two identical microstates: affine dependence across states
  CHECK_THROWS_AS(
      ensemble_from_json_text(R"({"n":1,"microstates":[{"H":[1]},{"H":[1]}]})"),
      InvalidArgument);
}

TEST_CASE("gibbs state") {
  const Ensemble tl = two_level(2.0);
  SUBCASE("uniform at I = 0") {
    const std::vector<double> zero{0.0};
    const GibbsState st = gibbs_state(tl, zero);
    CHECK(near(st.probs[0], 0.5));
    CHECK(near(st.probs[1], 0.5));
  }
  SUBCASE("high state dominates at large I") {
    const std::vector<double> at{20.0};
    const GibbsState st = gibbs_state(tl, at);
    CHECK(near(st.probs[0], 4.248354255291589e-18, 1e-30));
    CHECK(near(st.probs[1], 1.0, 1e-15));
  }
  SUBCASE("Ising ring uniform at the origin") {
    const std::vector<double> origin{0.0, 0.0};
    const GibbsState st = gibbs_state(ising_ring(4, 1.0, 0.0), origin);
    for (double p : st.probs) CHECK(near(p, 1.0 / 16.0));
  }
  SUBCASE("normalization holds to 1e-12 even on large state spaces") {
    const std::vector<double> at{-0.4, 0.15};
    const GibbsState st = gibbs_state(ising_ring(14, 1.0, 0.2), at);
    KahanAcc sum;
    for (double p : st.probs) sum.add(p);
    CHECK(near(sum.value(), 1.0, 1e-12));
  }
  SUBCASE("analytic ensembles are rejected") {
    SymMat c(1);
    c.at(0, 0) = 1.0;
    const std::vector<double> zero{0.0};
    CHECK_THROWS_AS(gibbs_state(quadratic(c, {}), zero), UnsupportedOperation);
  }
}

TEST_CASE("equations of state") {
  const Ensemble tl = two_level(2.0);
  const std::vector<double> zero{0.0};
  CHECK(near(equations_of_state(tl, zero)[0], 1.0));

  SymMat c(2);
  c.at(0, 0) = 2.0;
  c.at(1, 1) = 2.0;
  c.at(0, 1) = 1.0;
  const Ensemble quad = quadratic(c, {});
  const std::vector<double> at{1.0, 0.0};
  const std::vector<double> e = equations_of_state(quad, at);
  CHECK(near(e[0], 2.0));
  CHECK(near(e[1], 1.0));

  // jet gradient equals the probability-weighted averages
  const Ensemble ising = ising_ring(4, 1.0, 0.0);
  const std::vector<double> pt{-0.5, 0.0};
  const auto oracle = brute_force_ising(4, 1.0, 0.0, pt);
  const std::vector<double> eos = equations_of_state(ising, pt);
  CHECK(near(eos[0], oracle.mean[0], 1e-12));
  CHECK(near(eos[1], oracle.mean[1], 1e-12));
  const GibbsState st = gibbs_state(ising, pt);
  std::vector<double> averaged(2, 0.0);
  for (std::size_t x = 0; x < st.probs.size(); ++x) {
    const Microstate m = ising.microstate(x);
    for (int a = 0; a < 2; ++a) averaged[a] += st.probs[x] * m.observables[a];
  }
  CHECK(near(eos[0], averaged[0], 1e-10));
  CHECK(near(eos[1], averaged[1], 1e-10));
}

TEST_CASE("covariance metric") {
  const Ensemble tl = two_level(2.0);
  const std::vector<double> zero{0.0};
  CHECK(near(covariance_metric(tl, zero)(0, 0), 1.0));

  const Ensemble ising = ising_ring(4, 1.0, 0.0);
  const std::vector<double> at{-0.3, 0.2};
  const SymMat cov = covariance_metric(ising, at);
  // frozen oracle values
  CHECK(near(cov(0, 0), 4.6171806019136525, 1e-12));
  CHECK(near(cov(0, 1), -2.2243268165606156, 1e-12));
  CHECK(near(cov(1, 1), 6.126261271926307, 1e-12));
}

TEST_CASE("Fisher identity: Hessian of phi equals the covariance") {
  const std::vector<Ensemble> models{two_level(2.0), ising_ring(4, 1.0, 0.0),
                                     ising_ring(7, 0.8, 0.3)};
  Rng rng(2024);
  for (const Ensemble& ens : models) {
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> at(ens.n());
      for (double& x : at) x = rng.uniform(-1.0, 1.0);
      const SymMat hess = potential_jet(ens, at, 2).hessian_matrix();
      const SymMat cov = covariance_metric(ens, at);
      CHECK(max_abs_diff(hess, cov) <= 1e-10);
      CHECK(is_positive_definite(cov, 0.0));
    }
  }
}

TEST_CASE("hessian of phi vs central differences of the equations of state") {
  const std::vector<Ensemble> models{two_level(2.0), ising_ring(5, 1.0, 0.1)};
  Rng rng(5150);
  const double h = 1e-5;
  for (const Ensemble& ens : models) {
    const int n = ens.n();
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> at(n);
      for (double& x : at) x = rng.uniform(-1.0, 1.0);
      const SymMat hess = potential_jet(ens, at, 2).hessian_matrix();
      double scale = std::max(1.0, hess.max_abs());
      for (int b = 0; b < n; ++b) {
        std::vector<double> plus = at, minus = at;
        plus[b] += h;
        minus[b] -= h;
        const auto ep = equations_of_state(ens, plus);
        const auto em = equations_of_state(ens, minus);
        for (int a = 0; a < n; ++a) {
          const double fd = (ep[a] - em[a]) / (2.0 * h);
          CHECK(std::abs(hess(a, b) - fd) / scale <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("entropies") {
  const Ensemble tl = two_level(2.0);
  SUBCASE("uniform two-level") {
    const std::vector<double> zero{0.0};
    const GibbsState st = gibbs_state(tl, zero);
    CHECK(near(microscopic_entropy(st, 0), std::log(2.0)));
    CHECK(near(microscopic_entropy(st, 1), std::log(2.0)));
    CHECK(near(shannon_entropy(st), std::log(2.0)));
    CHECK_THROWS_AS(microscopic_entropy(st, 2), InvalidArgument);
  }
  SUBCASE("tilted two-level, frozen value") {
    const std::vector<double> one{1.0};
    const GibbsState st = gibbs_state(tl, one);
    CHECK(near(st.phi, 2.1269280110429727, 1e-13));
    CHECK(near(microscopic_entropy(st, 1), 0.1269280110429727, 1e-13));
    // s(x) = -ln p(x) + log_g(x)
    for (std::size_t x = 0; x < 2; ++x)
      CHECK(near(microscopic_entropy(st, x), -std::log(st.probs[x]), 1e-12));
  }
  SUBCASE("averaged microscopic entropy is the Shannon entropy; S = phi - I.E") {
    const Ensemble ising = ising_ring(6, 1.0, 0.4);
    Rng rng(77);
    for (int rep = 0; rep < 20; ++rep) {
      const std::vector<double> at{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const GibbsState st = gibbs_state(ising, at);
      KahanAcc avg;
      for (std::size_t x = 0; x < st.probs.size(); ++x)
        avg.add(st.probs[x] * microscopic_entropy(st, x));
      const double S = shannon_entropy(st);
      CHECK(near(avg.value(), S, 1e-10));
      const std::vector<double> e = equations_of_state(ising, at);
      double ie = 0.0;
      for (int a = 0; a < 2; ++a) ie += at[a] * e[a];
      CHECK(near(S, st.phi - ie, 1e-10));
    }
  }
  SUBCASE("uniform Ising at the origin") {
    const std::vector<double> origin{0.0, 0.0};
    const GibbsState st = gibbs_state(ising_ring(4, 1.0, 0.0), origin);
    CHECK(near(shannon_entropy(st), std::log(16.0)));
  }
  SUBCASE("degeneracy weights act as a base measure") {
    // one state with log_g = ln 2 mimics two merged states
    const Ensemble merged = ensemble_from_json_text(
        R"({"n":1,"microstates":[{"H":[0],"log_g":0.6931471805599453},{"H":[2]}]})");
    const Ensemble split = ensemble_from_json_text(
        R"({"n":1,"microstates":[{"H":[0]},{"H":[0]},{"H":[2]}]})");
    const std::vector<double> at{0.7};
    CHECK(near(potential_jet(merged, at, 1).value, potential_jet(split, at, 1).value,
               1e-13));
    CHECK(near(shannon_entropy(gibbs_state(merged, at)),
               shannon_entropy(gibbs_state(split, at)), 1e-12));
  }
}

TEST_CASE("log-sum-exp overflow guard") {
  const Ensemble tl = two_level(2.0);
  const std::vector<double> huge{400.0};
  CHECK_THROWS_AS(potential_jet(tl, huge, 1), DomainError);
}

TEST_CASE("streamed Ising enumeration matches the brute-force oracle") {
  Rng rng(6);
  for (const auto& [N, J, h] :
       {std::tuple{4, 1.0, 0.0}, {6, 0.7, -0.2}, {9, 1.2, 0.5}}) {
    const Ensemble ens = ising_ring(N, J, h);
    for (int rep = 0; rep < 5; ++rep) {
      const std::vector<double> at{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)};
      const auto oracle = brute_force_ising(N, J, h, at);
      const Jet jet = potential_jet(ens, at, 2);
      CHECK(near(jet.value, oracle.phi, 1e-11));
      CHECK(near(jet.grad[0], oracle.mean[0], 1e-11));
      CHECK(near(jet.grad[1], oracle.mean[1], 1e-11));
      CHECK(max_abs_diff(covariance_metric(ens, at), oracle.cov) <= 1e-10);
    }
  }
}

TEST_CASE("threaded enumeration agrees with single-threaded") {
  const Ensemble ens = ising_ring(10, 1.0, 0.3);
  const std::vector<double> at{-0.35, 0.2};
  const Jet j1 = potential_jet(ens, at, 2, 1);
  const Jet j4 = potential_jet(ens, at, 2, 4);
  CHECK(near(j1.value, j4.value, 1e-12));
  for (int a = 0; a < 2; ++a) CHECK(near(j1.grad[a], j4.grad[a], 1e-12));
  for (std::size_t k = 0; k < j1.hess.size(); ++k)
    CHECK(near(j1.hess[k], j4.hess[k], 1e-12));
}

TEST_CASE("model JSON parsing errors carry the offending field") {
  CHECK_THROWS_WITH_AS(ensemble_from_json_text("{"), doctest::Contains("line"),
                       ParseError);
  CHECK_THROWS_WITH_AS(ensemble_from_json_text(R"({"microstates":[]})"),
                       doctest::Contains("\"n\""), ParseError);
  CHECK_THROWS_WITH_AS(
      ensemble_from_json_text(R"({"n":2,"microstates":[{"H":[1,2]},{"H":[3]}]})"),
      doctest::Contains("microstates[1].H"), ParseError);
  CHECK_THROWS_WITH_AS(
      ensemble_from_json_text(
          R"({"n":1,"microstates":[{"H":[1],"log_g":"x"},{"H":[2]}]})"),
      doctest::Contains("log_g"), ParseError);
}

TEST_CASE("monte-carlo covariance") {
  const Ensemble tl = two_level(2.0);
  const std::vector<double> zero{0.0};

  SUBCASE("sample counts below 2 are rejected") {
    CHECK_THROWS_AS(mc_covariance(tl, zero, 1, 1), InvalidArgument);
  }

  SUBCASE("estimate lands within five standard errors of the exact variance") {
    const McCovariance mc = mc_covariance(tl, zero, 1000000, 1);
    CHECK(std::abs(mc.covariance(0, 0) - 1.0) <= 5.0 * mc.std_error(0, 0));
    CHECK(mc.std_error(0, 0) > 0.0);
    CHECK(mc.std_error(0, 0) < 0.01);
  }

  SUBCASE("same seed gives a bitwise-identical estimate") {
    const McCovariance a = mc_covariance(tl, zero, 20000, 42);
    const McCovariance b = mc_covariance(tl, zero, 20000, 42);
    CHECK(a.covariance(0, 0) == b.covariance(0, 0));
    CHECK(a.std_error(0, 0) == b.std_error(0, 0));
    const McCovariance c = mc_covariance(tl, zero, 20000, 43);
    CHECK(a.covariance(0, 0) != c.covariance(0, 0));
  }

  SUBCASE("error shrinks roughly like 1/sqrt(samples)") {
    std::vector<double> err_small, err_large;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      err_small.push_back(
          std::abs(mc_covariance(tl, zero, 50000, seed).covariance(0, 0) - 1.0));
      err_large.push_back(
          std::abs(mc_covariance(tl, zero, 200000, seed).covariance(0, 0) - 1.0));
    }
    std::sort(err_small.begin(), err_small.end());
    std::sort(err_large.begin(), err_large.end());
    CHECK(err_large[10] <= 0.6 * err_small[10]);
  }

  SUBCASE("multi-observable sampling stays close to the exact covariance") {
    const Ensemble ising = ising_ring(4, 1.0, 0.0);
    const std::vector<double> at{-0.3, 0.2};
    const McCovariance mc = mc_covariance(ising, at, 400000, 9);
    const SymMat exact = covariance_metric(ising, at);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b <= a; ++b)
        CHECK(std::abs(mc.covariance(a, b) - exact(a, b)) <=
              5.0 * std::max(mc.std_error(a, b), 1e-6));
  }
}

TEST_CASE("log partition accepts composed jet inputs") {
  // I_a = tanh(u_a): the enumeration must push the curvature of the inputs
  // through the chain rule, not just the seed case.
  const Ensemble ens = ising_ring(5, 1.0, 0.2);
  auto composed = [&](std::span<const Jet> u) {
    std::vector<Jet> I{ad::tanh(u[0]), ad::tanh(u[1])};
    return log_partition(ens, I);
  };
  Rng rng(909);
  for (int rep = 0; rep < 10; ++rep) {
    const std::vector<double> at{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto s = ad::seed(at, 2);
    const Jet out = composed(s);

    // oracle: chain rule assembled by hand from the seed-path derivatives
    const std::vector<double> inner{std::tanh(at[0]), std::tanh(at[1])};
    const Jet phi = potential_jet(ens, inner, 2);
    std::vector<double> d1(2), d2(2);
    for (int a = 0; a < 2; ++a) {
      const double t = std::tanh(at[a]);
      d1[a] = 1.0 - t * t;
      d2[a] = -2.0 * t * (1.0 - t * t);
    }
    CHECK(std::abs(out.value - phi.value) <= 1e-12);
    for (int a = 0; a < 2; ++a)
      CHECK(std::abs(out.grad[a] - phi.grad[a] * d1[a]) <= 1e-11);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b <= a; ++b) {
        double expected = phi.hess_at(a, b) * d1[a] * d1[b];
        if (a == b) expected += phi.grad[a] * d2[a];
        CHECK(std::abs(out.hess_at(a, b) - expected) <= 1e-10);
      }
  }
}
