#include "cth/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

#include "cth/rng.hpp"

namespace cth {

using ad::Jet;
using ad::LogSumExpAccumulator;

struct Ensemble::Impl {
  Kind kind = Kind::Enumerated;
  int n = 0;
  std::vector<std::string> names;
  std::string model_name;
  std::vector<std::pair<std::string, double>> params;

  std::shared_ptr<const MicrostateSource> source; // enumerated
  std::vector<std::pair<double, double>> obs_range;
  ScalarMap potential;                            // analytic
  std::vector<std::pair<double, double>> domain;  // analytic, empty = all of R^n
};

namespace {

constexpr double kAffinePivotTol = 1e-10;

/// Split [0, count) into `threads` contiguous ranges and run `work` on
/// each, collecting per-partition results merged in partition order by the
/// caller. Exceptions propagate.
template <typename Part, typename Work>
std::vector<Part> run_partitioned(std::size_t count, unsigned threads, Work&& work) {
  threads = std::max(1u, threads);
  if (count < threads) threads = static_cast<unsigned>(std::max<std::size_t>(1, count));
  std::vector<Part> parts;
  parts.reserve(threads);
  if (threads == 1) {
    parts.push_back(work(std::size_t{0}, count));
    return parts;
  }
  std::vector<std::optional<Part>> slots(threads);
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = std::min(count, t * chunk);
    const std::size_t hi = std::min(count, lo + chunk);
    pool.emplace_back([&, t, lo, hi] {
      try {
        slots[t] = work(lo, hi);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& s : slots) parts.push_back(std::move(*s));
  return parts;
}

void check_point(const Ensemble& ens, std::span<const double> I) {
  if (static_cast<int>(I.size()) != ens.n())
    throw InvalidArgument("intensive point has length " + std::to_string(I.size()) +
                          ", model has n = " + std::to_string(ens.n()));
  for (double x : I)
    if (!std::isfinite(x)) throw InvalidArgument("non-finite intensive parameter");
}

const MicrostateSource& enumerated_source(const Ensemble& ens, const char* op) {
  if (ens.kind() != Ensemble::Kind::Enumerated)
    throw UnsupportedOperation(std::string(op) + ": analytic ensemble has no microstates");
  return ens.source();
}

/// Scalar log-partition value and (optionally) the per-state exponents.
double scalar_log_partition(const MicrostateSource& src, std::span<const double> I,
                            unsigned threads) {
  LogSumExpAccumulator total(1, 0);
  auto parts = run_partitioned<LogSumExpAccumulator>(
      src.size(), threads, [&](std::size_t lo, std::size_t hi) {
        LogSumExpAccumulator acc(1, 0);
        std::vector<double> h(src.n_observables());
        for (std::size_t x = lo; x < hi; ++x) {
          const double log_g = src.fetch(x, h);
          double e = log_g;
          for (std::size_t a = 0; a < I.size(); ++a) e += I[a] * h[a];
          acc.add_affine(e, {});
        }
        return acc;
      });
  for (auto& p : parts) total.merge(p);
  return total.result().value;
}

} // namespace

Ensemble Ensemble::enumerated(std::shared_ptr<const MicrostateSource> source,
                              std::vector<std::string> names, std::string model_name,
                              std::vector<std::pair<std::string, double>> params) {
  if (!source) throw InvalidArgument("ensemble: null microstate source");
  const int n = source->n_observables();
  if (n < 1) throw InvalidArgument("ensemble: needs at least one observable");
  if (source->size() < 2) throw InvalidArgument("ensemble: needs at least two microstates");
  if (names.empty())
    for (int a = 0; a < n; ++a) names.push_back("H" + std::to_string(a + 1));
  if (static_cast<int>(names.size()) != n)
    throw InvalidArgument("ensemble: names/observable count mismatch");

  std::vector<double> h(n);
  std::vector<std::pair<double, double>> range(
      n, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  for (std::size_t x = 0; x < source->size(); ++x) {
    const double log_g = source->fetch(x, h);
    if (!std::isfinite(log_g)) throw InvalidArgument("ensemble: non-finite log degeneracy");
    for (int a = 0; a < n; ++a) {
      if (!std::isfinite(h[a]))
        throw InvalidArgument("ensemble: non-finite observable value");
      range[a].first = std::min(range[a].first, h[a]);
      range[a].second = std::max(range[a].second, h[a]);
    }
  }

  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Enumerated;
  impl->n = n;
  impl->names = std::move(names);
  impl->model_name = std::move(model_name);
  impl->params = std::move(params);
  impl->source = std::move(source);
  impl->obs_range = std::move(range);
  Ensemble ens(impl);

  // Non-degeneracy: the observables must be affinely independent across
  // microstates, i.e. the I = 0 covariance is positive definite.
  const std::vector<double> zero(n, 0.0);
  const SymMat cov0 = covariance_metric(ens, zero);
  if (min_ldlt_pivot(cov0) <= kAffinePivotTol)
    throw InvalidArgument(
        "ensemble: observables are affinely dependent across microstates "
        "(I = 0 covariance is not positive definite)");
  return ens;
}

Ensemble Ensemble::analytic(ScalarMap potential, int n, std::vector<std::string> names,
                            std::string model_name,
                            std::vector<std::pair<std::string, double>> params,
                            std::vector<std::pair<double, double>> domain_box) {
  if (n < 1) throw InvalidArgument("ensemble: n must be >= 1");
  if (!potential) throw InvalidArgument("ensemble: null potential");
  if (names.empty())
    for (int a = 0; a < n; ++a) names.push_back("I" + std::to_string(a + 1));
  if (static_cast<int>(names.size()) != n)
    throw InvalidArgument("ensemble: names/parameter count mismatch");
  if (!domain_box.empty() && static_cast<int>(domain_box.size()) != n)
    throw InvalidArgument("ensemble: domain box dimension mismatch");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Analytic;
  impl->n = n;
  impl->names = std::move(names);
  impl->model_name = std::move(model_name);
  impl->params = std::move(params);
  impl->potential = std::move(potential);
  impl->domain = std::move(domain_box);
  return Ensemble(impl);
}

Ensemble::Kind Ensemble::kind() const { return impl_->kind; }
int Ensemble::n() const { return impl_->n; }
const std::vector<std::string>& Ensemble::names() const { return impl_->names; }
const std::string& Ensemble::model_name() const { return impl_->model_name; }
const std::vector<std::pair<std::string, double>>& Ensemble::model_params() const {
  return impl_->params;
}

std::size_t Ensemble::microstate_count() const {
  if (impl_->kind != Kind::Enumerated)
    throw UnsupportedOperation("microstate_count: analytic ensemble");
  return impl_->source->size();
}

Microstate Ensemble::microstate(std::size_t index) const {
  const MicrostateSource& src = source();
  if (index >= src.size()) throw InvalidArgument("microstate index out of range");
  Microstate m;
  m.observables.resize(impl_->n);
  m.log_degeneracy = src.fetch(index, m.observables);
  return m;
}

const MicrostateSource& Ensemble::source() const {
  if (impl_->kind != Kind::Enumerated)
    throw UnsupportedOperation("source: analytic ensemble");
  return *impl_->source;
}

std::pair<double, double> Ensemble::observable_range(int a) const {
  if (impl_->kind != Kind::Enumerated)
    throw UnsupportedOperation("observable_range: analytic ensemble");
  if (a < 0 || a >= impl_->n) throw InvalidArgument("observable index out of range");
  return impl_->obs_range[a];
}

const ScalarMap& Ensemble::potential() const {
  if (impl_->kind != Kind::Analytic)
    throw UnsupportedOperation("potential: enumerated ensemble");
  return impl_->potential;
}

const std::vector<std::pair<double, double>>& Ensemble::domain_box() const {
  if (impl_->kind != Kind::Analytic)
    throw UnsupportedOperation("domain_box: enumerated ensemble");
  return impl_->domain;
}

Jet log_partition(const Ensemble& ens, std::span<const Jet> I, unsigned threads) {
  if (static_cast<int>(I.size()) != ens.n())
    throw InvalidArgument("log_partition: point length does not match model n");
  for (const Jet& j : I) {
    if (j.order != I[0].order || j.width() != I[0].width())
      throw InvalidArgument("log_partition: mixed jet orders or widths");
    if (!j.finite()) throw InvalidArgument("log_partition: non-finite jet input");
  }

  if (ens.kind() == Ensemble::Kind::Analytic) {
    const auto& box = ens.domain_box();
    for (std::size_t a = 0; a < box.size(); ++a)
      if (I[a].value < box[a].first || I[a].value > box[a].second)
        throw DomainError("log_partition: point outside the declared domain box");
    const Jet out = ens.potential()(I);
    if (!out.finite())
      throw DomainError("log_partition: analytic potential returned non-finite jet");
    return out;
  }

  const MicrostateSource& src = ens.source();
  const int order = I[0].order;
  const int width = I[0].width();
  bool affine = true;
  for (const Jet& j : I) {
    for (double h : j.hess)
      if (h != 0.0) affine = false;
    for (double t : j.third)
      if (t != 0.0) affine = false;
  }

  LogSumExpAccumulator total(order, width);
  auto parts = run_partitioned<LogSumExpAccumulator>(
      src.size(), threads, [&](std::size_t lo, std::size_t hi) {
        LogSumExpAccumulator acc(order, width);
        const int n = ens.n();
        std::vector<double> h(n);
        std::vector<double> grad(width);
        std::vector<double> hess(affine || order < 2 ? 0 : Jet::pair_count(width));
        std::vector<double> third(affine || order < 3 ? 0 : Jet::triple_count(width));
        for (std::size_t x = lo; x < hi; ++x) {
          const double log_g = src.fetch(x, h);
          double value = log_g;
          std::fill(grad.begin(), grad.end(), 0.0);
          std::fill(hess.begin(), hess.end(), 0.0);
          std::fill(third.begin(), third.end(), 0.0);
          for (int a = 0; a < n; ++a) {
            const double c = h[a];
            value += c * I[a].value;
            for (int i = 0; i < width; ++i) grad[i] += c * I[a].grad[i];
            if (!affine) {
              for (std::size_t i = 0; i < hess.size(); ++i) hess[i] += c * I[a].hess[i];
              for (std::size_t i = 0; i < third.size(); ++i) third[i] += c * I[a].third[i];
            }
          }
          acc.add_term(value, grad, hess, third);
        }
        return acc;
      });
  for (auto& p : parts) total.merge(p);
  return total.result();
}

Jet potential_jet(const Ensemble& ens, std::span<const double> I, int order,
                  unsigned threads) {
  check_point(ens, I);
  const std::vector<Jet> seeds = ad::seed(I, order);
  return log_partition(ens, seeds, threads);
}

GibbsState gibbs_state(const Ensemble& ens, std::span<const double> I, unsigned threads) {
  check_point(ens, I);
  const MicrostateSource& src = enumerated_source(ens, "gibbs_state");
  const double phi = scalar_log_partition(src, I, threads);

  GibbsState state{ens, std::vector<double>(I.begin(), I.end()), phi, {}};
  state.probs.resize(src.size());
  auto parts = run_partitioned<int>(src.size(), threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> h(ens.n());
    for (std::size_t x = lo; x < hi; ++x) {
      const double log_g = src.fetch(x, h);
      double e = log_g - phi;
      for (std::size_t a = 0; a < I.size(); ++a) e += I[a] * h[a];
      state.probs[x] = std::exp(e);
    }
    return 0;
  });
  (void)parts;
  return state;
}

std::vector<double> equations_of_state(const Ensemble& ens, std::span<const double> I,
                                       unsigned threads) {
  return potential_jet(ens, I, 1, threads).grad;
}

SymMat covariance_metric(const Ensemble& ens, std::span<const double> I, unsigned threads) {
  check_point(ens, I);
  const MicrostateSource& src = enumerated_source(ens, "covariance_metric");
  const int n = ens.n();

  // Pass 1: phi and the means <H_a> in one weighted accumulation.
  LogSumExpAccumulator mean_acc(1, n);
  auto mean_parts = run_partitioned<LogSumExpAccumulator>(
      src.size(), threads, [&](std::size_t lo, std::size_t hi) {
        LogSumExpAccumulator acc(1, n);
        std::vector<double> h(n);
        for (std::size_t x = lo; x < hi; ++x) {
          const double log_g = src.fetch(x, h);
          double e = log_g;
          for (int a = 0; a < n; ++a) e += I[a] * h[a];
          acc.add_affine(e, h);
        }
        return acc;
      });
  for (auto& p : mean_parts) mean_acc.merge(p);
  const Jet first = mean_acc.result();
  const double phi = first.value;
  const std::vector<double> mean = first.grad;

  // Pass 2: centered second moments.
  using Sums = std::vector<KahanAcc>;
  auto parts = run_partitioned<Sums>(src.size(), threads, [&](std::size_t lo, std::size_t hi) {
    Sums sums(SymMat::packed_size(n));
    std::vector<double> h(n);
    for (std::size_t x = lo; x < hi; ++x) {
      const double log_g = src.fetch(x, h);
      double e = log_g - phi;
      for (int a = 0; a < n; ++a) e += I[a] * h[a];
      const double p = std::exp(e);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b <= a; ++b)
          sums[SymMat::packed_index(a, b)].add(p * (h[a] - mean[a]) * (h[b] - mean[b]));
    }
    return sums;
  });

  SymMat cov(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b <= a; ++b) {
      KahanAcc total;
      for (auto& part : parts) total.add_scaled(part[SymMat::packed_index(a, b)], 1.0);
      cov.at(a, b) = total.value();
    }
  return cov;
}

double microscopic_entropy(const GibbsState& state, std::size_t index) {
  const Microstate m = state.ensemble.microstate(index); // bounds-checked
  double s = state.phi;
  for (std::size_t a = 0; a < state.I.size(); ++a) s -= state.I[a] * m.observables[a];
  return s;
}

double shannon_entropy(const GibbsState& state) {
  const MicrostateSource& src = state.ensemble.source();
  KahanAcc sum;
  std::vector<double> h(state.ensemble.n());
  for (std::size_t x = 0; x < src.size(); ++x) {
    const double p = state.probs[x];
    if (p <= 0.0) continue;
    const double log_g = src.fetch(x, h);
    sum.add(-p * (std::log(p) - log_g));
  }
  return sum.value();
}

McCovariance mc_covariance(const Ensemble& ens, std::span<const double> I,
                           std::size_t samples, std::uint64_t seed, unsigned threads) {
  if (samples < 2)
    throw InvalidArgument("mc_covariance: needs at least 2 samples, got " +
                          std::to_string(samples));
  const GibbsState state = gibbs_state(ens, I, threads);
  const std::size_t m = state.probs.size();
  const int n = ens.n();

  std::vector<double> cdf(m);
  KahanAcc running;
  for (std::size_t x = 0; x < m; ++x) {
    running.add(state.probs[x]);
    cdf[x] = running.value();
  }
  cdf[m - 1] = 1.0;

  // Tally draws per microstate; the jackknife then runs over distinct
  // states instead of individual samples.
  using Tally = std::vector<std::uint64_t>;
  threads = std::max(1u, threads);
  auto tallies = run_partitioned<Tally>(samples, threads, [&](std::size_t lo, std::size_t hi) {
    Tally counts(m, 0);
    Rng rng = threads == 1 ? Rng(seed) : Rng::for_task(seed, lo);
    for (std::size_t k = lo; k < hi; ++k) {
      const double u = rng.uniform();
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const std::size_t x = std::min<std::size_t>(it - cdf.begin(), m - 1);
      ++counts[x];
    }
    return counts;
  });
  Tally counts(m, 0);
  for (const auto& t : tallies)
    for (std::size_t x = 0; x < m; ++x) counts[x] += t[x];

  const double K = static_cast<double>(samples);
  std::vector<double> h(n);
  std::vector<KahanAcc> s1(n);
  std::vector<KahanAcc> s2(SymMat::packed_size(n));
  for (std::size_t x = 0; x < m; ++x) {
    if (counts[x] == 0) continue;
    const double c = static_cast<double>(counts[x]);
    ens.source().fetch(x, h);
    for (int a = 0; a < n; ++a) s1[a].add(c * h[a]);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b <= a; ++b) s2[SymMat::packed_index(a, b)].add(c * h[a] * h[b]);
  }
  std::vector<double> mean(n);
  for (int a = 0; a < n; ++a) mean[a] = s1[a].value() / K;
  SymMat cov(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b <= a; ++b)
      cov.at(a, b) =
          (s2[SymMat::packed_index(a, b)].value() - K * mean[a] * mean[b]) / (K - 1.0);

  SymMat se(n);
  if (samples >= 3) {
    // Delete-1 jackknife: the leave-one-out estimate depends only on which
    // state the removed sample hit, so the sums collapse onto the tally.
    // Centered in a second pass; the raw sum of squares cancels away the
    // O(1/K) spread entirely.
    const std::size_t np = SymMat::packed_size(n);
    auto leave_one_out = [&](std::span<const double> hx, std::size_t ab, int a, int b) {
      const double s1a = s1[a].value() - hx[a];
      const double s1b = s1[b].value() - hx[b];
      const double s2ab = s2[ab].value() - hx[a] * hx[b];
      return (s2ab - s1a * s1b / (K - 1.0)) / (K - 2.0);
    };
    std::vector<KahanAcc> jsum(np);
    for (std::size_t x = 0; x < m; ++x) {
      if (counts[x] == 0) continue;
      const double c = static_cast<double>(counts[x]);
      ens.source().fetch(x, h);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b <= a; ++b) {
          const std::size_t ab = SymMat::packed_index(a, b);
          jsum[ab].add(c * leave_one_out(h, ab, a, b));
        }
    }
    std::vector<KahanAcc> jvar(np);
    for (std::size_t x = 0; x < m; ++x) {
      if (counts[x] == 0) continue;
      const double c = static_cast<double>(counts[x]);
      ens.source().fetch(x, h);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b <= a; ++b) {
          const std::size_t ab = SymMat::packed_index(a, b);
          const double centered = leave_one_out(h, ab, a, b) - jsum[ab].value() / K;
          jvar[ab].add(c * centered * centered);
        }
    }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b <= a; ++b) {
        const std::size_t ab = SymMat::packed_index(a, b);
        const double var = (K - 1.0) / K * jvar[ab].value();
        se.at(a, b) = std::sqrt(std::max(0.0, var));
      }
  } else {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b <= a; ++b) se.at(a, b) = std::numeric_limits<double>::infinity();
  }
  return {cov, se, samples};
}

} // namespace cth
