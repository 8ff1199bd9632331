#ifndef CTH_ENSEMBLE_HPP
#define CTH_ENSEMBLE_HPP

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cth/jet.hpp"
#include "cth/linalg.hpp"
#include "cth/scalar_map.hpp"

namespace cth {

/// One microstate record of an enumerated model.
struct Microstate {
  std::vector<double> observables;
  double log_degeneracy = 0.0;
};

/// Random-access supplier of microstates. Large models (the Ising ring
/// enumerates 2^N states) generate records on the fly instead of storing
/// the whole table.
class MicrostateSource {
public:
  virtual ~MicrostateSource() = default;
  virtual std::size_t size() const = 0;
  virtual int n_observables() const = 0;
  /// Writes the n observable values into `out`, returns log degeneracy.
  virtual double fetch(std::size_t index, std::span<double> out) const = 0;
};

/// A statistical model: either an enumerated microstate table with n
/// observables, or a closed-form Massieu potential phi(I). Immutable value
/// type; copies share the underlying data.
class Ensemble {
public:
  enum class Kind { Enumerated, Analytic };

  static Ensemble enumerated(std::shared_ptr<const MicrostateSource> source,
                             std::vector<std::string> names, std::string model_name = "file",
                             std::vector<std::pair<std::string, double>> params = {});
  static Ensemble analytic(ScalarMap potential, int n, std::vector<std::string> names,
                           std::string model_name = "analytic",
                           std::vector<std::pair<std::string, double>> params = {},
                           std::vector<std::pair<double, double>> domain_box = {});

  Kind kind() const;
  int n() const;
  const std::vector<std::string>& names() const;
  const std::string& model_name() const;
  const std::vector<std::pair<std::string, double>>& model_params() const;

  // Enumerated access (UnsupportedOperation for analytic models).
  std::size_t microstate_count() const;
  Microstate microstate(std::size_t index) const;
  const MicrostateSource& source() const;
  /// [min, max] of observable a over the microstates (the achievable range
  /// of its average).
  std::pair<double, double> observable_range(int a) const;

  const ScalarMap& potential() const; // analytic only
  const std::vector<std::pair<double, double>>& domain_box() const; // analytic only

private:
  struct Impl;
  explicit Ensemble(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// The exponential distribution rho(x) = exp(-phi + I.H(x) + log_g(x)) of
/// an enumerated ensemble at intensive parameters I.
struct GibbsState {
  Ensemble ensemble;
  std::vector<double> I;
  double phi = 0.0;
  std::vector<double> probs;
};

/// phi(I) = ln sum_x exp(I.H(x) + log_g(x)) as a jet, so the gradient
/// (equations of state) and Hessian (metric) ride along. For analytic
/// ensembles this evaluates the stored potential.
ad::Jet log_partition(const Ensemble& ens, std::span<const ad::Jet> I,
                      unsigned threads = 1);

/// log_partition with I seeded internally at the requested order.
ad::Jet potential_jet(const Ensemble& ens, std::span<const double> I, int order,
                      unsigned threads = 1);

GibbsState gibbs_state(const Ensemble& ens, std::span<const double> I,
                       unsigned threads = 1);

/// E_a = d phi / d I^a from the jet gradient.
std::vector<double> equations_of_state(const Ensemble& ens, std::span<const double> I,
                                       unsigned threads = 1);

/// g_ab = <(H_a - <H_a>)(H_b - <H_b>)> by centered exact summation over the
/// microstates (enumerated ensembles only).
SymMat covariance_metric(const Ensemble& ens, std::span<const double> I,
                         unsigned threads = 1);

/// s(x) = phi - I.H(x); equals -ln probs[x] + log_g(x).
double microscopic_entropy(const GibbsState& state, std::size_t index);

/// S = -sum probs ln(probs / degeneracy weight), with 0 ln 0 = 0.
double shannon_entropy(const GibbsState& state);

struct McCovariance {
  SymMat covariance;
  SymMat std_error; // delete-1 jackknife standard errors, entrywise
  std::size_t samples = 0;
};

/// Sample covariance from `samples` i.i.d. microstate draws (inverse CDF
/// over the cumulative table). Deterministic for a fixed seed and thread
/// count; bit-identical for threads = 1.
McCovariance mc_covariance(const Ensemble& ens, std::span<const double> I,
                           std::size_t samples, std::uint64_t seed,
                           unsigned threads = 1);

// ------------------------------------------------------------------ models

/// Two microstates with observable values {0, eps}.
Ensemble two_level(double eps);

/// Periodic Ising chain of N spins, observables (total energy, total
/// magnetization) with H_E = -J sum s_i s_{i+1} - h sum s_i. Enumerates all
/// 2^N states, N <= 20.
Ensemble ising_ring(int N, double J, double h);

/// Analytic model phi(I) = 1/2 I^T C I + b.I with C symmetric positive
/// definite.
Ensemble quadratic(const SymMat& C, std::vector<double> b);

/// Enumerated model from the JSON schema
/// {"n": int, "names": [str], "microstates": [{"H": [...], "log_g": ...}]}.
Ensemble ensemble_from_json_text(const std::string& text);
Ensemble ensemble_from_json_file(const std::string& path);

} // namespace cth

#endif
