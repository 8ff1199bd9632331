#ifndef CTH_EXTERIOR_HPP
#define CTH_EXTERIOR_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cth/errors.hpp"
#include "cth/scalar_map.hpp"

namespace cth {

/// Basis bookkeeping for antisymmetric tensors in dimension d <= 11:
/// per degree, the list of index-set bitmasks in lexicographic order of the
/// increasing index tuples, plus the reverse lookup.
class FormBasis {
public:
  static constexpr int kMaxDim = 11;
  explicit FormBasis(int dim);

  int dim() const { return dim_; }
  std::size_t count(int degree) const { return masks_[degree].size(); }
  std::uint32_t mask_of(int degree, std::size_t index) const {
    return masks_[degree][index];
  }
  std::size_t index_of(std::uint32_t mask) const { return index_of_mask_[mask]; }
  std::span<const std::uint32_t> masks(int degree) const { return masks_[degree]; }

  /// Shared per-dimension instance.
  static const FormBasis& get(int dim);

private:
  int dim_;
  std::vector<std::vector<std::uint32_t>> masks_;
  std::vector<std::size_t> index_of_mask_;
};

/// Antisymmetric degree-k tensor at a point, dense over the C(d, k) basis
/// of strictly increasing index tuples. Only increasing tuples are stored,
/// so antisymmetry is structural.
class KForm {
public:
  KForm() = default;
  KForm(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  std::size_t size() const { return coeffs_.size(); }
  double operator[](std::size_t basis_index) const { return coeffs_[basis_index]; }
  double& operator[](std::size_t basis_index) { return coeffs_[basis_index]; }
  double coeff_for_mask(std::uint32_t mask) const;
  double& coeff_for_mask(std::uint32_t mask);
  std::span<const double> coeffs() const { return coeffs_; }

  double max_abs() const;

private:
  int dim_ = 0;
  int degree_ = 0;
  std::vector<double> coeffs_;
};

/// Alternating product. Terms contributing to one output coefficient are
/// summed in a canonical splitting order, so alpha ^ beta and beta ^ alpha
/// agree bitwise up to the graded sign.
KForm wedge(const KForm& alpha, const KForm& beta);

/// A one-form field: d coefficient maps a_mu(x) over the d coordinates,
/// each built from jet elementary operations.
struct CoefficientField {
  int dim = 0;
  std::vector<ScalarMap> components;
};

/// Pointwise value of the field as a degree-1 form.
KForm one_form_at(const CoefficientField& omega, std::span<const double> at);

/// (d omega)_{mu nu} = d_mu a_nu - d_nu a_mu by forward-mode jets.
KForm exterior_derivative(const CoefficientField& omega, std::span<const double> at);

/// Top coefficient of eta ^ (d eta)^n at `at`; dim must equal 2n + 1.
/// For a Darboux contact form this is n! up to sign.
double nonintegrability_volume(const CoefficientField& eta, std::span<const double> at,
                               int n);

} // namespace cth

#endif
