#include "cth/exterior.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <memory>
#include <mutex>

namespace cth {

using ad::Jet;

FormBasis::FormBasis(int dim) : dim_(dim) {
  if (dim < 0 || dim > kMaxDim)
    throw InvalidArgument("form basis: dimension must be in [0, 11]");
  masks_.resize(dim + 1);
  index_of_mask_.assign(std::size_t{1} << dim, 0);
  // Lexicographic order of increasing index tuples: generate recursively.
  for (int k = 0; k <= dim; ++k) {
    std::vector<std::uint32_t>& out = masks_[k];
    std::vector<int> tuple(k);
    auto rec = [&](auto&& self, int pos, int next) -> void {
      if (pos == k) {
        std::uint32_t mask = 0;
        for (int idx : tuple) mask |= 1u << idx;
        index_of_mask_[mask] = out.size();
        out.push_back(mask);
        return;
      }
      for (int i = next; i < dim; ++i) {
        tuple[pos] = i;
        self(self, pos + 1, i + 1);
      }
    };
    rec(rec, 0, 0);
  }
}

const FormBasis& FormBasis::get(int dim) {
  static std::array<std::unique_ptr<FormBasis>, kMaxDim + 1> cache;
  static std::mutex mutex;
  if (dim < 0 || dim > kMaxDim)
    throw InvalidArgument("form basis: dimension must be in [0, 11]");
  std::lock_guard lock(mutex);
  if (!cache[dim]) cache[dim] = std::make_unique<FormBasis>(dim);
  return *cache[dim];
}

KForm::KForm(int dim, int degree) : dim_(dim), degree_(degree) {
  if (degree < 0 || degree > dim)
    throw InvalidArgument("k-form: degree must be in [0, dim]");
  coeffs_.assign(FormBasis::get(dim).count(degree), 0.0);
}

double KForm::coeff_for_mask(std::uint32_t mask) const {
  return coeffs_[FormBasis::get(dim_).index_of(mask)];
}

double& KForm::coeff_for_mask(std::uint32_t mask) {
  return coeffs_[FormBasis::get(dim_).index_of(mask)];
}

double KForm::max_abs() const {
  double m = 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

namespace {

/// Parity of the shuffle merging disjoint index sets a and b: counts the
/// transpositions needed to sort the concatenation (a..., b...).
int shuffle_sign(std::uint32_t a, std::uint32_t b) {
  int inversions = 0;
  for (std::uint32_t bits = b; bits != 0; bits &= bits - 1) {
    const int pos = std::countr_zero(bits);
    inversions += std::popcount(a >> (pos + 1));
  }
  return inversions % 2 == 0 ? 1 : -1;
}

} // namespace

KForm wedge(const KForm& alpha, const KForm& beta) {
  if (alpha.dim() != beta.dim()) throw InvalidArgument("wedge: dimension mismatch");
  const int d = alpha.dim();
  const int k = alpha.degree();
  const int l = beta.degree();
  if (k + l > d) throw InvalidArgument("wedge: degree sum exceeds dimension");

  const FormBasis& basis = FormBasis::get(d);
  KForm out(d, k + l);

  // Per output coefficient, gather the contributing splittings and sum
  // them keyed by the alpha-side mask. The per-term products and signs are
  // then identical (up to the global graded sign) whichever operand comes
  // first, so graded anticommutativity holds bitwise.
  std::vector<std::pair<std::uint32_t, double>> terms;
  for (std::size_t t = 0; t < out.size(); ++t) {
    const std::uint32_t target = basis.mask_of(k + l, t);
    terms.clear();
    for (std::size_t ia = 0; ia < alpha.size(); ++ia) {
      const std::uint32_t ma = basis.mask_of(k, ia);
      if ((ma & target) != ma) continue;
      const std::uint32_t mb = target & ~ma;
      const double a = alpha[ia];
      const double b = beta.coeff_for_mask(mb);
      const double prod = a * b;
      const int sign = shuffle_sign(ma, mb);
      terms.emplace_back(std::min(ma, mb), sign > 0 ? prod : -prod);
    }
    std::sort(terms.begin(), terms.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    // Equal degrees put both assignments of a splitting under one key;
    // summing such a pair with a single (commutative) add keeps the result
    // independent of the operand order.
    double sum = 0.0;
    for (std::size_t i = 0; i < terms.size();) {
      if (i + 1 < terms.size() && terms[i + 1].first == terms[i].first) {
        sum += terms[i].second + terms[i + 1].second;
        i += 2;
      } else {
        sum += terms[i].second;
        ++i;
      }
    }
    out[t] = sum;
  }
  return out;
}

KForm one_form_at(const CoefficientField& omega, std::span<const double> at) {
  if (static_cast<int>(at.size()) != omega.dim ||
      static_cast<int>(omega.components.size()) != omega.dim)
    throw InvalidArgument("one_form_at: dimension mismatch");
  KForm out(omega.dim, 1);
  const std::vector<Jet> seeds = ad::seed(at, 1);
  for (int mu = 0; mu < omega.dim; ++mu) out[mu] = omega.components[mu](seeds).value;
  return out;
}

KForm exterior_derivative(const CoefficientField& omega, std::span<const double> at) {
  if (static_cast<int>(at.size()) != omega.dim ||
      static_cast<int>(omega.components.size()) != omega.dim)
    throw InvalidArgument("exterior_derivative: dimension mismatch");
  const int d = omega.dim;
  const std::vector<Jet> seeds = ad::seed(at, 1);
  std::vector<std::vector<double>> grad(d);
  for (int nu = 0; nu < d; ++nu) grad[nu] = omega.components[nu](seeds).grad;

  KForm out(d, 2);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = mu + 1; nu < d; ++nu)
      out.coeff_for_mask((1u << mu) | (1u << nu)) = grad[nu][mu] - grad[mu][nu];
  return out;
}

double nonintegrability_volume(const CoefficientField& eta, std::span<const double> at,
                               int n) {
  if (eta.dim != 2 * n + 1)
    throw InvalidArgument("nonintegrability_volume: dim must equal 2n + 1");
  const KForm eta_val = one_form_at(eta, at);
  const KForm d_eta = exterior_derivative(eta, at);
  KForm acc = eta_val;
  for (int i = 0; i < n; ++i) acc = wedge(acc, d_eta);
  return acc[0]; // top forms have exactly one coefficient
}

} // namespace cth
