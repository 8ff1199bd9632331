#ifndef CTH_JET_HPP
#define CTH_JET_HPP

#include <span>
#include <vector>

#include "cth/errors.hpp"
#include "cth/linalg.hpp"

namespace cth::ad {

/// Truncated multivariate Taylor value: function value, gradient and
/// Hessian (and, at order 3, the symmetric third-derivative array) with
/// respect to a fixed set of seed variables. All arithmetic applies the
/// chain rule exactly, so derivatives of composed expressions match the
/// analytic ones to machine precision.
///
/// Storage is packed-symmetric: hess[(i,j)] with i >= j at i*(i+1)/2+j,
/// third[(i,j,k)] sorted ascending at k(k+1)(k+2)/6 + j(j+1)/2 + i.
struct Jet {
  int order = 2; // 1, 2 or 3
  double value = 0.0;
  std::vector<double> grad;  // length v
  std::vector<double> hess;  // packed, order >= 2
  std::vector<double> third; // packed, order == 3

  Jet() = default;
  Jet(int order_, int width);

  int width() const { return static_cast<int>(grad.size()); }

  static std::size_t pair_index(int i, int j) { return SymMat::packed_index(i, j); }
  static std::size_t triple_index(int i, int j, int k);
  static std::size_t pair_count(int v) { return SymMat::packed_size(v); }
  static std::size_t triple_count(int v) {
    return static_cast<std::size_t>(v) * (v + 1) * (v + 2) / 6;
  }

  double hess_at(int i, int j) const { return hess[pair_index(i, j)]; }
  double third_at(int i, int j, int k) const { return third[triple_index(i, j, k)]; }

  /// Constant with zero derivative parts.
  static Jet constant(double value, int order, int width);

  SymMat hessian_matrix() const;
  bool finite() const;
};

/// Seed v independent variables: jet i carries values[i] with gradient e_i
/// and zero higher parts.
std::vector<Jet> seed(std::span<const double> values, int order);

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator+(const Jet& a, double c);
Jet operator+(double c, const Jet& a);
Jet operator-(const Jet& a, double c);
Jet operator-(double c, const Jet& a);
Jet operator*(const Jet& a, double c);
Jet operator*(double c, const Jet& a);
Jet operator/(const Jet& a, double c);
Jet operator/(double c, const Jet& a);

Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet tanh(const Jet& a);
Jet pow(const Jet& a, double exponent);

/// Overflow-safe log(sum(exp(args))). The running maximum is subtracted
/// before exponentiating. First-class rather than composed from exp/log so
/// that enumerated partition functions stay finite.
Jet log_sum_exp(std::span<const Jet> args);

/// sum_i coeffs[i] * jets[i] + constant, computed in one pass.
Jet linear_combination(std::span<const double> coeffs, std::span<const Jet> jets,
                       double constant);

/// Streaming accumulator behind log_sum_exp. Terms may be fed one at a
/// time (enumerated ensembles never materialize all their exponent jets),
/// partial accumulators merge deterministically, and every running sum is
/// Kahan-compensated.
///
/// With softmax weights w_i, the accumulated moments of the argument jets
/// u_i reproduce the multivariate chain rule of log-sum-exp:
///   grad  = <du>
///   hess  = <d2u> + <du du> - <du><du>
///   third = <d3u> + sym3(<d2u du> - <d2u><du>)
///           + <du du du> - sym3(<du du><du>) + 2<du><du><du>
/// where <.> is the w-weighted mean and sym3 symmetrizes over the three
/// derivative slots. The cubic combination is the weighted third central
/// moment, matching the cumulant structure of exponential families.
class LogSumExpAccumulator {
public:
  LogSumExpAccumulator(int order, int width);

  void add(const Jet& term);
  /// Affine term value + grad . seeds (zero Hessian and third part).
  void add_affine(double value, std::span<const double> grad);
  /// Raw term; empty hess/third spans mean structurally zero parts.
  void add_term(double value, std::span<const double> grad,
                std::span<const double> hess, std::span<const double> third);
  void merge(const LogSumExpAccumulator& other);
  bool empty() const { return count_ == 0; }
  Jet result() const;

private:
  void rescale(double new_max);
  void add_parts(double value, const double* grad, const double* hess, const double* third);

  int order_;
  int width_;
  std::size_t count_ = 0;
  double max_ = 0.0;
  double min_ = 0.0;
  KahanAcc wsum_;
  std::vector<KahanAcc> a1_;  // <grad>              (v)
  std::vector<KahanAcc> a2_;  // <grad grad>         (packed2)
  std::vector<KahanAcc> b_;   // <hess>              (packed2)
  std::vector<KahanAcc> a3_;  // <grad grad grad>    (packed3, order 3)
  std::vector<KahanAcc> c_;   // <hess (x) grad>     (packed2 * v, order 3)
  std::vector<KahanAcc> t_;   // <third>             (packed3, order 3)
};

} // namespace cth::ad

#endif
