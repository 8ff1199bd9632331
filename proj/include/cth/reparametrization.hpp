#ifndef CTH_REPARAMETRIZATION_HPP
#define CTH_REPARAMETRIZATION_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cth/jet.hpp"
#include "cth/linalg.hpp"

namespace cth {

/// One smooth strictly monotone scalar map with a declared inverse, usable
/// on plain doubles and on jets.
class SmoothMap1 {
public:
  enum class Kind { Identity, Affine, Exp, Ln, TanhAffine, OddPower };

  static SmoothMap1 identity();
  /// a x + b with a != 0.
  static SmoothMap1 affine(double a, double b);
  static SmoothMap1 exp_map();
  /// ln x, domain x > 0.
  static SmoothMap1 ln_map();
  /// c tanh(a x) + d x; requires d > 0 and d + min(c a, 0) > 0 so the
  /// derivative stays positive everywhere.
  static SmoothMap1 tanh_affine(double a, double c, double d);
  /// x^3 + eps x with eps >= 0 (eps = 0 keeps the map invertible but makes
  /// the Jacobian vanish at the origin, which the pointwise guards catch).
  static SmoothMap1 odd_power(double eps);

  Kind kind() const { return kind_; }
  double param(const char* name) const;

  double operator()(double x) const;
  ad::Jet operator()(const ad::Jet& x) const;
  double derivative(double x) const;
  /// The derivative as a jet-expressible map (needed when coefficient
  /// fields built from Jacobian entries are differentiated again).
  ad::Jet derivative_jet(const ad::Jet& x) const;

  double inverse(double y) const;
  bool has_closed_inverse_jet() const;
  /// Inverse as a jet map. Closed-form kinds compose elementary ops; the
  /// Newton-inverted kinds build the jet from the implicit derivative
  /// 1 / f'(f^{-1}(y)) (first order only).
  ad::Jet inverse_jet(const ad::Jet& y) const;

private:
  SmoothMap1(Kind kind, double p0, double p1, double p2)
      : kind_(kind), p0_(p0), p1_(p1), p2_(p2) {}
  Kind kind_ = Kind::Identity;
  double p0_ = 0, p1_ = 0, p2_ = 0;
};

/// A phase-space reparametrization Psi: (phi, E, I) -> (phi, Etilde(E),
/// Itilde(I)). The intensive side is (invertible constant mix) o (diagonal
/// smooth maps); the extensive side is diagonal. Jacobians come from jets.
class Reparametrization {
public:
  static Reparametrization identity(int n);
  Reparametrization(std::vector<SmoothMap1> i_maps, std::vector<SmoothMap1> e_maps,
                    std::optional<Mat> mix = std::nullopt);

  int n() const { return static_cast<int>(i_maps_.size()); }
  bool is_identity() const;
  bool diagonal() const { return !mix_.has_value(); }
  const std::vector<SmoothMap1>& i_maps() const { return i_maps_; }
  const std::vector<SmoothMap1>& e_maps() const { return e_maps_; }
  const Mat& mix() const;

  std::vector<double> i_forward(std::span<const double> I) const;
  std::vector<double> i_inverse(std::span<const double> Itilde) const;
  /// Lambda^atilde_a = d Itilde^atilde / d I^a.
  Mat i_jacobian(std::span<const double> I) const;
  /// Component atilde of Itilde as a jet map of the I jets.
  ad::Jet i_component(int atilde, std::span<const ad::Jet> I) const;
  /// Component atilde of Lambda row contraction: sum_a coeff_a d Itilde/d I^a
  /// is assembled by callers from jacobian_entry jets.
  ad::Jet i_jacobian_entry(int atilde, int a, const ad::Jet& I_a) const;

  std::vector<double> e_forward(std::span<const double> E) const;
  std::vector<double> e_inverse(std::span<const double> Etilde) const;
  Mat e_jacobian(std::span<const double> E) const;
  ad::Jet e_component(int atilde, const ad::Jet& E_atilde) const;

  /// Tilde extensive values via the one-form transformation law,
  /// (Lambda^{-1})^T E, with the Jacobian inverted as a matrix.
  std::vector<double> tilde_extensive(std::span<const double> I,
                                      std::span<const double> E) const;
  /// The same values via the embedding relation E_at = E_a dI^a/dItilde^at,
  /// differentiating the declared inverse maps instead of inverting the
  /// forward Jacobian.
  std::vector<double> tilde_extensive_via_inverse_maps(std::span<const double> I,
                                                       std::span<const double> E) const;

  static Reparametrization from_json_text(const std::string& text, int n);
  static Reparametrization from_json_file(const std::string& path, int n);

private:
  std::vector<SmoothMap1> i_maps_;
  std::vector<SmoothMap1> e_maps_;
  std::optional<Mat> mix_;
  std::optional<Mat> mix_inv_;
};

class Rng;

struct RepDrawOptions {
  bool allow_mix = true;
  /// Scale the (affine) extensive maps by the reciprocal intensive-map
  /// derivatives at `i_hint`, keeping det(DEtilde^T Lambda) within
  /// [0.95, 1.2]^n near that point. Used by the contact-volume checks.
  bool dual_scale_e = false;
  std::span<const double> i_hint = {};
};

/// Draw a reparametrization from the shipped map library: per axis one of
/// affine / tanh-affine / odd-power / exp, optionally composed with a
/// rotation mix on the intensive side, with affine extensive maps.
Reparametrization sample_reparametrization(Rng& rng, int n,
                                           const RepDrawOptions& options = {});

} // namespace cth

#endif
