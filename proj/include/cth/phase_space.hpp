#ifndef CTH_PHASE_SPACE_HPP
#define CTH_PHASE_SPACE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cth/ensemble.hpp"
#include "cth/exterior.hpp"
#include "cth/linalg.hpp"
#include "cth/reparametrization.hpp"

namespace cth {

/// A point of the (2n+1)-dimensional thermodynamic phase space. Tensor
/// component layouts use the fixed coordinate order (phi, E_1..E_n,
/// I^1..I^n) throughout.
struct PhasePoint {
  double phi = 0.0;
  std::vector<double> E;
  std::vector<double> I;

  PhasePoint() = default;
  PhasePoint(double phi_, std::vector<double> E_, std::vector<double> I_);

  int n() const { return static_cast<int>(E.size()); }
  int dim() const { return 2 * n() + 1; }
  std::vector<double> coords() const;
  static PhasePoint from_coords(std::span<const double> coords);
};

/// Index helpers for the fixed coordinate order.
inline int phi_index() { return 0; }
inline int e_index(int a) { return 1 + a; }
inline int i_index(int n, int a) { return 1 + n + a; }

// -------------------------------------------------------- contact structure

/// eta_1 = d phi - E_a d I^a at the point: coefficients (1, 0..0, -E).
KForm eta1(const PhasePoint& at);

/// eta_2 = d phi - Etilde_at Lambda^at_a d I^a with Etilde = e_map(E) and
/// Lambda the i-map Jacobian at I. Throws SingularityError when
/// |det Lambda| <= 1e-10.
KForm eta2(const PhasePoint& at, const Reparametrization& rep);

/// eta_1 as a coefficient field over the phase-space coordinates.
CoefficientField eta1_field(int n);

/// eta_2 as a coefficient field (coefficients depend on both E and I).
CoefficientField eta2_field(const Reparametrization& rep);

/// Symmetrized dEtilde (x) dItilde expressed in original coordinates:
/// 1/2 (dEtilde/dE_b)(dItilde/dI^a) on the (E_b, I^a) blocks. The identity
/// reparametrization puts 1/2 on each (E_a, I^a) pair.
SymMat t_tensor(const PhasePoint& at, const Reparametrization& rep);
SymMat t_tensor(const PhasePoint& at);

/// G = eta (x) eta + t for the chosen reparametrization (identity gives
/// the canonical phase-space metric).
SymMat metric_G(const PhasePoint& at, const Reparametrization& rep);
SymMat metric_G(const PhasePoint& at);

// ------------------------------------------------------------- embeddings

struct Embedding {
  PhasePoint point;
  Mat tangent; // (2n+1) x n, columns are coordinate velocities
};

/// Equilibrium embedding I -> (phi(I), dphi/dI, I) with tangent rows
/// (E^T; Hess phi; Id).
Embedding embed(const Ensemble& ens, std::span<const double> I, unsigned threads = 1);

/// The same submanifold parametrized by the tilde intensive variables:
/// original-coordinate point, tangent J Lambda^{-1}.
Embedding embed(const Ensemble& ens, std::span<const double> I,
                const Reparametrization& rep, unsigned threads = 1);

/// Algebraic pullback (iota* T)_{ab} = T_{mu nu} J^mu_a J^nu_b.
SymMat pullback(const SymMat& tensor, const Mat& tangent);
/// Covector pullback (iota* w)_a = w_mu J^mu_a.
std::vector<double> pullback(const KForm& one_form, const Mat& tangent);

/// The equilibrium frame carried to the reparametrized chart: point
/// (phi, (Lambda^{-T})E, Itilde), tangent rows ((Lambda^{-T}E)^T;
/// Lambda^{-T} g Lambda^{-1}; Id) with respect to Itilde, plus the
/// Jacobian needed to transport pulled-back tensors to I components.
struct TildeFrame {
  PhasePoint point;
  Mat tangent;
  Mat lambda;
  Mat lambda_inv;
  double det_lambda = 0.0;
};
TildeFrame tilde_frame(const Ensemble& ens, std::span<const double> I,
                       const Reparametrization& rep, unsigned threads = 1);

// ------------------------------------------------- invariance verification

struct InvarianceReport {
  SymMat pullback_G1, pullback_G2, pullback_t1, pullback_t2, hessian;
  std::optional<SymMat> covariance; // enumerated models only
  std::vector<std::pair<std::string, double>> pairwise_deltas;
  double max_delta = 0.0;
  double first_law_eta1 = 0.0;
  double first_law_eta2 = 0.0;
  double det_lambda = 1.0;
  double tolerance = 1e-9;
  bool pass = false;
};

/// Computes the equilibrium metric along every route the theory offers --
/// pullbacks of G_1/G_2 and of the symmetrized t tensors, the Hessian of
/// the potential, and (for enumerated models) the observable covariance --
/// and reports the pairwise max-abs deviations. The reparametrized routes
/// go through the tilde frame, so they exercise the Jacobian transport
/// chain end to end.
InvarianceReport verify_invariance_chain(const Ensemble& ens, std::span<const double> I,
                                         const Reparametrization& rep,
                                         double tolerance = 1e-9, unsigned threads = 1);

// ------------------------------------------------- Legendre transformations

/// Subset of index pairs exchanged by a (partial) Legendre transformation.
struct LegendrePartition {
  int n = 0;
  std::uint32_t mask = 0; // bit a set => pair (E_a, I^a) is exchanged

  static LegendrePartition total(int n);
  static LegendrePartition empty(int n);
  static LegendrePartition subset(int n, std::uint32_t mask);
  bool contains(int a) const { return (mask >> a) & 1u; }
};

/// phi' = phi - sum_{i in set} I^i E_i; exchanged pairs map to (E'_i, I'^i)
/// = (I^i, -E_i); the rest is untouched.
PhasePoint legendre_transform(const PhasePoint& p, const LegendrePartition& part);

/// Jacobian of the Legendre map at p via jets.
Mat legendre_jacobian(const PhasePoint& p, const LegendrePartition& part);

/// max-abs componentwise deviation of f*(eta1) from eta1 at p.
double legendre_contact_deviation(const PhasePoint& p, const LegendrePartition& part);

/// Legendre submanifold from a generator Phi(E_i for i in set, I^j else):
/// E_j = dPhi/dI^j, I^i = -dPhi/dE_i, phi = Phi - sum_i E_i dPhi/dE_i.
/// `at` lists the free coordinates by index order. eta1 pulls back to zero
/// along the returned tangent.
Embedding legendre_submanifold(const ScalarMap& generator, const LegendrePartition& part,
                               std::span<const double> at);

// ------------------------------------------------------- Ruppeiner check

struct RuppeinerReport {
  std::vector<double> grid_E;
  std::vector<double> grid_I;
  std::vector<double> entropy;
  std::vector<double> transported; // Legendre-transported equilibrium metric
  std::vector<double> fd_ruppeiner; // -S'' by finite differences (interior)
  double max_rel_deviation = 0.0;
  double tolerance = 1e-4;
  bool pass = false;
};

/// Compares the equilibrium metric transported by the total Legendre
/// transformation against minus the finite-difference Hessian of S(E) on a
/// uniform E-grid (n = 1 models).
RuppeinerReport ruppeiner_check(const Ensemble& ens, double e_lo, double e_hi, int steps,
                                unsigned threads = 1);

// ------------------------------------------------------------- curvature

/// Scalar curvature of the Hessian metric g = Hess phi at I: Christoffel
/// symbols from order-3 jets, their I-derivatives by Richardson-extrapolated
/// central differences, then the standard contractions.
double curvature_scalar(const Ensemble& ens, std::span<const double> I,
                        unsigned threads = 1);

} // namespace cth

#endif
