#include "cth/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cth/maxent.hpp"

namespace cth {

using ad::Jet;

namespace {

constexpr double kJacobianTol = 1e-10;
constexpr double kMetricDetTol = 1e-12;

std::string point_string(std::span<const double> I) {
  std::string s = "(";
  for (std::size_t a = 0; a < I.size(); ++a)
    s += (a ? ", " : "") + std::to_string(I[a]);
  return s + ")";
}

Mat checked_lambda(const Reparametrization& rep, std::span<const double> I,
                   double* det_out = nullptr) {
  const Mat lambda = rep.i_jacobian(I);
  const double d = det(lambda);
  if (det_out) *det_out = d;
  if (std::abs(d) <= kJacobianTol)
    throw SingularityError("reparametrization Jacobian is singular at I = " +
                           point_string(I) + " (|det| = " + std::to_string(std::abs(d)) +
                           ")");
  return lambda;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

} // namespace

// ---------------------------------------------------------------------------
// PhasePoint
// ---------------------------------------------------------------------------

PhasePoint::PhasePoint(double phi_, std::vector<double> E_, std::vector<double> I_)
    : phi(phi_), E(std::move(E_)), I(std::move(I_)) {
  if (E.size() != I.size())
    throw InvalidArgument("phase point: E and I must have the same length");
  if (!std::isfinite(phi)) throw InvalidArgument("phase point: non-finite phi");
  for (double v : E)
    if (!std::isfinite(v)) throw InvalidArgument("phase point: non-finite E");
  for (double v : I)
    if (!std::isfinite(v)) throw InvalidArgument("phase point: non-finite I");
}

std::vector<double> PhasePoint::coords() const {
  std::vector<double> c;
  c.reserve(dim());
  c.push_back(phi);
  c.insert(c.end(), E.begin(), E.end());
  c.insert(c.end(), I.begin(), I.end());
  return c;
}

PhasePoint PhasePoint::from_coords(std::span<const double> coords) {
  if (coords.size() % 2 == 0) throw InvalidArgument("phase point: even coordinate count");
  const int n = static_cast<int>((coords.size() - 1) / 2);
  return PhasePoint(coords[0], {coords.begin() + 1, coords.begin() + 1 + n},
                    {coords.begin() + 1 + n, coords.end()});
}

// ---------------------------------------------------------------------------
// Contact structure
// ---------------------------------------------------------------------------

KForm eta1(const PhasePoint& at) {
  const int n = at.n();
  KForm out(at.dim(), 1);
  out[phi_index()] = 1.0;
  for (int a = 0; a < n; ++a) out[i_index(n, a)] = -at.E[a];
  return out;
}

KForm eta2(const PhasePoint& at, const Reparametrization& rep) {
  const int n = at.n();
  if (rep.n() != n) throw InvalidArgument("eta2: reparametrization dimension mismatch");
  if (rep.is_identity()) return eta1(at);
  const Mat lambda = checked_lambda(rep, at.I);
  const std::vector<double> etil = rep.e_forward(at.E);
  KForm out(at.dim(), 1);
  out[phi_index()] = 1.0;
  for (int a = 0; a < n; ++a) {
    double c = 0.0;
    for (int at_ = 0; at_ < n; ++at_) c += etil[at_] * lambda(at_, a);
    out[i_index(n, a)] = -c;
  }
  return out;
}

CoefficientField eta1_field(int n) {
  CoefficientField field;
  field.dim = 2 * n + 1;
  field.components.resize(field.dim);
  field.components[phi_index()] = [](std::span<const Jet> x) {
    return Jet::constant(1.0, x[0].order, x[0].width());
  };
  for (int b = 0; b < n; ++b)
    field.components[e_index(b)] = [](std::span<const Jet> x) {
      return Jet::constant(0.0, x[0].order, x[0].width());
    };
  for (int a = 0; a < n; ++a)
    field.components[i_index(n, a)] = [n, a](std::span<const Jet> x) {
      return -1.0 * x[e_index(a)];
    };
  return field;
}

CoefficientField eta2_field(const Reparametrization& rep) {
  const int n = rep.n();
  CoefficientField field;
  field.dim = 2 * n + 1;
  field.components.resize(field.dim);
  field.components[phi_index()] = [](std::span<const Jet> x) {
    return Jet::constant(1.0, x[0].order, x[0].width());
  };
  for (int b = 0; b < n; ++b)
    field.components[e_index(b)] = [](std::span<const Jet> x) {
      return Jet::constant(0.0, x[0].order, x[0].width());
    };
  for (int a = 0; a < n; ++a)
    field.components[i_index(n, a)] = [rep, n, a](std::span<const Jet> x) {
      Jet acc = Jet::constant(0.0, x[0].order, x[0].width());
      for (int at_ = 0; at_ < n; ++at_) {
        const Jet etil = rep.e_component(at_, x[e_index(at_)]);
        const Jet lam = rep.i_jacobian_entry(at_, a, x[i_index(n, a)]);
        acc = acc + etil * lam;
      }
      return -1.0 * acc;
    };
  return field;
}

SymMat t_tensor(const PhasePoint& at, const Reparametrization& rep) {
  const int n = at.n();
  if (rep.n() != n)
    throw InvalidArgument("t_tensor: reparametrization dimension mismatch");
  SymMat t(at.dim());
  if (rep.is_identity()) {
    for (int a = 0; a < n; ++a) t.at(e_index(a), i_index(n, a)) = 0.5;
    return t;
  }
  const Mat lambda = checked_lambda(rep, at.I);
  const Mat de = rep.e_jacobian(at.E);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) {
      double k = 0.0;
      for (int at_ = 0; at_ < n; ++at_) k += de(at_, b) * lambda(at_, a);
      t.at(e_index(b), i_index(n, a)) = 0.5 * k;
    }
  return t;
}

SymMat t_tensor(const PhasePoint& at) {
  return t_tensor(at, Reparametrization::identity(at.n()));
}

SymMat metric_G(const PhasePoint& at, const Reparametrization& rep) {
  const KForm eta = eta2(at, rep);
  SymMat g = t_tensor(at, rep);
  for (int mu = 0; mu < at.dim(); ++mu)
    for (int nu = 0; nu <= mu; ++nu) g.at(mu, nu) += eta[mu] * eta[nu];
  return g;
}

SymMat metric_G(const PhasePoint& at) {
  return metric_G(at, Reparametrization::identity(at.n()));
}

// ---------------------------------------------------------------------------
// Embeddings and pullbacks
// ---------------------------------------------------------------------------

Embedding embed(const Ensemble& ens, std::span<const double> I, unsigned threads) {
  const Jet jet = potential_jet(ens, I, 2, threads);
  const int n = ens.n();
  PhasePoint p(jet.value, jet.grad, {I.begin(), I.end()});
  Mat tangent(p.dim(), n);
  for (int a = 0; a < n; ++a) tangent.at(phi_index(), a) = jet.grad[a];
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      tangent.at(e_index(b), a) = jet.hess[Jet::pair_index(b, a)];
  for (int a = 0; a < n; ++a) tangent.at(i_index(n, a), a) = 1.0;
  return {std::move(p), std::move(tangent)};
}

Embedding embed(const Ensemble& ens, std::span<const double> I,
                const Reparametrization& rep, unsigned threads) {
  Embedding base = embed(ens, I, threads);
  if (rep.is_identity()) return base;
  const Mat lambda = checked_lambda(rep, I);
  base.tangent = matmul(base.tangent, inverse(lambda));
  return base;
}

SymMat pullback(const SymMat& tensor, const Mat& tangent) {
  if (tensor.dim() != tangent.rows())
    throw InvalidArgument("pullback: tensor/tangent shape mismatch");
  return congruence(tensor, tangent);
}

std::vector<double> pullback(const KForm& one_form, const Mat& tangent) {
  if (one_form.degree() != 1) throw InvalidArgument("pullback: expected a one-form");
  if (one_form.dim() != tangent.rows())
    throw InvalidArgument("pullback: form/tangent shape mismatch");
  std::vector<double> out(tangent.cols(), 0.0);
  for (int a = 0; a < tangent.cols(); ++a)
    for (int mu = 0; mu < one_form.dim(); ++mu) out[a] += one_form[mu] * tangent(mu, a);
  return out;
}

TildeFrame tilde_frame(const Ensemble& ens, std::span<const double> I,
                       const Reparametrization& rep, unsigned threads) {
  if (rep.n() != ens.n())
    throw InvalidArgument("tilde_frame: reparametrization dimension mismatch");
  const Jet jet = potential_jet(ens, I, 2, threads);
  const int n = ens.n();

  TildeFrame frame;
  frame.lambda = checked_lambda(rep, I, &frame.det_lambda);
  frame.lambda_inv = inverse(frame.lambda);

  // Equations of state carried to the tilde chart: the averages transform
  // as one-form components, the metric as a (0,2) tensor.
  std::vector<double> e_tilde(n, 0.0);
  for (int at = 0; at < n; ++at)
    for (int a = 0; a < n; ++a) e_tilde[at] += frame.lambda_inv(a, at) * jet.grad[a];
  const SymMat g_tilde = congruence(jet.hessian_matrix(), frame.lambda_inv);

  frame.point = PhasePoint(jet.value, e_tilde, rep.i_forward(I));
  frame.tangent = Mat(2 * n + 1, n);
  for (int a = 0; a < n; ++a) frame.tangent.at(phi_index(), a) = e_tilde[a];
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) frame.tangent.at(e_index(b), a) = g_tilde(b, a);
  for (int a = 0; a < n; ++a) frame.tangent.at(i_index(n, a), a) = 1.0;
  return frame;
}

// ---------------------------------------------------------------------------
// Invariance chain
// ---------------------------------------------------------------------------

InvarianceReport verify_invariance_chain(const Ensemble& ens, std::span<const double> I,
                                         const Reparametrization& rep, double tolerance,
                                         unsigned threads) {
  InvarianceReport report;
  report.tolerance = tolerance;

  const Embedding frame = embed(ens, I, threads);
  report.hessian = potential_jet(ens, I, 2, threads).hessian_matrix();
  report.pullback_G1 = pullback(metric_G(frame.point), frame.tangent);
  report.pullback_t1 = [&] {
    SymMat sym_t = t_tensor(frame.point);
    return pullback(sym_t, frame.tangent);
  }();
  report.first_law_eta1 = max_abs(pullback(eta1(frame.point), frame.tangent));

  const TildeFrame tilde = tilde_frame(ens, I, rep, threads);
  report.det_lambda = tilde.det_lambda;
  // In the tilde chart the reparametrized structures take their Darboux
  // form; pull back there, then transport the components to the original
  // I coordinates with Lambda.
  report.pullback_G2 =
      congruence(pullback(metric_G(tilde.point), tilde.tangent), tilde.lambda);
  report.pullback_t2 =
      congruence(pullback(t_tensor(tilde.point), tilde.tangent), tilde.lambda);
  report.first_law_eta2 = max_abs(pullback(eta1(tilde.point), tilde.tangent));

  std::vector<std::pair<std::string, const SymMat*>> entries = {
      {"pullback_G1", &report.pullback_G1}, {"pullback_G2", &report.pullback_G2},
      {"pullback_t1", &report.pullback_t1}, {"pullback_t2", &report.pullback_t2},
      {"hessian", &report.hessian}};
  if (ens.kind() == Ensemble::Kind::Enumerated) {
    report.covariance = covariance_metric(ens, I, threads);
    entries.emplace_back("covariance", &*report.covariance);
  }

  report.max_delta = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      const double d = max_abs_diff(*entries[i].second, *entries[j].second);
      report.pairwise_deltas.emplace_back(entries[i].first + "~" + entries[j].first, d);
      report.max_delta = std::max(report.max_delta, d);
    }
  report.pass = report.max_delta <= tolerance;
  return report;
}

// ---------------------------------------------------------------------------
// Legendre transformations
// ---------------------------------------------------------------------------

LegendrePartition LegendrePartition::total(int n) {
  return subset(n, (n >= 32 ? ~0u : (1u << n) - 1u));
}
LegendrePartition LegendrePartition::empty(int n) { return subset(n, 0); }
LegendrePartition LegendrePartition::subset(int n, std::uint32_t mask) {
  if (n < 0 || n > 31) throw InvalidArgument("legendre partition: n out of range");
  if (n < 32 && (mask >> n) != 0)
    throw InvalidArgument("legendre partition: mask has bits beyond n");
  return {n, mask};
}

PhasePoint legendre_transform(const PhasePoint& p, const LegendrePartition& part) {
  if (part.n != p.n()) throw InvalidArgument("legendre: partition dimension mismatch");
  PhasePoint out = p;
  for (int a = 0; a < p.n(); ++a) {
    if (!part.contains(a)) continue;
    out.phi -= p.I[a] * p.E[a];
    out.E[a] = p.I[a];
    out.I[a] = -p.E[a];
  }
  return out;
}

namespace {

std::vector<Jet> legendre_map_jets(std::span<const Jet> x, const LegendrePartition& part) {
  const int n = part.n;
  std::vector<Jet> out;
  out.reserve(2 * n + 1);
  Jet phi = x[phi_index()];
  for (int a = 0; a < n; ++a)
    if (part.contains(a)) phi = phi - x[i_index(n, a)] * x[e_index(a)];
  out.push_back(std::move(phi));
  for (int a = 0; a < n; ++a)
    out.push_back(part.contains(a) ? x[i_index(n, a)] : x[e_index(a)]);
  for (int a = 0; a < n; ++a)
    out.push_back(part.contains(a) ? -1.0 * x[e_index(a)] : x[i_index(n, a)]);
  return out;
}

} // namespace

Mat legendre_jacobian(const PhasePoint& p, const LegendrePartition& part) {
  if (part.n != p.n()) throw InvalidArgument("legendre: partition dimension mismatch");
  const std::vector<double> coords = p.coords();
  const std::vector<Jet> seeds = ad::seed(coords, 1);
  const std::vector<Jet> image = legendre_map_jets(seeds, part);
  Mat jac(p.dim(), p.dim());
  for (int mu = 0; mu < p.dim(); ++mu)
    for (int nu = 0; nu < p.dim(); ++nu) jac.at(mu, nu) = image[mu].grad[nu];
  return jac;
}

double legendre_contact_deviation(const PhasePoint& p, const LegendrePartition& part) {
  const PhasePoint q = legendre_transform(p, part);
  const KForm eta_q = eta1(q);
  const Mat jac = legendre_jacobian(p, part);
  const KForm eta_p = eta1(p);
  double dev = 0.0;
  for (int nu = 0; nu < p.dim(); ++nu) {
    double pulled = 0.0;
    for (int mu = 0; mu < p.dim(); ++mu) pulled += eta_q[mu] * jac(mu, nu);
    dev = std::max(dev, std::abs(pulled - eta_p[nu]));
  }
  return dev;
}

Embedding legendre_submanifold(const ScalarMap& generator, const LegendrePartition& part,
                               std::span<const double> at) {
  const int n = part.n;
  if (static_cast<int>(at.size()) != n)
    throw InvalidArgument("legendre_submanifold: parameter length must be n");
  const std::vector<Jet> seeds = ad::seed(at, 2);
  const Jet gen = generator(seeds);
  if (!gen.finite())
    throw DomainError("legendre_submanifold: generator returned non-finite jet");

  double phi = gen.value;
  std::vector<double> E(n), I(n);
  for (int a = 0; a < n; ++a) {
    if (part.contains(a)) {
      E[a] = at[a];
      I[a] = -gen.grad[a];
      phi -= at[a] * gen.grad[a];
    } else {
      E[a] = gen.grad[a];
      I[a] = at[a];
    }
  }
  PhasePoint point(phi, std::move(E), std::move(I));

  Mat tangent(2 * n + 1, n);
  for (int b = 0; b < n; ++b) {
    double dphi = part.contains(b) ? 0.0 : gen.grad[b];
    for (int i = 0; i < n; ++i)
      if (part.contains(i)) dphi -= at[i] * gen.hess[Jet::pair_index(i, b)];
    tangent.at(phi_index(), b) = dphi;
    for (int a = 0; a < n; ++a) {
      if (part.contains(a)) {
        tangent.at(e_index(a), b) = (a == b) ? 1.0 : 0.0;
        tangent.at(i_index(n, a), b) = -gen.hess[Jet::pair_index(a, b)];
      } else {
        tangent.at(e_index(a), b) = gen.hess[Jet::pair_index(a, b)];
        tangent.at(i_index(n, a), b) = (a == b) ? 1.0 : 0.0;
      }
    }
  }
  return {std::move(point), std::move(tangent)};
}

// ---------------------------------------------------------------------------
// Ruppeiner check
// ---------------------------------------------------------------------------

RuppeinerReport ruppeiner_check(const Ensemble& ens, double e_lo, double e_hi, int steps,
                                unsigned threads) {
  if (ens.n() != 1)
    throw UnsupportedOperation("ruppeiner_check: the E-grid comparison needs n = 1");
  if (steps < 5) throw InvalidArgument("ruppeiner_check: need at least 5 grid points");
  if (!(e_hi > e_lo)) throw InvalidArgument("ruppeiner_check: empty grid range");

  RuppeinerReport report;
  const double h = (e_hi - e_lo) / (steps - 1);
  std::vector<double> warm{0.0};
  for (int k = 0; k < steps; ++k) {
    const double e_target = e_lo + h * k;
    const MaxEntSolution inv =
        invert_equations_of_state(ens, std::span<const double>{&e_target, 1}, warm,
                                  1e-12, 200, threads);
    warm = inv.I;
    const Jet jet = potential_jet(ens, inv.I, 2, threads);
    const double g = jet.hess[0];
    if (std::abs(g) < kMetricDetTol)
      throw SingularityError("ruppeiner_check: det(Hess phi) < 1e-12 on the grid at E = " +
                             std::to_string(e_target));

    // Equilibrium metric carried through the total Legendre transformation:
    // the primed-chart embedding has tangent rows (E'; -g^{-1}; 1), and the
    // pullback of the primed Darboux metric is -g^{-1}. Ruppeiner's metric
    // is minus that.
    PhasePoint p(jet.value, {jet.grad[0]}, {inv.I[0]});
    const PhasePoint q = legendre_transform(p, LegendrePartition::total(1));
    Mat tangent(3, 1);
    tangent.at(phi_index(), 0) = q.E[0];
    tangent.at(e_index(0), 0) = -1.0 / g;
    tangent.at(i_index(1, 0), 0) = 1.0;
    const SymMat pulled = pullback(metric_G(q), tangent);

    report.grid_E.push_back(e_target);
    report.grid_I.push_back(inv.I[0]);
    report.entropy.push_back(jet.value - inv.I[0] * jet.grad[0]);
    report.transported.push_back(-pulled(0, 0));
  }

  // -d2S/dE2 by Richardson-extrapolated central second differences.
  report.fd_ruppeiner.assign(steps, std::numeric_limits<double>::quiet_NaN());
  report.max_rel_deviation = 0.0;
  for (int k = 2; k < steps - 2; ++k) {
    const auto& S = report.entropy;
    const double a1 = (S[k + 1] - 2.0 * S[k] + S[k - 1]) / (h * h);
    const double a2 = (S[k + 2] - 2.0 * S[k] + S[k - 2]) / (4.0 * h * h);
    const double fd = -(4.0 * a1 - a2) / 3.0;
    report.fd_ruppeiner[k] = fd;
    const double scale = std::max(std::abs(report.transported[k]), 1e-300);
    report.max_rel_deviation =
        std::max(report.max_rel_deviation, std::abs(fd - report.transported[k]) / scale);
  }
  report.pass = report.max_rel_deviation <= report.tolerance;
  return report;
}

// ---------------------------------------------------------------------------
// Scalar curvature of the Hessian metric
// ---------------------------------------------------------------------------

namespace {

/// Christoffel symbols of g = Hess phi: Gamma^c_ab = 1/2 g^{cd} phi_abd.
std::vector<SymMat> christoffels(const Ensemble& ens, std::span<const double> I,
                                 unsigned threads) {
  const int n = ens.n();
  const Jet jet = potential_jet(ens, I, 3, threads);
  const SymMat g = jet.hessian_matrix();
  if (min_ldlt_pivot(g) <= kMetricDetTol)
    throw SingularityError("curvature: metric not positive definite at I = " +
                           point_string(I));
  Mat gm(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gm.at(i, j) = g(i, j);
  const Mat ginv = inverse(gm);

  std::vector<SymMat> gamma(n, SymMat(n));
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b <= a; ++b) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) s += ginv(c, d) * jet.third[Jet::triple_index(a, b, d)];
        gamma[c].at(a, b) = 0.5 * s;
      }
  return gamma;
}

} // namespace

double curvature_scalar(const Ensemble& ens, std::span<const double> I, unsigned threads) {
  const int n = ens.n();
  if (static_cast<int>(I.size()) != n)
    throw InvalidArgument("curvature: point length does not match model n");
  if (n == 1) return 0.0; // one-dimensional manifolds are flat

  const Jet jet = potential_jet(ens, I, 2, threads);
  const SymMat g = jet.hessian_matrix();
  if (min_ldlt_pivot(g) <= kMetricDetTol)
    throw SingularityError("curvature: metric not positive definite at I = " +
                           point_string(I));
  Mat gm(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gm.at(i, j) = g(i, j);
  const Mat ginv = inverse(gm);

  const std::vector<SymMat> gamma0 = christoffels(ens, I, threads);

  // dGamma[e][c](a,b) = d Gamma^c_ab / d I^e, central differences with one
  // Richardson extrapolation at steps h and 2h.
  const double h = 1e-4;
  std::vector<std::vector<SymMat>> dgamma(n, std::vector<SymMat>(n, SymMat(n)));
  std::vector<double> shifted(I.begin(), I.end());
  for (int e = 0; e < n; ++e) {
    auto at_step = [&](double step) {
      shifted[e] = I[e] + step;
      auto plus = christoffels(ens, shifted, threads);
      shifted[e] = I[e] - step;
      auto minus = christoffels(ens, shifted, threads);
      shifted[e] = I[e];
      std::vector<SymMat> d(n, SymMat(n));
      for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b <= a; ++b)
            d[c].at(a, b) = (plus[c](a, b) - minus[c](a, b)) / (2.0 * step);
      return d;
    };
    const auto d1 = at_step(h);
    const auto d2 = at_step(2.0 * h);
    for (int c = 0; c < n; ++c)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b <= a; ++b)
          dgamma[e][c].at(a, b) = (4.0 * d1[c](a, b) - d2[c](a, b)) / 3.0;
  }

  // R^d_cab = d_a Gamma^d_cb - d_b Gamma^d_ca
  //           + Gamma^d_ae Gamma^e_cb - Gamma^d_be Gamma^e_ca
  // Ricci_cb = R^a_cab,  R = g^{cb} Ricci_cb.
  double r = 0.0;
  for (int c = 0; c < n; ++c)
    for (int b = 0; b < n; ++b) {
      double ricci = 0.0;
      for (int a = 0; a < n; ++a) {
        double term = dgamma[a][a](c, b) - dgamma[b][a](c, a);
        for (int e = 0; e < n; ++e)
          term += gamma0[a](a, e) * gamma0[e](c, b) - gamma0[a](b, e) * gamma0[e](c, a);
        ricci += term;
      }
      r += ginv(c, b) * ricci;
    }
  return r;
}

} // namespace cth
