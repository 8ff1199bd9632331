#include "cth/reparametrization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cth/errors.hpp"
#include "cth/rng.hpp"

namespace cth {

using ad::Jet;

// ---------------------------------------------------------------------------
// SmoothMap1
// ---------------------------------------------------------------------------

SmoothMap1 SmoothMap1::identity() { return {Kind::Identity, 0, 0, 0}; }

SmoothMap1 SmoothMap1::affine(double a, double b) {
  if (a == 0.0 || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidArgument("affine map: slope must be finite and nonzero");
  return {Kind::Affine, a, b, 0};
}

SmoothMap1 SmoothMap1::exp_map() { return {Kind::Exp, 0, 0, 0}; }
SmoothMap1 SmoothMap1::ln_map() { return {Kind::Ln, 0, 0, 0}; }

SmoothMap1 SmoothMap1::tanh_affine(double a, double c, double d) {
  if (!(d > 0.0) || !(d + std::min(c * a, 0.0) > 0.0))
    throw InvalidArgument("tanh_affine map: need d > 0 and d + min(c a, 0) > 0");
  return {Kind::TanhAffine, a, c, d};
}

SmoothMap1 SmoothMap1::odd_power(double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("odd_power map: eps must be >= 0");
  return {Kind::OddPower, eps, 0, 0};
}

double SmoothMap1::param(const char* name) const {
  const std::string s(name);
  if (s == "p0") return p0_;
  if (s == "p1") return p1_;
  if (s == "p2") return p2_;
  throw InvalidArgument("unknown map parameter " + s);
}

double SmoothMap1::operator()(double x) const {
  switch (kind_) {
    case Kind::Identity: return x;
    case Kind::Affine: return p0_ * x + p1_;
    case Kind::Exp: return std::exp(x);
    case Kind::Ln:
      if (!(x > 0.0)) throw DomainError("ln map: non-positive argument");
      return std::log(x);
    case Kind::TanhAffine: return p1_ * std::tanh(p0_ * x) + p2_ * x;
    case Kind::OddPower: return x * x * x + p0_ * x;
  }
  throw InvalidArgument("corrupt map kind");
}

Jet SmoothMap1::operator()(const Jet& x) const {
  switch (kind_) {
    case Kind::Identity: return x;
    case Kind::Affine: return p0_ * x + p1_;
    case Kind::Exp: return ad::exp(x);
    case Kind::Ln: return ad::log(x);
    case Kind::TanhAffine: return p1_ * ad::tanh(p0_ * x) + p2_ * x;
    case Kind::OddPower: return x * x * x + p0_ * x;
  }
  throw InvalidArgument("corrupt map kind");
}

double SmoothMap1::derivative(double x) const {
  switch (kind_) {
    case Kind::Identity: return 1.0;
    case Kind::Affine: return p0_;
    case Kind::Exp: return std::exp(x);
    case Kind::Ln:
      if (!(x > 0.0)) throw DomainError("ln map: non-positive argument");
      return 1.0 / x;
    case Kind::TanhAffine: {
      const double t = std::tanh(p0_ * x);
      return p1_ * p0_ * (1.0 - t * t) + p2_;
    }
    case Kind::OddPower: return 3.0 * x * x + p0_;
  }
  throw InvalidArgument("corrupt map kind");
}

Jet SmoothMap1::derivative_jet(const Jet& x) const {
  switch (kind_) {
    case Kind::Identity: return Jet::constant(1.0, x.order, x.width());
    case Kind::Affine: return Jet::constant(p0_, x.order, x.width());
    case Kind::Exp: return ad::exp(x);
    case Kind::Ln: return 1.0 / x;
    case Kind::TanhAffine: {
      const Jet t = ad::tanh(p0_ * x);
      return p1_ * p0_ * (1.0 - t * t) + p2_;
    }
    case Kind::OddPower: return 3.0 * (x * x) + p0_;
  }
  throw InvalidArgument("corrupt map kind");
}

double SmoothMap1::inverse(double y) const {
  switch (kind_) {
    case Kind::Identity: return y;
    case Kind::Affine: return (y - p1_) / p0_;
    case Kind::Exp:
      if (!(y > 0.0)) throw DomainError("exp map inverse: non-positive argument");
      return std::log(y);
    case Kind::Ln: return std::exp(y);
    case Kind::TanhAffine:
    case Kind::OddPower: {
      // Monotone increasing; Newton with a bisection bracket.
      double lo = -1.0, hi = 1.0;
      while ((*this)(lo) > y) lo *= 2.0;
      while ((*this)(hi) < y) hi *= 2.0;
      double x = 0.5 * (lo + hi);
      for (int it = 0; it < 200; ++it) {
        const double f = (*this)(x) - y;
        if (f > 0.0)
          hi = x;
        else
          lo = x;
        const double d = derivative(x);
        double step = d > 0.0 ? x - f / d : 0.5 * (lo + hi);
        if (!(step > lo && step < hi)) step = 0.5 * (lo + hi);
        if (std::abs(step - x) <= 1e-15 * (1.0 + std::abs(x)) && std::abs(f) < 1e-12)
          return step;
        x = step;
      }
      return x;
    }
  }
  throw InvalidArgument("corrupt map kind");
}

bool SmoothMap1::has_closed_inverse_jet() const {
  return kind_ == Kind::Identity || kind_ == Kind::Affine || kind_ == Kind::Exp ||
         kind_ == Kind::Ln;
}

Jet SmoothMap1::inverse_jet(const Jet& y) const {
  switch (kind_) {
    case Kind::Identity: return y;
    case Kind::Affine: return (y - p1_) / p0_;
    case Kind::Exp: return ad::log(y);
    case Kind::Ln: return ad::exp(y);
    case Kind::TanhAffine:
    case Kind::OddPower: {
      if (y.order != 1)
        throw UnsupportedOperation("inverse_jet: Newton-inverted maps carry first order only");
      const double x = inverse(y.value);
      const double d = derivative(x);
      if (d == 0.0) throw SingularityError("inverse_jet: vanishing derivative");
      Jet out(y.order, y.width());
      out.value = x;
      for (int i = 0; i < y.width(); ++i) out.grad[i] = y.grad[i] / d;
      return out;
    }
  }
  throw InvalidArgument("corrupt map kind");
}

// ---------------------------------------------------------------------------
// Reparametrization
// ---------------------------------------------------------------------------

Reparametrization Reparametrization::identity(int n) {
  std::vector<SmoothMap1> maps(n, SmoothMap1::identity());
  return Reparametrization(maps, maps);
}

Reparametrization::Reparametrization(std::vector<SmoothMap1> i_maps,
                                     std::vector<SmoothMap1> e_maps,
                                     std::optional<Mat> mix)
    : i_maps_(std::move(i_maps)), e_maps_(std::move(e_maps)), mix_(std::move(mix)) {
  if (i_maps_.empty()) throw InvalidArgument("reparametrization: empty i_map");
  if (e_maps_.empty()) e_maps_.assign(i_maps_.size(), SmoothMap1::identity());
  if (e_maps_.size() != i_maps_.size())
    throw InvalidArgument("reparametrization: i_map/e_map size mismatch");
  if (mix_) {
    if (mix_->rows() != n() || mix_->cols() != n())
      throw InvalidArgument("reparametrization: mix matrix must be n x n");
    const double dm = det(*mix_);
    if (std::abs(dm) <= 1e-10)
      throw SingularityError("reparametrization: mix matrix is singular");
    mix_inv_ = inverse(*mix_);
  }
}

bool Reparametrization::is_identity() const {
  if (mix_) return false;
  for (const auto& m : i_maps_)
    if (m.kind() != SmoothMap1::Kind::Identity) return false;
  for (const auto& m : e_maps_)
    if (m.kind() != SmoothMap1::Kind::Identity) return false;
  return true;
}

const Mat& Reparametrization::mix() const {
  if (!mix_) throw InvalidArgument("reparametrization: no mix matrix");
  return *mix_;
}

std::vector<double> Reparametrization::i_forward(std::span<const double> I) const {
  if (static_cast<int>(I.size()) != n())
    throw InvalidArgument("reparametrization: point length mismatch");
  std::vector<double> f(n());
  for (int a = 0; a < n(); ++a) f[a] = i_maps_[a](I[a]);
  if (!mix_) return f;
  return matvec(*mix_, f);
}

std::vector<double> Reparametrization::i_inverse(std::span<const double> Itilde) const {
  if (static_cast<int>(Itilde.size()) != n())
    throw InvalidArgument("reparametrization: point length mismatch");
  std::vector<double> w(Itilde.begin(), Itilde.end());
  if (mix_) w = matvec(*mix_inv_, w);
  std::vector<double> out(n());
  for (int a = 0; a < n(); ++a) out[a] = i_maps_[a].inverse(w[a]);
  return out;
}

Mat Reparametrization::i_jacobian(std::span<const double> I) const {
  if (static_cast<int>(I.size()) != n())
    throw InvalidArgument("reparametrization: point length mismatch");
  const std::vector<Jet> seeds = ad::seed(I, 1);
  Mat jac(n(), n());
  for (int at = 0; at < n(); ++at) {
    const Jet row = i_component(at, seeds);
    for (int a = 0; a < n(); ++a) jac.at(at, a) = row.grad[a];
  }
  return jac;
}

Jet Reparametrization::i_component(int atilde, std::span<const Jet> I) const {
  Jet acc = Jet::constant(0.0, I[0].order, I[0].width());
  if (!mix_) return i_maps_[atilde](I[atilde]);
  for (int a = 0; a < n(); ++a) {
    const double m = (*mix_)(atilde, a);
    if (m != 0.0) acc = acc + m * i_maps_[a](I[a]);
  }
  return acc;
}

Jet Reparametrization::i_jacobian_entry(int atilde, int a, const Jet& I_a) const {
  const double m = mix_ ? (*mix_)(atilde, a) : (atilde == a ? 1.0 : 0.0);
  if (m == 0.0) return Jet::constant(0.0, I_a.order, I_a.width());
  return m * i_maps_[a].derivative_jet(I_a);
}

std::vector<double> Reparametrization::e_forward(std::span<const double> E) const {
  if (static_cast<int>(E.size()) != n())
    throw InvalidArgument("reparametrization: point length mismatch");
  std::vector<double> out(n());
  for (int a = 0; a < n(); ++a) out[a] = e_maps_[a](E[a]);
  return out;
}

std::vector<double> Reparametrization::e_inverse(std::span<const double> Etilde) const {
  if (static_cast<int>(Etilde.size()) != n())
    throw InvalidArgument("reparametrization: point length mismatch");
  std::vector<double> out(n());
  for (int a = 0; a < n(); ++a) out[a] = e_maps_[a].inverse(Etilde[a]);
  return out;
}

Mat Reparametrization::e_jacobian(std::span<const double> E) const {
  if (static_cast<int>(E.size()) != n())
    throw InvalidArgument("reparametrization: point length mismatch");
  Mat jac(n(), n());
  for (int a = 0; a < n(); ++a) jac.at(a, a) = e_maps_[a].derivative(E[a]);
  return jac;
}

Jet Reparametrization::e_component(int atilde, const Jet& E_atilde) const {
  return e_maps_[atilde](E_atilde);
}

std::vector<double> Reparametrization::tilde_extensive(std::span<const double> I,
                                                       std::span<const double> E) const {
  const Mat lam = i_jacobian(I);
  if (std::abs(det(lam)) <= 1e-10)
    throw SingularityError("reparametrization: singular Jacobian at the point");
  const Mat lam_inv = inverse(lam);
  // (Lambda^{-1})^T E
  std::vector<double> out(n(), 0.0);
  for (int at = 0; at < n(); ++at)
    for (int a = 0; a < n(); ++a) out[at] += lam_inv(a, at) * E[a];
  return out;
}

std::vector<double> Reparametrization::tilde_extensive_via_inverse_maps(
    std::span<const double> I, std::span<const double> E) const {
  const std::vector<double> itilde = i_forward(I);
  const std::vector<Jet> seeds = ad::seed(itilde, 1);
  // I^a(Itilde) = f_a^{-1}((M^{-1} Itilde)_a)
  std::vector<double> out(n(), 0.0);
  for (int a = 0; a < n(); ++a) {
    Jet w = seeds[a];
    if (mix_) {
      Jet acc = Jet::constant(0.0, 1, n());
      for (int b = 0; b < n(); ++b) {
        const double m = (*mix_inv_)(a, b);
        if (m != 0.0) acc = acc + m * seeds[b];
      }
      w = acc;
    }
    const Jet ia = i_maps_[a].inverse_jet(w);
    for (int at = 0; at < n(); ++at) out[at] += E[a] * ia.grad[at];
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON loading
// ---------------------------------------------------------------------------

namespace {

SmoothMap1 map_from_json(const nlohmann::json& rec, const std::string& where) {
  if (!rec.is_object() || !rec.contains("kind") || !rec["kind"].is_string())
    throw ParseError("reparametrization file: " + where + " needs a string \"kind\"");
  const std::string kind = rec["kind"].get<std::string>();
  auto param = [&](const char* name, std::optional<double> fallback = {}) {
    if (rec.contains("params") && rec["params"].contains(name)) {
      if (!rec["params"][name].is_number())
        throw ParseError("reparametrization file: " + where + ".params." + name +
                         " is not a number");
      return rec["params"][name].get<double>();
    }
    if (fallback) return *fallback;
    throw ParseError("reparametrization file: " + where + " misses parameter \"" +
                     name + "\"");
  };
  if (kind == "identity") return SmoothMap1::identity();
  if (kind == "affine") return SmoothMap1::affine(param("a"), param("b", 0.0));
  if (kind == "exp") return SmoothMap1::exp_map();
  if (kind == "ln") return SmoothMap1::ln_map();
  if (kind == "tanh_affine")
    return SmoothMap1::tanh_affine(param("a", 1.0), param("c"), param("d", 1.0));
  if (kind == "odd_power") return SmoothMap1::odd_power(param("eps", 1.0));
  throw ParseError("reparametrization file: " + where + " has unknown kind \"" + kind +
                   "\"");
}

} // namespace

Reparametrization Reparametrization::from_json_text(const std::string& text, int n) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("reparametrization file: JSON syntax error: ") +
                     e.what());
  }
  if (!doc.is_object())
    throw ParseError("reparametrization file: top level must be an object");

  auto load_maps = [&](const char* key) {
    std::vector<SmoothMap1> maps(n, SmoothMap1::identity());
    if (!doc.contains(key)) return maps;
    if (!doc[key].is_array() || static_cast<int>(doc[key].size()) != n)
      throw ParseError(std::string("reparametrization file: \"") + key +
                       "\" must be an array of length n = " + std::to_string(n));
    for (int a = 0; a < n; ++a)
      maps[a] = map_from_json(doc[key][a], std::string(key) + "[" + std::to_string(a) + "]");
    return maps;
  };

  std::optional<Mat> mix;
  if (doc.contains("mix")) {
    if (!doc["mix"].is_array() || static_cast<int>(doc["mix"].size()) != n)
      throw ParseError("reparametrization file: \"mix\" must be an n x n array");
    Mat m(n, n);
    for (int r = 0; r < n; ++r) {
      if (!doc["mix"][r].is_array() || static_cast<int>(doc["mix"][r].size()) != n)
        throw ParseError("reparametrization file: \"mix\" row " + std::to_string(r) +
                         " must have length n");
      for (int c = 0; c < n; ++c) {
        if (!doc["mix"][r][c].is_number())
          throw ParseError("reparametrization file: mix[" + std::to_string(r) + "][" +
                           std::to_string(c) + "] is not a number");
        m.at(r, c) = doc["mix"][r][c].get<double>();
      }
    }
    mix = std::move(m);
  }

  return Reparametrization(load_maps("i_map"), load_maps("e_map"), std::move(mix));
}

Reparametrization Reparametrization::from_json_file(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw ParseError("reparametrization file: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str(), n);
}

Reparametrization sample_reparametrization(Rng& rng, int n, const RepDrawOptions& options) {
  std::vector<SmoothMap1> i_maps, e_maps;
  i_maps.reserve(n);
  e_maps.reserve(n);
  for (int a = 0; a < n; ++a) {
    switch (rng.below(4)) {
      case 0:
        i_maps.push_back(SmoothMap1::affine(rng.uniform(0.6, 1.8), rng.uniform(-0.4, 0.4)));
        break;
      case 1:
        i_maps.push_back(SmoothMap1::tanh_affine(rng.uniform(0.5, 1.5),
                                                 rng.uniform(0.0, 0.8),
                                                 rng.uniform(0.7, 1.4)));
        break;
      case 2:
        i_maps.push_back(SmoothMap1::odd_power(rng.uniform(0.7, 1.5)));
        break;
      default:
        i_maps.push_back(SmoothMap1::exp_map());
        break;
    }
  }
  for (int a = 0; a < n; ++a) {
    double slope = rng.uniform(0.5, 1.6);
    if (options.dual_scale_e && static_cast<int>(options.i_hint.size()) == n)
      slope = rng.uniform(0.95, 1.2) / i_maps[a].derivative(options.i_hint[a]);
    e_maps.push_back(SmoothMap1::affine(slope, rng.uniform(-0.3, 0.3)));
  }
  std::optional<Mat> mix;
  if (options.allow_mix && n > 1 && rng.below(2) == 0) {
    // product of Givens rotations: orthogonal, |det| = 1
    Mat m = Mat::identity(n);
    for (int a = 0; a + 1 < n; ++a) {
      const double theta = rng.uniform(0.2, 1.2);
      Mat rot = Mat::identity(n);
      rot.at(a, a) = std::cos(theta);
      rot.at(a, a + 1) = -std::sin(theta);
      rot.at(a + 1, a) = std::sin(theta);
      rot.at(a + 1, a + 1) = std::cos(theta);
      m = matmul(rot, m);
    }
    mix = std::move(m);
  }
  return Reparametrization(std::move(i_maps), std::move(e_maps), std::move(mix));
}

} // namespace cth
