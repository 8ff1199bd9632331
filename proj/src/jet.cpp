#include "cth/jet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cth::ad {

namespace {

void check_order(int order) {
  if (order < 1 || order > 3)
    throw InvalidArgument("jet order must be 1, 2 or 3, got " + std::to_string(order));
}

void check_compatible(const Jet& a, const Jet& b, const char* op) {
  if (a.order != b.order || a.width() != b.width())
    throw InvalidArgument(std::string(op) + ": mixed jet order or width");
}

/// Compose a scalar function with derivatives f1, f2, f3 at u.value.
Jet compose_unary(const Jet& u, double f0, double f1, double f2, double f3) {
  const int v = u.width();
  Jet out(u.order, v);
  out.value = f0;
  for (int i = 0; i < v; ++i) out.grad[i] = f1 * u.grad[i];
  if (u.order >= 2) {
    for (int i = 0; i < v; ++i)
      for (int j = 0; j <= i; ++j)
        out.hess[Jet::pair_index(i, j)] =
            f2 * u.grad[i] * u.grad[j] + f1 * u.hess[Jet::pair_index(i, j)];
  }
  if (u.order == 3) {
    for (int k = 0; k < v; ++k)
      for (int j = 0; j <= k; ++j)
        for (int i = 0; i <= j; ++i) {
          const double gi = u.grad[i], gj = u.grad[j], gk = u.grad[k];
          const double hij = u.hess[Jet::pair_index(i, j)];
          const double hik = u.hess[Jet::pair_index(i, k)];
          const double hjk = u.hess[Jet::pair_index(j, k)];
          out.third[Jet::triple_index(i, j, k)] =
              f3 * gi * gj * gk + f2 * (hij * gk + hik * gj + hjk * gi) +
              f1 * u.third[Jet::triple_index(i, j, k)];
        }
  }
  return out;
}

} // namespace

Jet::Jet(int order_, int width) : order(order_), grad(width, 0.0) {
  check_order(order_);
  if (order >= 2) hess.assign(pair_count(width), 0.0);
  if (order == 3) third.assign(triple_count(width), 0.0);
}

std::size_t Jet::triple_index(int i, int j, int k) {
  if (i > j) std::swap(i, j);
  if (j > k) std::swap(j, k);
  if (i > j) std::swap(i, j);
  return static_cast<std::size_t>(k) * (k + 1) * (k + 2) / 6 +
         static_cast<std::size_t>(j) * (j + 1) / 2 + i;
}

Jet Jet::constant(double value, int order, int width) {
  Jet out(order, width);
  out.value = value;
  return out;
}

SymMat Jet::hessian_matrix() const {
  SymMat m(width());
  for (int i = 0; i < width(); ++i)
    for (int j = 0; j <= i; ++j) m.at(i, j) = hess[pair_index(i, j)];
  return m;
}

bool Jet::finite() const {
  if (!std::isfinite(value)) return false;
  for (double g : grad)
    if (!std::isfinite(g)) return false;
  for (double h : hess)
    if (!std::isfinite(h)) return false;
  for (double t : third)
    if (!std::isfinite(t)) return false;
  return true;
}

std::vector<Jet> seed(std::span<const double> values, int order) {
  check_order(order);
  const int v = static_cast<int>(values.size());
  for (double x : values)
    if (!std::isfinite(x)) throw InvalidArgument("seed: non-finite input value");
  std::vector<Jet> jets;
  jets.reserve(values.size());
  for (int i = 0; i < v; ++i) {
    Jet j(order, v);
    j.value = values[i];
    j.grad[i] = 1.0;
    jets.push_back(std::move(j));
  }
  return jets;
}

Jet operator+(const Jet& a, const Jet& b) {
  check_compatible(a, b, "add");
  Jet out = a;
  out.value += b.value;
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += b.grad[i];
  for (std::size_t i = 0; i < out.hess.size(); ++i) out.hess[i] += b.hess[i];
  for (std::size_t i = 0; i < out.third.size(); ++i) out.third[i] += b.third[i];
  return out;
}

Jet operator-(const Jet& a, const Jet& b) {
  check_compatible(a, b, "sub");
  Jet out = a;
  out.value -= b.value;
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] -= b.grad[i];
  for (std::size_t i = 0; i < out.hess.size(); ++i) out.hess[i] -= b.hess[i];
  for (std::size_t i = 0; i < out.third.size(); ++i) out.third[i] -= b.third[i];
  return out;
}

Jet operator*(const Jet& a, const Jet& b) {
  check_compatible(a, b, "mul");
  const int v = a.width();
  Jet out(a.order, v);
  out.value = a.value * b.value;
  for (int i = 0; i < v; ++i) out.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
  if (a.order >= 2) {
    for (int i = 0; i < v; ++i)
      for (int j = 0; j <= i; ++j) {
        const std::size_t ij = Jet::pair_index(i, j);
        out.hess[ij] = a.hess[ij] * b.value + a.grad[i] * b.grad[j] +
                       a.grad[j] * b.grad[i] + a.value * b.hess[ij];
      }
  }
  if (a.order == 3) {
    for (int k = 0; k < v; ++k)
      for (int j = 0; j <= k; ++j)
        for (int i = 0; i <= j; ++i) {
          const std::size_t ij = Jet::pair_index(i, j);
          const std::size_t ik = Jet::pair_index(i, k);
          const std::size_t jk = Jet::pair_index(j, k);
          const std::size_t ijk = Jet::triple_index(i, j, k);
          out.third[ijk] = a.third[ijk] * b.value + a.hess[ij] * b.grad[k] +
                           a.hess[ik] * b.grad[j] + a.hess[jk] * b.grad[i] +
                           a.grad[i] * b.hess[jk] + a.grad[j] * b.hess[ik] +
                           a.grad[k] * b.hess[ij] + a.value * b.third[ijk];
        }
  }
  return out;
}

Jet operator/(const Jet& a, const Jet& b) {
  check_compatible(a, b, "div");
  if (b.value == 0.0) throw DomainError("div: zero denominator value part");
  const double x = b.value;
  const Jet recip =
      compose_unary(b, 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x), -6.0 / (x * x * x * x));
  return a * recip;
}

Jet operator-(const Jet& a) { return a * -1.0; }

Jet operator+(const Jet& a, double c) {
  Jet out = a;
  out.value += c;
  return out;
}
Jet operator+(double c, const Jet& a) { return a + c; }
Jet operator-(const Jet& a, double c) { return a + (-c); }
Jet operator-(double c, const Jet& a) { return (a * -1.0) + c; }

Jet operator*(const Jet& a, double c) {
  Jet out = a;
  out.value *= c;
  for (double& g : out.grad) g *= c;
  for (double& h : out.hess) h *= c;
  for (double& t : out.third) t *= c;
  return out;
}
Jet operator*(double c, const Jet& a) { return a * c; }
Jet operator/(const Jet& a, double c) {
  if (c == 0.0) throw DomainError("div: zero scalar denominator");
  return a * (1.0 / c);
}
Jet operator/(double c, const Jet& a) {
  if (a.value == 0.0) throw DomainError("div: zero denominator value part");
  const double x = a.value;
  return c * compose_unary(a, 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x),
                           -6.0 / (x * x * x * x));
}

Jet exp(const Jet& a) {
  const double e = std::exp(a.value);
  return compose_unary(a, e, e, e, e);
}

Jet log(const Jet& a) {
  if (!(a.value > 0.0)) throw DomainError("ln: non-positive value part");
  const double x = a.value;
  return compose_unary(a, std::log(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x));
}

Jet tanh(const Jet& a) {
  const double t = std::tanh(a.value);
  const double s = 1.0 - t * t; // sech^2
  return compose_unary(a, t, s, -2.0 * t * s, -2.0 * s * (1.0 - 3.0 * t * t));
}

Jet pow(const Jet& a, double exponent) {
  const double x = a.value;
  const bool integer_exponent =
      exponent == std::floor(exponent) && std::abs(exponent) < 1e15;
  if (x <= 0.0 && !(integer_exponent && exponent >= 0.0))
    throw DomainError("pow: non-positive base with non-integer or negative exponent");
  // Derivative factors k(k-1)...  computed first so that a zero factor never
  // touches pow(0, negative).
  double f[4];
  double coeff = 1.0;
  for (int d = 0; d <= 3; ++d) {
    f[d] = coeff == 0.0 ? 0.0 : coeff * std::pow(x, exponent - d);
    coeff *= exponent - d;
  }
  return compose_unary(a, f[0], f[1], f[2], f[3]);
}

Jet log_sum_exp(std::span<const Jet> args) {
  if (args.empty()) throw InvalidArgument("log_sum_exp: empty argument list");
  LogSumExpAccumulator acc(args[0].order, args[0].width());
  for (const Jet& j : args) acc.add(j);
  return acc.result();
}

Jet linear_combination(std::span<const double> coeffs, std::span<const Jet> jets,
                       double constant) {
  if (coeffs.size() != jets.size() || jets.empty())
    throw InvalidArgument("linear_combination: size mismatch");
  Jet out(jets[0].order, jets[0].width());
  out.value = constant;
  for (std::size_t n = 0; n < jets.size(); ++n) {
    const double c = coeffs[n];
    const Jet& j = jets[n];
    out.value += c * j.value;
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += c * j.grad[i];
    for (std::size_t i = 0; i < out.hess.size(); ++i) out.hess[i] += c * j.hess[i];
    for (std::size_t i = 0; i < out.third.size(); ++i) out.third[i] += c * j.third[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// LogSumExpAccumulator
// ---------------------------------------------------------------------------

LogSumExpAccumulator::LogSumExpAccumulator(int order, int width)
    : order_(order), width_(width) {
  check_order(order);
  const std::size_t p2 = Jet::pair_count(width);
  const std::size_t p3 = Jet::triple_count(width);
  a1_.resize(width);
  if (order >= 2) {
    a2_.resize(p2);
    b_.resize(p2);
  }
  if (order == 3) {
    a3_.resize(p3);
    c_.resize(p2 * width);
    t_.resize(p3);
  }
}

void LogSumExpAccumulator::rescale(double new_max) {
  const double k = std::exp(max_ - new_max);
  wsum_.scale(k);
  for (auto& a : a1_) a.scale(k);
  for (auto& a : a2_) a.scale(k);
  for (auto& a : b_) a.scale(k);
  for (auto& a : a3_) a.scale(k);
  for (auto& a : c_) a.scale(k);
  for (auto& a : t_) a.scale(k);
  max_ = new_max;
}

void LogSumExpAccumulator::add_parts(double value, const double* grad,
                                     const double* hess, const double* third) {
  if (!std::isfinite(value)) throw DomainError("log_sum_exp: non-finite exponent");
  if (count_ == 0) {
    max_ = value;
    min_ = value;
  } else if (value > max_) {
    rescale(value);
  }
  min_ = std::min(min_, value);
  if (max_ - min_ > 700.0)
    throw DomainError("log_sum_exp: exponent range exceeds 700 after shifting");
  const double shifted = value - max_;
  const double w = std::exp(shifted);
  ++count_;
  wsum_.add(w);
  const int v = width_;
  for (int i = 0; i < v; ++i) a1_[i].add(w * grad[i]);
  if (order_ >= 2) {
    for (int i = 0; i < v; ++i)
      for (int j = 0; j <= i; ++j)
        a2_[Jet::pair_index(i, j)].add(w * grad[i] * grad[j]);
    if (hess) {
      const std::size_t p2 = Jet::pair_count(v);
      for (std::size_t k = 0; k < p2; ++k) b_[k].add(w * hess[k]);
    }
  }
  if (order_ == 3) {
    for (int k = 0; k < v; ++k)
      for (int j = 0; j <= k; ++j)
        for (int i = 0; i <= j; ++i)
          a3_[Jet::triple_index(i, j, k)].add(w * grad[i] * grad[j] * grad[k]);
    if (hess) {
      const std::size_t p2 = Jet::pair_count(v);
      for (std::size_t ij = 0; ij < p2; ++ij)
        for (int k = 0; k < v; ++k) c_[ij * v + k].add(w * hess[ij] * grad[k]);
    }
    if (third) {
      const std::size_t p3 = Jet::triple_count(v);
      for (std::size_t k = 0; k < p3; ++k) t_[k].add(w * third[k]);
    }
  }
}

void LogSumExpAccumulator::add(const Jet& term) {
  if (term.order != order_ || term.width() != width_)
    throw InvalidArgument("log_sum_exp: mixed jet order or width");
  add_parts(term.value, term.grad.data(), term.hess.empty() ? nullptr : term.hess.data(),
            term.third.empty() ? nullptr : term.third.data());
}

void LogSumExpAccumulator::add_affine(double value, std::span<const double> grad) {
  if (static_cast<int>(grad.size()) != width_)
    throw InvalidArgument("log_sum_exp: affine gradient width mismatch");
  add_parts(value, grad.data(), nullptr, nullptr);
}

void LogSumExpAccumulator::add_term(double value, std::span<const double> grad,
                                    std::span<const double> hess,
                                    std::span<const double> third) {
  if (static_cast<int>(grad.size()) != width_)
    throw InvalidArgument("log_sum_exp: gradient width mismatch");
  add_parts(value, grad.data(), hess.empty() ? nullptr : hess.data(),
            third.empty() ? nullptr : third.data());
}

void LogSumExpAccumulator::merge(const LogSumExpAccumulator& other) {
  if (other.order_ != order_ || other.width_ != width_)
    throw InvalidArgument("log_sum_exp: merging incompatible accumulators");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double new_max = std::max(max_, other.max_);
  rescale(new_max);
  min_ = std::min(min_, other.min_);
  if (max_ - min_ > 700.0)
    throw DomainError("log_sum_exp: exponent range exceeds 700 after shifting");
  const double k = std::exp(other.max_ - new_max);
  count_ += other.count_;
  wsum_.add_scaled(other.wsum_, k);
  for (std::size_t i = 0; i < a1_.size(); ++i) a1_[i].add_scaled(other.a1_[i], k);
  for (std::size_t i = 0; i < a2_.size(); ++i) a2_[i].add_scaled(other.a2_[i], k);
  for (std::size_t i = 0; i < b_.size(); ++i) b_[i].add_scaled(other.b_[i], k);
  for (std::size_t i = 0; i < a3_.size(); ++i) a3_[i].add_scaled(other.a3_[i], k);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i].add_scaled(other.c_[i], k);
  for (std::size_t i = 0; i < t_.size(); ++i) t_[i].add_scaled(other.t_[i], k);
}

Jet LogSumExpAccumulator::result() const {
  if (count_ == 0) throw InvalidArgument("log_sum_exp: empty accumulator");
  const double s = wsum_.value();
  if (!(s > 0.0)) throw DomainError("log_sum_exp: vanishing weight sum");
  const int v = width_;
  Jet out(order_, v);
  out.value = max_ + std::log(s);

  std::vector<double> m1(v);
  for (int i = 0; i < v; ++i) m1[i] = a1_[i].value() / s;
  for (int i = 0; i < v; ++i) out.grad[i] = m1[i];

  if (order_ < 2) return out;

  const std::size_t p2 = Jet::pair_count(v);
  std::vector<double> m2(p2), mb(p2);
  for (std::size_t k = 0; k < p2; ++k) {
    m2[k] = a2_[k].value() / s;
    mb[k] = b_[k].value() / s;
  }
  for (int i = 0; i < v; ++i)
    for (int j = 0; j <= i; ++j) {
      const std::size_t ij = Jet::pair_index(i, j);
      out.hess[ij] = mb[ij] + m2[ij] - m1[i] * m1[j];
    }

  if (order_ < 3) return out;

  for (int k = 0; k < v; ++k)
    for (int j = 0; j <= k; ++j)
      for (int i = 0; i <= j; ++i) {
        const std::size_t ij = Jet::pair_index(i, j);
        const std::size_t ik = Jet::pair_index(i, k);
        const std::size_t jk = Jet::pair_index(j, k);
        const std::size_t ijk = Jet::triple_index(i, j, k);
        const double mt = t_[ijk].value() / s;
        const double m3 = a3_[ijk].value() / s;
        const double c_ij_k = c_[ij * v + k].value() / s;
        const double c_ik_j = c_[ik * v + j].value() / s;
        const double c_jk_i = c_[jk * v + i].value() / s;
        out.third[ijk] = mt + (c_ij_k - mb[ij] * m1[k]) + (c_ik_j - mb[ik] * m1[j]) +
                         (c_jk_i - mb[jk] * m1[i]) + m3 -
                         (m2[ij] * m1[k] + m2[ik] * m1[j] + m2[jk] * m1[i]) +
                         2.0 * m1[i] * m1[j] * m1[k];
      }
  return out;
}

} // namespace cth::ad
