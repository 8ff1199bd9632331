#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cth/ensemble.hpp"

namespace cth {

namespace {

/// Fully materialized microstate table.
class TableSource final : public MicrostateSource {
public:
  TableSource(int n, std::vector<Microstate> states)
      : n_(n), states_(std::move(states)) {}
  std::size_t size() const override { return states_.size(); }
  int n_observables() const override { return n_; }
  double fetch(std::size_t index, std::span<double> out) const override {
    const Microstate& m = states_[index];
    std::copy(m.observables.begin(), m.observables.end(), out.begin());
    return m.log_degeneracy;
  }

private:
  int n_;
  std::vector<Microstate> states_;
};

/// Periodic Ising chain, states generated from the index bit pattern so
/// the full 2^N table is never stored.
class IsingRingSource final : public MicrostateSource {
public:
  IsingRingSource(int N, double J, double h) : N_(N), J_(J), h_(h) {}
  std::size_t size() const override { return std::size_t{1} << N_; }
  int n_observables() const override { return 2; }
  double fetch(std::size_t index, std::span<double> out) const override {
    int bond_sum = 0; // sum s_i s_{i+1} over the ring
    int mag = 0;
    const int s0 = (index & 1u) ? 1 : -1;
    int prev = s0;
    mag += s0;
    for (int i = 1; i < N_; ++i) {
      const int s = (index >> i) & 1u ? 1 : -1;
      bond_sum += prev * s;
      mag += s;
      prev = s;
    }
    bond_sum += prev * s0;
    out[0] = -J_ * bond_sum - h_ * mag;
    out[1] = static_cast<double>(mag);
    return 0.0;
  }

private:
  int N_;
  double J_, h_;
};

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

} // namespace

Ensemble two_level(double eps) {
  if (!std::isfinite(eps)) throw InvalidArgument("two_level: eps must be finite");
  std::vector<Microstate> states{{{0.0}, 0.0}, {{eps}, 0.0}};
  return Ensemble::enumerated(std::make_shared<TableSource>(1, std::move(states)),
                              {"level"}, "two_level", {{"eps", eps}});
}

Ensemble ising_ring(int N, double J, double h) {
  if (N < 2 || N > 20)
    throw InvalidArgument("ising_ring: N must be in [2, 20], got " + std::to_string(N));
  if (!std::isfinite(J) || !std::isfinite(h))
    throw InvalidArgument("ising_ring: J and h must be finite");
  return Ensemble::enumerated(std::make_shared<IsingRingSource>(N, J, h),
                              {"energy", "magnetization"}, "ising_ring",
                              {{"N", static_cast<double>(N)}, {"J", J}, {"h", h}});
}

Ensemble quadratic(const SymMat& C, std::vector<double> b) {
  const int n = C.dim();
  if (n < 1) throw InvalidArgument("quadratic: empty matrix");
  if (b.empty()) b.assign(n, 0.0);
  if (static_cast<int>(b.size()) != n)
    throw InvalidArgument("quadratic: linear term dimension mismatch");
  if (min_ldlt_pivot(C) <= 0.0)
    throw InvalidArgument("quadratic: C must be positive definite");

  ScalarMap phi = [C, b, n](std::span<const ad::Jet> I) {
    ad::Jet acc = ad::Jet::constant(0.0, I[0].order, I[0].width());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) acc = acc + C(i, j) * (I[i] * I[j]);
      acc = acc + 0.5 * C(i, i) * (I[i] * I[i]);
      acc = acc + b[i] * I[i];
    }
    return acc;
  };

  std::vector<std::pair<std::string, double>> params;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      params.emplace_back("c" + std::to_string(i + 1) + std::to_string(j + 1), C(i, j));
  for (int i = 0; i < n; ++i) params.emplace_back("b" + std::to_string(i + 1), b[i]);
  return Ensemble::analytic(std::move(phi), n, {}, "quadratic", std::move(params));
}

Ensemble ensemble_from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model file: JSON syntax error at line " +
                     std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }

  if (!doc.is_object()) throw ParseError("model file: top level must be an object");
  if (!doc.contains("n") || !doc["n"].is_number_integer())
    throw ParseError("model file: field \"n\" (integer) is required");
  const int n = doc["n"].get<int>();
  if (n < 1) throw ParseError("model file: \"n\" must be >= 1");

  std::vector<std::string> names;
  if (doc.contains("names")) {
    if (!doc["names"].is_array())
      throw ParseError("model file: field \"names\" must be an array of strings");
    for (std::size_t i = 0; i < doc["names"].size(); ++i) {
      if (!doc["names"][i].is_string())
        throw ParseError("model file: names[" + std::to_string(i) + "] is not a string");
      names.push_back(doc["names"][i].get<std::string>());
    }
    if (static_cast<int>(names.size()) != n)
      throw ParseError("model file: \"names\" must have length n = " + std::to_string(n));
  }

  if (!doc.contains("microstates") || !doc["microstates"].is_array())
    throw ParseError("model file: field \"microstates\" (array) is required");
  std::vector<Microstate> states;
  for (std::size_t i = 0; i < doc["microstates"].size(); ++i) {
    const auto& rec = doc["microstates"][i];
    const std::string where = "microstates[" + std::to_string(i) + "]";
    if (!rec.is_object()) throw ParseError("model file: " + where + " is not an object");
    if (!rec.contains("H") || !rec["H"].is_array())
      throw ParseError("model file: " + where + ".H (array of numbers) is required");
    Microstate m;
    for (std::size_t a = 0; a < rec["H"].size(); ++a) {
      if (!rec["H"][a].is_number())
        throw ParseError("model file: " + where + ".H[" + std::to_string(a) +
                         "] is not a number");
      m.observables.push_back(rec["H"][a].get<double>());
    }
    if (static_cast<int>(m.observables.size()) != n)
      throw ParseError("model file: " + where + ".H must have length n = " +
                       std::to_string(n));
    if (rec.contains("log_g")) {
      if (!rec["log_g"].is_number())
        throw ParseError("model file: " + where + ".log_g is not a number");
      m.log_degeneracy = rec["log_g"].get<double>();
    }
    states.push_back(std::move(m));
  }
  if (states.size() < 2) throw ParseError("model file: needs at least two microstates");

  return Ensemble::enumerated(std::make_shared<TableSource>(n, std::move(states)),
                              std::move(names), "file");
}

Ensemble ensemble_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("model file: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ensemble_from_json_text(buf.str());
}

} // namespace cth
