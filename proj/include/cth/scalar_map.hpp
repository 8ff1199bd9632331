#ifndef CTH_SCALAR_MAP_HPP
#define CTH_SCALAR_MAP_HPP

#include <functional>
#include <span>
#include <vector>

#include "cth/jet.hpp"
#include "cth/linalg.hpp"

namespace cth {

/// A scalar map R^v -> R composed of jet elementary operations. Evaluating
/// it on seeded jets yields exact derivatives up to the seeds' order.
using ScalarMap = std::function<ad::Jet(std::span<const ad::Jet>)>;

struct HessianResult {
  double value = 0.0;
  std::vector<double> gradient;
  SymMat hessian;
};

/// (f(at), grad f(at), hess f(at)) via order-2 jets.
inline HessianResult hessian(const ScalarMap& f, std::span<const double> at) {
  const std::vector<ad::Jet> seeds = ad::seed(at, 2);
  const ad::Jet out = f(seeds);
  return {out.value, out.grad, out.hessian_matrix()};
}

/// (f(at), grad f(at)) via order-1 jets.
inline std::pair<double, std::vector<double>> gradient(const ScalarMap& f,
                                                       std::span<const double> at) {
  const std::vector<ad::Jet> seeds = ad::seed(at, 1);
  const ad::Jet out = f(seeds);
  return {out.value, out.grad};
}

} // namespace cth

#endif
