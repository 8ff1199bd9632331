#ifndef CTH_LINALG_HPP
#define CTH_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cth/errors.hpp"

namespace cth {

/// Compensated (Kahan-Neumaier) accumulator. Long enumerations sum up to
/// 2^20 terms; plain summation would eat three digits of the 1e-10..1e-12
/// tolerance budget.
struct KahanAcc {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  void scale(double k) {
    sum *= k;
    comp *= k;
  }
  void add_scaled(const KahanAcc& other, double k) {
    add(other.sum * k);
    comp += other.comp * k;
  }
  double value() const { return sum + comp; }
};

/// Symmetric matrix with packed lower-triangular storage, so symmetry is
/// structural. Index (i,j) with i >= j maps to i*(i+1)/2 + j.
class SymMat {
public:
  SymMat() = default;
  explicit SymMat(int dim) : dim_(dim), a_(packed_size(dim), 0.0) {}

  static std::size_t packed_size(int dim) {
    return static_cast<std::size_t>(dim) * (dim + 1) / 2;
  }
  static std::size_t packed_index(int i, int j) {
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return a_[packed_index(i, j)]; }
  double& at(int i, int j) { return a_[packed_index(i, j)]; }
  std::span<const double> packed() const { return a_; }
  std::span<double> packed() { return a_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

  SymMat& operator+=(const SymMat& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }

  friend double max_abs_diff(const SymMat& a, const SymMat& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.a_.size(); ++k)
      m = std::max(m, std::abs(a.a_[k] - b.a_[k]));
    return m;
  }

private:
  int dim_ = 0;
  std::vector<double> a_;
};

/// Dense row-major matrix, used for Jacobians and embedding tangents.
class Mat {
public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double operator()(int r, int c) const { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& at(int r, int c) { return a_[static_cast<std::size_t>(r) * cols_ + c]; }

private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
std::vector<double> matvec(const Mat& a, std::span<const double> x);

/// Congruence pullback J^T T J of a symmetric tensor along a tangent map.
SymMat congruence(const SymMat& t, const Mat& j);

/// Determinant (throws InvalidArgument on non-square input).
double det(const Mat& a);

/// Matrix inverse; throws SingularityError when not invertible.
Mat inverse(const Mat& a);

/// Smallest diagonal pivot of an LDL^T factorization; used for the
/// positive-definiteness checks with an explicit pivot tolerance.
double min_ldlt_pivot(const SymMat& a);

/// True when the Cholesky factorization succeeds with all pivots > tol.
bool is_positive_definite(const SymMat& a, double pivot_tol);

/// Solve A x = b for symmetric positive definite A via Cholesky.
/// Returns false (leaving x untouched) when the factorization fails.
bool solve_spd(const SymMat& a, std::span<const double> b, std::vector<double>& x);

/// Eigenvalues of a symmetric matrix, ascending.
std::vector<double> sym_eigenvalues(const SymMat& a);

/// (positive count, negative count) of eigenvalues with |lambda| > cutoff.
std::pair<int, int> signature(const SymMat& a, double cutoff);

} // namespace cth

#endif
