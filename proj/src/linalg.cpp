#include "cth/linalg.hpp"

#include <Eigen/Dense>

namespace cth {

namespace {

Eigen::MatrixXd to_eigen(const Mat& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) m(r, c) = a(r, c);
  return m;
}

Eigen::MatrixXd to_eigen(const SymMat& a) {
  Eigen::MatrixXd m(a.dim(), a.dim());
  for (int r = 0; r < a.dim(); ++r)
    for (int c = 0; c < a.dim(); ++c) m(r, c) = a(r, c);
  return m;
}

} // namespace

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("matmul: shape mismatch");
  Mat out(a.rows(), b.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int k = 0; k < a.cols(); ++k) {
      const double ark = a(r, k);
      if (ark == 0.0) continue;
      for (int c = 0; c < b.cols(); ++c) out.at(r, c) += ark * b(k, c);
    }
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out.at(c, r) = a(r, c);
  return out;
}

std::vector<double> matvec(const Mat& a, std::span<const double> x) {
  if (static_cast<std::size_t>(a.cols()) != x.size())
    throw InvalidArgument("matvec: shape mismatch");
  std::vector<double> out(a.rows(), 0.0);
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out[r] += a(r, c) * x[c];
  return out;
}

SymMat congruence(const SymMat& t, const Mat& j) {
  if (t.dim() != j.rows()) throw InvalidArgument("congruence: shape mismatch");
  const int n = j.cols();
  // scratch = T J
  Mat tj(t.dim(), n);
  for (int r = 0; r < t.dim(); ++r)
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int k = 0; k < t.dim(); ++k) s += t(r, k) * j(k, c);
      tj.at(r, c) = s;
    }
  SymMat out(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b <= a; ++b) {
      double s = 0.0;
      for (int k = 0; k < t.dim(); ++k) s += j(k, a) * tj(k, b);
      out.at(a, b) = s;
    }
  return out;
}

double det(const Mat& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("det: non-square matrix");
  if (a.rows() == 0) return 1.0;
  return to_eigen(a).partialPivLu().determinant();
}

Mat inverse(const Mat& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("inverse: non-square matrix");
  Eigen::MatrixXd m = to_eigen(a);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw SingularityError("inverse: singular matrix");
  Eigen::MatrixXd inv = lu.inverse();
  Mat out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out.at(r, c) = inv(r, c);
  return out;
}

double min_ldlt_pivot(const SymMat& a) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(to_eigen(a));
  return ldlt.vectorD().minCoeff();
}

bool is_positive_definite(const SymMat& a, double pivot_tol) {
  if (a.dim() == 0) return false;
  return min_ldlt_pivot(a) > pivot_tol;
}

bool solve_spd(const SymMat& a, std::span<const double> b, std::vector<double>& x) {
  Eigen::LLT<Eigen::MatrixXd> llt(to_eigen(a));
  if (llt.info() != Eigen::Success) return false;
  Eigen::VectorXd rhs(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = b[i];
  Eigen::VectorXd sol = llt.solve(rhs);
  x.assign(sol.data(), sol.data() + sol.size());
  return true;
}

std::vector<double> sym_eigenvalues(const SymMat& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(a), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

std::pair<int, int> signature(const SymMat& a, double cutoff) {
  int pos = 0, neg = 0;
  for (double ev : sym_eigenvalues(a)) {
    if (ev > cutoff) ++pos;
    if (ev < -cutoff) ++neg;
  }
  return {pos, neg};
}

} // namespace cth
