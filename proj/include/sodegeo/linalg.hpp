#pragma once

// Dense linear algebra with jet entries (so derivatives flow through a solve),
// plus a few value-level helpers built on Eigen.

#include <Eigen/Dense>
#include <cmath>
#include <algorithm>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sodegeo/jet.hpp"

namespace sodegeo {

template <class T>
using Matrix = std::vector<std::vector<T>>;

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& msg, double condition)
      : std::runtime_error(msg), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

template <class T>
Eigen::MatrixXd value_matrix(const Matrix<T>& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  const auto m = n == 0 ? 0 : static_cast<Eigen::Index>(a[0].size());
  Eigen::MatrixXd v(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) v(i, j) = scalar_value(a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  }
  return v;
}

/// 2-norm condition number of the value matrix (infinity when singular).
inline double condition_number(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

/// Solves A X = B with partial pivoting on the point values. B may have
/// several columns. Throws SingularMatrixError when the value matrix is
/// numerically singular (condition number above `max_condition`).
template <class T>
Matrix<T> solve(Matrix<T> a, Matrix<T> b, double max_condition = 1e12) {
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("solve: row count mismatch");
  double cond = condition_number(value_matrix(a));
  if (!(cond <= max_condition)) {
    throw SingularMatrixError("matrix is singular to working precision (condition estimate " +
                                  (std::isfinite(cond) ? std::to_string(cond) : std::string("inf")) + ")",
                              cond);
  }
  const std::size_t cols = n == 0 ? 0 : b[0].size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(scalar_value(a[i][k])) > std::abs(scalar_value(a[piv][k]))) piv = i;
    }
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    T inv = reciprocal(a[k][k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      if (detail::is_exact_zero(a[i][k])) continue;
      T f = a[i][k] * inv;
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      for (std::size_t j = 0; j < cols; ++j) b[i][j] -= f * b[k][j];
    }
  }
  Matrix<T> x(n, std::vector<T>(cols, T(0.0)));
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t ii = n; ii-- > 0;) {
      T s = b[ii][c];
      for (std::size_t j = ii + 1; j < n; ++j) s -= a[ii][j] * x[j][c];
      x[ii][c] = s / a[ii][ii];
    }
  }
  return x;
}

template <class T>
std::vector<T> solve(const Matrix<T>& a, const std::vector<T>& b, double max_condition = 1e12) {
  Matrix<T> bm;
  for (const auto& v : b) bm.push_back({v});
  Matrix<T> x = solve(a, bm, max_condition);
  std::vector<T> out;
  for (auto& row : x) out.push_back(row[0]);
  return out;
}

template <class T>
Matrix<T> inverse(const Matrix<T>& a, double max_condition = 1e12) {
  const std::size_t n = a.size();
  Matrix<T> id(n, std::vector<T>(n, T(0.0)));
  for (std::size_t i = 0; i < n; ++i) id[i][i] = T(1.0);
  return solve(a, id, max_condition);
}

/// Cholesky test on a symmetric value matrix.
inline bool is_positive_definite(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  return llt.info() == Eigen::Success;
}

/// Real roots of c[0] + c[1] x + ... + c[d] x^d via companion-matrix
/// eigenvalues. Leading zero coefficients are dropped; roots with
/// |imag| > imag_tol * (1 + |root|) are discarded.
inline std::vector<double> real_polynomial_roots(std::vector<double> c, double imag_tol = 1e-8) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  if (c.size() <= 1) return {};
  const std::size_t d = c.size() - 1;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 1; i < d; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  for (std::size_t i = 0; i < d; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d - 1)) = -c[i] / c[d];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<double> roots;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    std::complex<double> z = es.eigenvalues()(i);
    if (std::abs(z.imag()) <= imag_tol * (1.0 + std::abs(z))) roots.push_back(z.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Groups sorted values closer than `tol` and returns (mean, multiplicity).
inline std::vector<std::pair<double, int>> cluster(const std::vector<double>& sorted, double tol = 1e-6) {
  std::vector<std::pair<double, int>> out;
  for (double r : sorted) {
    if (!out.empty() && std::abs(r - out.back().first / out.back().second) <= tol) {
      out.back().first += r;
      ++out.back().second;
    } else {
      out.push_back({r, 1});
    }
  }
  for (auto& [s, k] : out) s /= k;
  return out;
}

/// Orthonormal basis of the numerical null space of a (columns of result).
inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, double rel_tol = 1e-8) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double smax = s.size() ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * std::max(1.0, smax)) ++rank;
  }
  return svd.matrixV().rightCols(a.cols() - rank);
}

/// Coefficients (ascending) of the polynomial of degree nodes.size() - 1
/// through (nodes[i], values[i]).
inline std::vector<double> interpolate_polynomial(const std::vector<double>& nodes, const std::vector<double>& values) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd v(n, n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      v(i, j) = p;
      p *= nodes[static_cast<std::size_t>(i)];
    }
    y(i) = values[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd c = v.fullPivLu().solve(y);
  return std::vector<double>(c.data(), c.data() + c.size());
}

}  // namespace sodegeo
