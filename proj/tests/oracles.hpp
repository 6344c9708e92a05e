#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's own algorithms.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>
#include <utility>

namespace test_oracle {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

inline Matrix random_unitary(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
  return qr.householderQ() * Matrix::Identity(n, n);
}

/// Roots of a x^2 + b x + c with real coefficients, ascending by real part.
inline std::pair<Complex, Complex> quadratic_roots(double a, double b, double c) {
  const Complex disc = std::sqrt(Complex(b * b - 4 * a * c, 0.0));
  Complex r1 = (-b - disc) / (2 * a), r2 = (-b + disc) / (2 * a);
  if (r2.real() < r1.real()) std::swap(r1, r2);
  return {r1, r2};
}

/// Truncated Taylor series with scaling and squaring.
inline Matrix taylor_exp(const Matrix& a) {
  const double nrm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (nrm / std::ldexp(1.0, s) > 0.25) ++s;
  const Matrix x = a / std::ldexp(1.0, s);
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

inline Matrix scalar_exp_diag(const Matrix& d) {
  Matrix e = Matrix::Zero(d.rows(), d.cols());
  for (Index i = 0; i < d.rows(); ++i) e(i, i) = std::exp(d(i, i));
  return e;
}

/// Classical Gram-Schmidt on the columns, standard inner product.
inline Matrix gram_schmidt(const Matrix& v) {
  Matrix q = v;
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(v.col(j)) * q.col(i);
    q.col(j) /= q.col(j).norm();
  }
  return q;
}

/// Ad-norm for the standard inner product by enumerating the images of the
/// elementary matrices E_ij and taking the top singular value.
inline double ad_norm_elementary(const Matrix& g) {
  const Index n = g.rows();
  const Matrix gi = g.inverse();
  Matrix op(n * n, n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      Matrix e = Matrix::Zero(n, n);
      e(i, j) = 1.0;
      const Matrix img = g * e * gi;
      op.col(i * n + j) = Eigen::Map<const Vector>(img.data(), n * n);
    }
  Eigen::JacobiSVD<Matrix> svd(op);
  return svd.singularValues()(0);
}

/// For the Hilbert-Schmidt norm, |Ad g| = |g| |g^{-1}| in coordinates
/// orthonormal for the Gram matrix (symmetric square root here).
inline double ad_norm_condition(const Matrix& g, const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const Matrix root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
  const Matrix gw = root * g * root.inverse();
  Eigen::JacobiSVD<Matrix> svd(gw);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

/// Sine of the angle between two lines in C^n, standard inner product.
inline double line_angle_sine(const Vector& a, const Vector& b) {
  const Vector ua = a / a.norm();
  const Vector perp = b - ua * ua.dot(b);
  return perp.norm() / b.norm();
}

}  // namespace test_oracle
