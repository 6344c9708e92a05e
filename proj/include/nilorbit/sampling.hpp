#pragma once

// Seeded random inputs for self-checks run from the command line.

#include <nilorbit/monodromy.hpp>

#include <random>

namespace nilorbit {

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = Complex(nd(rng), nd(rng));
  return m;
}

inline Matrix haar_unitary(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(n, n, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (Index i = 0; i < n; ++i) {
    const Complex d = r(i, i);
    if (std::abs(d) > 0.0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

/// p commuting quasi-unipotent operators on C^r, unitarily similar to a
/// block sum of λ_b exp(2πi(c N_b + c' N_b^2)) with Jordan blocks of size
/// at most 3 and λ_b roots of unity of order <= 12.
inline MonodromyTuple random_monodromy(Index r, std::size_t p, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size_d(1, 3), root_d(0, 11);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<Index> sizes;
  for (Index used = 0; used < r;) {
    const Index s = std::min<Index>(size_d(rng), r - used);
    sizes.push_back(s);
    used += s;
  }
  std::vector<std::vector<Complex>> lambdas(p);
  std::vector<std::vector<std::pair<double, double>>> coefs(p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      lambdas[j].push_back(std::exp(kTwoPiI * (double(root_d(rng)) / 12.0)));
      coefs[j].emplace_back(coef(rng), coef(rng));
    }
  const Matrix u = haar_unitary(r, rng);
  std::vector<Matrix> ts;
  for (std::size_t j = 0; j < p; ++j) {
    Matrix t = Matrix::Zero(r, r);
    Index off = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      const Index s = sizes[b];
      Matrix nb = Matrix::Zero(s, s);
      for (Index i = 0; i + 1 < s; ++i) nb(i + 1, i) = 1.0;
      const auto [c1, c2] = coefs[j][b];
      t.block(off, off, s, s) = lambdas[j][b] * matrix_exp(kTwoPiI * (c1 * nb + c2 * nb * nb));
      off += s;
    }
    ts.push_back(u * t * u.adjoint());
  }
  return MonodromyTuple(ts);
}

}  // namespace nilorbit
