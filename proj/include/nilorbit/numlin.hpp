#pragma once

// Dense complex linear algebra for the monodromy and period-domain layers:
// Schur-based spectra with generalized eigenspaces, joint eigenblocks of
// commuting families, matrix exp/log, subspace gaps and Ad-norms.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nilorbit {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kTwoPiI{0.0, 2.0 * std::numbers::pi};

/// Base of every error raised by the toolkit. `residual()` carries the
/// offending quantity (commutator size, margin, ...) when there is one.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A precondition or structural invariant of the input does not hold.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// An iteration failed to converge or a postcondition could not be met.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Matrix& m) {
  return m.array().isFinite().all();
}

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Square complex matrix acting on the flat-section space.
class Operator {
 public:
  explicit Operator(Matrix entries) : m_(std::move(entries)) {
    if (m_.rows() < 1 || m_.rows() != m_.cols())
      throw ContractViolation("operator must be a nonempty square matrix");
    if (!all_finite(m_)) throw ContractViolation("operator has non-finite entries");
  }

  static Operator identity(Index r) { return Operator(Matrix::Identity(r, r)); }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

/// Hermitian positive definite form <u, v> = v^* G u.
class InnerProduct {
 public:
  static InnerProduct standard(Index n) { return InnerProduct(Matrix::Identity(n, n)); }

  explicit InnerProduct(Matrix gram) : gram_(std::move(gram)) {
    if (gram_.rows() < 1 || gram_.rows() != gram_.cols())
      throw ContractViolation("inner product Gram matrix must be square");
    if (!all_finite(gram_)) throw ContractViolation("inner product has non-finite entries");
    const double scale = std::max(1.0, gram_.norm());
    if ((gram_ - gram_.adjoint()).norm() > 1e-12 * scale)
      throw ContractViolation("inner product Gram matrix is not hermitian");
    gram_ = 0.5 * (gram_ + gram_.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram_, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-14 * std::max(hi, 1e-300)))
      throw ContractViolation("inner product is not positive definite", lo);
    Eigen::LLT<Matrix> llt(gram_);
    lower_ = llt.matrixL();
    standard_ = gram_.isIdentity(0.0);
  }

  Index dim() const { return gram_.rows(); }
  const Matrix& gram() const { return gram_; }
  bool is_standard() const { return standard_; }

  /// Coordinates in which this form becomes the standard one (x -> L^* x).
  Matrix whiten(const Matrix& x) const {
    if (standard_) return x;
    return lower_.adjoint() * x;
  }
  Matrix unwhiten(const Matrix& y) const {
    if (standard_) return y;
    return lower_.adjoint().triangularView<Eigen::Upper>().solve(y);
  }

  Complex inner(const Vector& u, const Vector& v) const { return v.dot(gram_ * u); }
  double norm(const Vector& v) const { return std::sqrt(std::max(0.0, inner(v, v).real())); }

 private:
  Matrix gram_;
  Matrix lower_;
  bool standard_ = false;
};

/// Subspace of C^r with a basis orthonormal for the attached inner product.
class Subspace {
 public:
  Subspace(Matrix basis, InnerProduct ip) : basis_(std::move(basis)), ip_(std::move(ip)) {
    if (basis_.rows() != ip_.dim()) throw ContractViolation("subspace basis has wrong ambient size");
    if (basis_.cols() > basis_.rows()) throw ContractViolation("subspace has more basis vectors than ambient dimension");
    if (basis_.cols() > 0) {
      const Matrix gram = basis_.adjoint() * ip_.gram() * basis_;
      const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).norm();
      if (err > 1e-10) throw ContractViolation("subspace basis is not orthonormal", err);
    }
  }

  explicit Subspace(Matrix orthonormal_basis)
      : Subspace(orthonormal_basis, InnerProduct::standard(orthonormal_basis.rows())) {}

  static Subspace zero(Index ambient) { return Subspace(Matrix(ambient, 0)); }
  static Subspace whole(Index ambient) { return Subspace(Matrix::Identity(ambient, ambient)); }

  Index ambient_dim() const { return basis_.rows(); }
  Index dim() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }
  const InnerProduct& inner_product() const { return ip_; }

  /// ip-orthogonal projector onto the subspace.
  Matrix projector() const { return basis_ * basis_.adjoint() * ip_.gram(); }

 private:
  Matrix basis_;
  InnerProduct ip_;
};

/// Orthonormal basis of span(vectors) for `ip`; rank by singular values
/// above `rel_tol` times the largest one.
inline Subspace orthonormalize(const Matrix& vectors, const InnerProduct& ip, double rel_tol = 1e-10) {
  if (vectors.rows() != ip.dim()) throw ContractViolation("orthonormalize: vector length does not match inner product");
  if (!all_finite(vectors)) throw ContractViolation("orthonormalize: non-finite input");
  if (vectors.cols() == 0) return Subspace(Matrix(ip.dim(), 0), ip);
  const Matrix y = ip.whiten(vectors);
  Eigen::JacobiSVD<Matrix> svd(y, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Index rank = 0;
  if (s(0) > 0.0) {
    while (rank < s.size() && s(rank) > rel_tol * s(0)) ++rank;
  }
  Matrix u = svd.matrixU().leftCols(rank);
  return Subspace(ip.unwhiten(u), ip);
}

inline Subspace orthonormalize(const Matrix& vectors) {
  return orthonormalize(vectors, InnerProduct::standard(vectors.rows()));
}

/// Orthonormalizes an ordered full-rank frame so that the span of every
/// leading block of columns is preserved.
inline Matrix orthonormalize_adapted(const Matrix& frame, const InnerProduct& ip) {
  if (frame.cols() == 0) return frame;
  const Matrix y = ip.whiten(frame);
  Eigen::HouseholderQR<Matrix> qr(y);
  Matrix q = qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
  // Fix the phase so the diagonal of R is real positive; keeps frames
  // continuous in smooth parameters.
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < y.cols(); ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return ip.unwhiten(q);
}

/// Largest principal-angle sine between equal-dimensional subspaces.
inline double gap_distance(const Subspace& a, const Subspace& b, const InnerProduct& ip) {
  if (a.ambient_dim() != b.ambient_dim() || a.ambient_dim() != ip.dim())
    throw ContractViolation("gap_distance: ambient dimensions differ");
  if (a.dim() != b.dim()) throw ContractViolation("gap_distance: subspace dimensions differ");
  if (a.dim() == 0 || a.dim() == a.ambient_dim()) return 0.0;
  const Matrix ua = orthonormalize_adapted(ip.whiten(a.basis()), InnerProduct::standard(ip.dim()));
  const Matrix ub = orthonormalize_adapted(ip.whiten(b.basis()), InnerProduct::standard(ip.dim()));
  const Matrix resid = ua - ub * (ub.adjoint() * ua);
  return std::min(1.0, spectral_norm(resid));
}

inline double gap_distance(const Subspace& a, const Subspace& b) {
  return gap_distance(a, b, InnerProduct::standard(a.ambient_dim()));
}

// ---------------------------------------------------------------------------
// Spectra

struct SpectrumOptions {
  /// Eigenvalues closer than this (relative to max(1, |A|_F)) are merged.
  double cluster_tol = 1e-8;
  /// Also merge eigenvalues whose spread is explained by a perturbed
  /// Jordan block of the merged size.
  bool defect_aware = true;
  int max_schur_iterations_per_row = 60;
};

struct EigenCluster {
  Complex eigenvalue;
  Index multiplicity = 0;
  Subspace space;   // generalized eigenspace, orthonormal
  double spread = 0.0;  // max distance of a member eigenvalue from the mean
};

namespace detail {

// Swaps the adjacent diagonal entries k, k+1 of the upper triangular T,
// updating the Schur vectors U.
inline void swap_schur_pair(Matrix& t, Matrix& u, Index k) {
  const Complex a = t(k, k);
  const Complex b = t(k + 1, k + 1);
  Complex x1 = t(k, k + 1);
  Complex x2 = b - a;
  const double nrm = std::hypot(std::abs(x1), std::abs(x2));
  if (nrm == 0.0) return;
  x1 /= nrm;
  x2 /= nrm;
  const Index n = t.rows();
  for (Index i = 0; i < n; ++i) {
    const Complex c0 = t(i, k), c1 = t(i, k + 1);
    t(i, k) = c0 * x1 + c1 * x2;
    t(i, k + 1) = -c0 * std::conj(x2) + c1 * std::conj(x1);
    const Complex u0 = u(i, k), u1 = u(i, k + 1);
    u(i, k) = u0 * x1 + u1 * x2;
    u(i, k + 1) = -u0 * std::conj(x2) + u1 * std::conj(x1);
  }
  for (Index j = 0; j < n; ++j) {
    const Complex r0 = t(k, j), r1 = t(k + 1, j);
    t(k, j) = std::conj(x1) * r0 + std::conj(x2) * r1;
    t(k + 1, j) = -x2 * r0 + x1 * r1;
  }
  t(k + 1, k) = 0.0;
  t(k, k) = b;
  t(k + 1, k + 1) = a;
}

inline std::vector<std::vector<Index>> single_linkage(const std::vector<Complex>& ev,
                                                      const std::vector<Index>& members, double tau) {
  const std::size_t m = members.size();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (std::abs(ev[members[i]] - ev[members[j]]) <= tau) parent[find(i)] = find(j);
  std::vector<std::vector<Index>> groups;
  std::vector<long> slot(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[r])].push_back(members[i]);
  }
  return groups;
}

inline double diameter(const std::vector<Complex>& ev, const std::vector<Index>& g) {
  double d = 0.0;
  for (Index i : g)
    for (Index j : g) d = std::max(d, std::abs(ev[i] - ev[j]));
  return d;
}

// True when the centred eigenvalues d_i of a candidate cluster are, up to
// roundoff, the roots of x^k: their elementary symmetric functions e_j are
// the characteristic coefficients of the cluster block minus its mean,
// which are well conditioned even when the roots are not. A false merge of
// distinct eigenvalues shows up in e_2.
inline bool coalesced(const std::vector<Complex>& ev, const std::vector<Index>& g, double scale, Index n) {
  const auto k = static_cast<Index>(g.size());
  Complex mean = 0.0;
  for (Index i : g) mean += ev[static_cast<std::size_t>(i)];
  mean /= static_cast<double>(k);
  std::vector<Complex> e(static_cast<std::size_t>(k + 1), 0.0);
  e[0] = 1.0;
  for (Index i : g) {
    const Complex d = ev[static_cast<std::size_t>(i)] - mean;
    for (Index j = k; j >= 1; --j) e[static_cast<std::size_t>(j)] += d * e[static_cast<std::size_t>(j - 1)];
  }
  const double eps = std::numeric_limits<double>::epsilon();
  for (Index j = 2; j <= k; ++j) {
    const double tol = 100.0 * static_cast<double>(k * j * n) * eps * std::pow(scale, static_cast<double>(j));
    if (std::abs(e[static_cast<std::size_t>(j)]) > tol) return false;
  }
  return true;
}

// Clusters eigenvalues. Candidates come from single linkage at the spread a
// perturbed Jordan block of size k_max could produce; a candidate is kept
// when its diameter is within the plain tolerance, or when it is consistent
// with one perturbed multiple eigenvalue of its own size. Otherwise it is
// split with a smaller k_max.
inline void cluster_recursive(const std::vector<Complex>& ev, const std::vector<Index>& members, Index k_max,
                              double plain_tol, const SpectrumOptions& opt, double scale, Index n,
                              std::vector<std::vector<Index>>& out) {
  const double eps = std::numeric_limits<double>::epsilon();
  auto radius = [&](Index k) {
    if (!opt.defect_aware || k < 2) return 0.0;
    return 10.0 * std::pow(static_cast<double>(n) * eps, 1.0 / static_cast<double>(k)) * scale;
  };
  const double tau = std::max(plain_tol, radius(k_max));
  for (auto& g : single_linkage(ev, members, tau)) {
    const auto k = static_cast<Index>(g.size());
    const double diam = diameter(ev, g);
    const bool defective = opt.defect_aware && diam <= 2.0 * radius(k) && coalesced(ev, g, scale, n);
    if (k == 1 || diam <= plain_tol || defective || k_max <= 1) {
      out.push_back(std::move(g));
    } else {
      cluster_recursive(ev, g, std::min(k_max, k) - 1, plain_tol, opt, scale, n, out);
    }
  }
}

}  // namespace detail

namespace detail {

struct SchurData {
  Matrix t, u;
  std::vector<Complex> ev;
  double scale = 1.0;
};

inline SchurData schur(const Matrix& a, const SpectrumOptions& opt) {
  if (a.rows() < 1 || a.rows() != a.cols()) throw ContractViolation("spectrum: matrix must be square and nonempty");
  if (!all_finite(a)) throw ContractViolation("spectrum: non-finite entries");
  const Index n = a.rows();
  Eigen::ComplexSchur<Matrix> cs(n);
  cs.setMaxIterations(static_cast<Index>(opt.max_schur_iterations_per_row) * n);
  cs.compute(a);
  if (cs.info() != Eigen::Success) {
    throw ConvergenceError("spectrum: shifted QR did not converge", (a - a.adjoint()).norm());
  }
  SchurData d{cs.matrixT(), cs.matrixU(), {}, std::max(1.0, a.norm())};
  for (Index i = 0; i < n; ++i) d.ev.push_back(d.t(i, i));
  return d;
}

// Reorders each group to the top of the Schur form and reads off its
// invariant subspace; groups are emitted by ascending mean (real part,
// then imaginary part).
inline std::vector<EigenCluster> extract_clusters(const SchurData& sd, const std::vector<std::vector<Index>>& groups) {
  const Index n = sd.t.rows();
  std::vector<Complex> means;
  for (const auto& g : groups) {
    Complex sum = 0.0;
    for (Index i : g) sum += sd.ev[static_cast<std::size_t>(i)];
    means.push_back(sum / static_cast<double>(g.size()));
  }
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (std::abs(means[x].real() - means[y].real()) > 1e-12 * sd.scale) return means[x].real() < means[y].real();
    return means[x].imag() < means[y].imag();
  });

  std::vector<EigenCluster> out;
  for (std::size_t oi : order) {
    const auto& g = groups[oi];
    if (g.empty()) continue;
    Matrix t = sd.t;
    Matrix u = sd.u;
    std::vector<char> member(static_cast<std::size_t>(n), 0);
    for (Index i : g) member[static_cast<std::size_t>(i)] = 1;
    Index next = 0;
    for (Index i = 0; i < n; ++i) {
      if (!member[static_cast<std::size_t>(i)]) continue;
      for (Index k = i; k > next; --k) {
        swap_schur_pair(t, u, k - 1);
        std::swap(member[static_cast<std::size_t>(k - 1)], member[static_cast<std::size_t>(k)]);
      }
      ++next;
    }
    const auto k = static_cast<Index>(g.size());
    const Complex mean = t.topLeftCorner(k, k).trace() / static_cast<double>(k);
    double spread = 0.0;
    for (Index i : g) spread = std::max(spread, std::abs(sd.ev[static_cast<std::size_t>(i)] - mean));
    Matrix basis = orthonormalize_adapted(u.leftCols(k), InnerProduct::standard(n));
    out.push_back(EigenCluster{mean, k, Subspace(std::move(basis)), spread});
  }
  return out;
}

}  // namespace detail

/// Eigenvalues with algebraic multiplicity and generalized eigenspaces,
/// from a complex Schur form (Hessenberg reduction + shifted QR) with
/// clusters reordered to the front.
inline std::vector<EigenCluster> spectrum(const Matrix& a, const SpectrumOptions& opt = {}) {
  const auto sd = detail::schur(a, opt);
  const Index n = a.rows();
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<std::vector<Index>> groups;
  detail::cluster_recursive(sd.ev, all, n, opt.cluster_tol * sd.scale, opt, sd.scale, n, groups);
  return detail::extract_clusters(sd, groups);
}

/// Generalized eigenspaces of `a` grouped by the nearest of the given
/// eigenvalue centers (used when the clustering is already known, e.g.
/// from the unrestricted operator).
inline std::vector<EigenCluster> spectrum_about(const Matrix& a, const std::vector<Complex>& centers,
                                                const SpectrumOptions& opt = {}) {
  if (centers.empty()) throw ContractViolation("spectrum_about: no centers");
  const auto sd = detail::schur(a, opt);
  std::vector<std::vector<Index>> groups(centers.size());
  for (Index i = 0; i < a.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < centers.size(); ++c)
      if (std::abs(sd.ev[static_cast<std::size_t>(i)] - centers[c]) <
          std::abs(sd.ev[static_cast<std::size_t>(i)] - centers[best]))
        best = c;
    groups[best].push_back(i);
  }
  return detail::extract_clusters(sd, groups);
}

// ---------------------------------------------------------------------------
// Joint eigenblocks

struct JointEigenblock {
  std::vector<Complex> lambdas;  // one per generator
  Subspace space;
  double invariance_residual = 0.0;
};

inline double commutator_residual(const Matrix& x, const Matrix& y) {
  const double denom = std::max(x.norm() * y.norm(), std::numeric_limits<double>::min());
  return (x * y - y * x).norm() / denom;
}

/// Joint generalized eigenspaces of a commuting family, split generator by
/// generator: decompose w.r.t. the first, restrict the next to each block.
inline std::vector<JointEigenblock> joint_eigenblocks(const std::vector<Matrix>& ts, const SpectrumOptions& opt = {},
                                                      double commute_tol = 1e-10) {
  if (ts.empty()) throw ContractViolation("joint_eigenblocks: empty family");
  const Index n = ts.front().rows();
  for (const auto& t : ts)
    if (t.rows() != n || t.cols() != n) throw ContractViolation("joint_eigenblocks: dimension mismatch");
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      const double c = commutator_residual(ts[i], ts[j]);
      if (c > commute_tol) throw ContractViolation("joint_eigenblocks: generators do not commute", c);
    }

  struct Partial {
    std::vector<Complex> lambdas;
    Matrix basis;
  };
  std::vector<Partial> blocks{{{}, Matrix::Identity(n, n)}};
  for (const auto& t : ts) {
    // Clusters are decided once on the full operator; restrictions to
    // approximate invariant subspaces carry extra error that could split a
    // defective eigenvalue.
    std::vector<Complex> centers;
    for (const auto& c : spectrum(t, opt)) centers.push_back(c.eigenvalue);
    std::vector<Partial> next;
    for (const auto& b : blocks) {
      const Matrix restricted = b.basis.adjoint() * t * b.basis;
      for (auto& c : spectrum_about(restricted, centers, opt)) {
        Partial p{b.lambdas, b.basis * c.space.basis()};
        p.lambdas.push_back(c.eigenvalue);
        next.push_back(std::move(p));
      }
    }
    blocks = std::move(next);
  }

  std::vector<JointEigenblock> out;
  for (auto& b : blocks) {
    Matrix basis = orthonormalize_adapted(b.basis, InnerProduct::standard(n));
    double resid = 0.0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const Matrix tb = ts[j] * basis;
      const double r = (tb - basis * (basis.adjoint() * tb)).norm() / std::max(1.0, ts[j].norm());
      resid = std::max(resid, r);
      // Block eigenvalue from the trace of the restriction (well conditioned
      // even when individual eigenvalues of a Jordan block are not).
      b.lambdas[j] = (basis.adjoint() * tb).trace() / static_cast<double>(basis.cols());
    }
    if (resid > 1e-8) throw ConvergenceError("joint_eigenblocks: block is not invariant", resid);
    out.push_back(JointEigenblock{std::move(b.lambdas), Subspace(std::move(basis)), resid});
  }
  return out;
}

// ---------------------------------------------------------------------------
// exp / log

inline Matrix matrix_exp(const Matrix& a) {
  if (a.rows() != a.cols()) throw ContractViolation("matrix_exp: matrix must be square");
  if (!all_finite(a)) throw ContractViolation("matrix_exp: non-finite entries");
  Matrix e = a.exp();
  if (!all_finite(e)) throw Error("matrix_exp: overflow", a.norm());
  return e;
}

/// Logarithm of a unipotent matrix by the (finite) Mercator series.
inline Matrix log_unipotent(const Matrix& u) {
  if (u.rows() < 1 || u.rows() != u.cols()) throw ContractViolation("log_unipotent: matrix must be square");
  const Index n = u.rows();
  const Matrix x = u - Matrix::Identity(n, n);
  Matrix power = x;
  Matrix result = Matrix::Zero(n, n);
  for (Index k = 1; k < n; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    result += (sign / static_cast<double>(k)) * power;
    power = (power * x).eval();
  }
  // power == x^n here.
  const double scale = std::pow(std::max(1.0, x.norm()), static_cast<double>(n));
  const double nil = power.norm();
  if (nil > 1e-10 * scale) throw ContractViolation("log_unipotent: input is not unipotent", nil);
  return result;
}

/// Operator norm of A -> g A g^{-1} on End(V) with the Hilbert-Schmidt
/// product induced by `ip`, as the top singular value of the r^2 x r^2
/// conjugation matrix.
inline double ad_norm(const Matrix& g, const InnerProduct& ip) {
  if (g.rows() != g.cols() || g.rows() != ip.dim()) throw ContractViolation("ad_norm: dimension mismatch");
  const Index n = g.rows();
  const Matrix gw = ip.whiten(g * ip.unwhiten(Matrix::Identity(n, n)));
  Eigen::JacobiSVD<Matrix> svd_g(gw);
  const auto& s = svd_g.singularValues();
  if (!(s(n - 1) > 1e-14 * s(0))) throw ContractViolation("ad_norm: operator is singular", s(n - 1));
  const Matrix ginv = gw.inverse();
  const Matrix left = ginv.transpose();
  Matrix kron(n * n, n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = left(i, j) * gw;
  Eigen::JacobiSVD<Matrix> svd(kron);
  return svd.singularValues()(0);
}

/// ad_norm with the inverse supplied (e.g. exp(-X) for exp(X)), for
/// operators too ill-conditioned to invert: the Kronecker singular values
/// are products, so the norm is |g| |g^{-1}| in the whitened frame.
inline double ad_norm(const Matrix& g, const Matrix& ginv, const InnerProduct& ip) {
  if (g.rows() != g.cols() || g.rows() != ip.dim() || ginv.rows() != g.rows() || ginv.cols() != g.cols())
    throw ContractViolation("ad_norm: dimension mismatch");
  const Index n = g.rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix gw = ip.whiten(g * ip.unwhiten(id));
  const Matrix gwinv = ip.whiten(ginv * ip.unwhiten(id));
  return spectral_norm(gw) * spectral_norm(gwinv);
}

inline double ad_norm(const Matrix& g) { return ad_norm(g, InnerProduct::standard(g.rows())); }

}  // namespace nilorbit
