#pragma once

// Commuting monodromy tuples: joint eigenblocks, exponents in a half-open
// window, nilpotent logarithms, the global S + N splitting, twisted
// (Deligne) frames and the dual local system.
//
// Flat multivalued sections are evaluators z -> v(z) on the log cover with
// v(z + 2πi e_j) = T_j v(z). The reference evaluator of a flat vector b is
// exp(Σ z_j R_j) b with R_j = S_j + N_j; its flat coordinates are
// exp(-Σ z_j R_j) v(z), which is the constant b.

#include <nilorbit/numlin.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace nilorbit {

using LogPoint = std::vector<Complex>;
using FlatSection = std::function<Vector(const LogPoint&)>;

class MonodromyTuple {
 public:
  explicit MonodromyTuple(std::vector<Matrix> ts, double commute_tol = 1e-10, double modulus_tol = 1e-8)
      : ts_(std::move(ts)) {
    if (ts_.empty()) throw ContractViolation("monodromy: need at least one generator");
    const Index r = ts_.front().rows();
    for (const auto& t : ts_) {
      Operator check(t);
      if (check.dim() != r) throw ContractViolation("monodromy: generators have different sizes");
      Eigen::JacobiSVD<Matrix> svd(t);
      const auto& s = svd.singularValues();
      if (!(s(r - 1) > 1e-13 * s(0))) throw ContractViolation("monodromy: generator is singular", s(r - 1));
    }
    for (std::size_t i = 0; i < ts_.size(); ++i)
      for (std::size_t j = i + 1; j < ts_.size(); ++j)
        commutator_ = std::max(commutator_, commutator_residual(ts_[i], ts_[j]));
    if (commutator_ > commute_tol) throw ContractViolation("monodromy: generators do not commute", commutator_);
    for (const auto& t : ts_)
      for (const auto& c : spectrum(t)) {
        const double dev = std::abs(std::abs(c.eigenvalue) - 1.0);
        if (dev > modulus_tol)
          throw ContractViolation("monodromy: eigenvalue off the unit circle (|λ| = " +
                                      std::to_string(std::abs(c.eigenvalue)) + ")",
                                  dev);
      }
  }

  std::size_t size() const { return ts_.size(); }
  Index dim() const { return ts_.front().rows(); }
  const Matrix& operator[](std::size_t j) const { return ts_.at(j); }
  const std::vector<Matrix>& generators() const { return ts_; }
  double commutator() const { return commutator_; }

 private:
  std::vector<Matrix> ts_;
  double commutator_ = 0.0;
};

/// Unique β in (α-1, α] with exp(2πiβ) = λ/|λ|; the closed endpoint wins
/// within a relative 1e-10 of the window boundary.
inline double normalized_exponent(Complex lambda, double alpha) {
  double theta = std::arg(lambda * std::exp(Complex(0.0, -2.0 * kPi * alpha)));  // (-π, π]
  if (theta > 0.0) theta -= 2.0 * kPi;                                           // (-2π, 0]
  const double snap = 2.0 * kPi * 1e-10;
  if (std::abs(theta) < snap || std::abs(theta + 2.0 * kPi) < snap) theta = 0.0;
  return alpha + theta / (2.0 * kPi);
}

struct MonodromyBlock {
  std::vector<Complex> lambdas;
  Subspace space;
  std::vector<double> betas;
  std::vector<Matrix> Ns;  // nilpotent logs in the block's own orthonormal basis
  Index offset = 0;        // first column of the block in P
};

struct MonodromyDecomposition {
  std::vector<double> alpha;
  std::vector<MonodromyBlock> blocks;
  std::vector<Matrix> S, N, Ts;
  Matrix P, Pinv;  // block basis and its inverse
  double cond = 1.0;
  double reconstruction_residual = 0.0;
  double commutator_residual = 0.0;

  std::size_t generators() const { return Ts.size(); }
  Index dim() const { return P.rows(); }
  Matrix R(std::size_t j) const { return S[j] + N[j]; }

  /// exp(sign · Σ z_j (S_j + N_j)).
  Matrix exp_log(const LogPoint& z, double sign = 1.0) const {
    if (z.size() != Ts.size()) throw ContractViolation("log point has the wrong number of coordinates");
    Matrix a = Matrix::Zero(dim(), dim());
    for (std::size_t j = 0; j < z.size(); ++j) a += (sign * z[j]) * R(j);
    return matrix_exp(a);
  }

  /// Index of the block containing v, or -1.
  int block_of(const Vector& v, double tol = 1e-8) const {
    const double nv = v.norm();
    if (nv == 0.0) return -1;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const Matrix& b = blocks[k].space.basis();
      if ((v - b * (b.adjoint() * v)).norm() <= tol * nv) return static_cast<int>(k);
    }
    return -1;
  }
};

inline MonodromyDecomposition decompose(const MonodromyTuple& tuple, const std::vector<double>& alpha,
                                        const SpectrumOptions& opt = {}) {
  if (alpha.size() != tuple.size()) throw ContractViolation("decompose: need one alpha per generator");
  for (double a : alpha)
    if (!std::isfinite(a)) throw ContractViolation("decompose: alpha must be finite");
  const Index r = tuple.dim();
  const std::size_t p = tuple.size();

  MonodromyDecomposition dec;
  dec.alpha = alpha;
  dec.Ts = tuple.generators();
  dec.P = Matrix(r, r);
  Matrix sdiag = Matrix::Zero(r, r);
  std::vector<Matrix> ndiag(p, Matrix::Zero(r, r));

  Index offset = 0;
  for (auto& jb : joint_eigenblocks(tuple.generators(), opt)) {
    MonodromyBlock blk{jb.lambdas, jb.space, {}, {}, offset};
    const Matrix& b = jb.space.basis();
    const Index k = b.cols();
    for (std::size_t j = 0; j < p; ++j) {
      const Complex lam = jb.lambdas[j];
      // the tuple already checked each eigenvalue; block means of a
      // non-normal generator carry roundoff proportional to its size
      if (std::abs(std::abs(lam) - 1.0) > 1e-8 * std::max(1.0, tuple[j].norm()))
        throw ContractViolation("decompose: eigenvalue off the unit circle (|λ| = " + std::to_string(std::abs(lam)) + ")",
                                std::abs(std::abs(lam) - 1.0));
      const double beta = normalized_exponent(lam, alpha[j]);
      const Matrix restricted = b.adjoint() * tuple[j] * b;
      const Matrix nj = log_unipotent(restricted / lam) / kTwoPiI;
      blk.betas.push_back(beta);
      blk.Ns.push_back(nj);
      sdiag.block(offset, offset, k, k).diagonal().setConstant(beta);
      ndiag[j].block(offset, offset, k, k) = nj;
    }
    dec.P.middleCols(offset, k) = b;
    offset += k;
    dec.blocks.push_back(std::move(blk));
  }

  Eigen::JacobiSVD<Matrix> svd(dec.P);
  const auto& sv = svd.singularValues();
  dec.cond = sv(0) / sv(r - 1);
  if (!(sv(r - 1) > 1e-12)) throw ConvergenceError("decompose: eigenblocks are not independent", dec.cond);
  dec.Pinv = dec.P.inverse();

  for (std::size_t j = 0; j < p; ++j) {
    Matrix sj = Matrix::Zero(r, r);
    // S_j is β on each block: assemble from the diagonal directly
    for (const auto& blk : dec.blocks) {
      const Index k = blk.space.dim();
      sj.block(blk.offset, blk.offset, k, k).diagonal().setConstant(blk.betas[j]);
    }
    dec.S.push_back(dec.P * sj * dec.Pinv);
    dec.N.push_back(dec.P * ndiag[j] * dec.Pinv);
  }

  for (std::size_t j = 0; j < p; ++j) {
    const Matrix back = matrix_exp(kTwoPiI * dec.R(j));
    dec.reconstruction_residual =
        std::max(dec.reconstruction_residual, (back - dec.Ts[j]).norm() / std::max(1.0, dec.Ts[j].norm()));
  }
  auto comm = [](const Matrix& x, const Matrix& y) { return (x * y - y * x).norm(); };
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double c = comm(dec.S[i], dec.N[j]);
      if (i < j) c = std::max({c, comm(dec.S[i], dec.S[j]), comm(dec.N[i], dec.N[j])});
      dec.commutator_residual = std::max(dec.commutator_residual, c);
    }
  return dec;
}

inline MonodromyDecomposition decompose(const MonodromyTuple& tuple, double alpha) {
  return decompose(tuple, std::vector<double>(tuple.size(), alpha));
}

/// Eigenvalues of S_j, from the blocks (exact by construction).
inline std::vector<double> exponents(const MonodromyDecomposition& dec, std::size_t j) {
  std::vector<double> out;
  for (const auto& b : dec.blocks) out.push_back(b.betas[j]);
  return out;
}

// ---------------------------------------------------------------------------
// Flat sections and twisting

/// Reference flat evaluator of the flat vector b.
inline FlatSection flat_section(std::shared_ptr<const MonodromyDecomposition> dec, Vector b) {
  return [dec, b = std::move(b)](const LogPoint& z) -> Vector { return dec->exp_log(z) * b; };
}

inline LogPoint shifted(const LogPoint& z, std::size_t j, double turns = 1.0) {
  LogPoint w = z;
  w[j] += turns * kTwoPiI;
  return w;
}

/// Largest relative deviation from v(z + 2πi e_j) = T_j v(z) at z.
inline double equivariance_residual(const MonodromyDecomposition& dec, const FlatSection& v, const LogPoint& z) {
  const Vector v0 = v(z);
  double res = 0.0;
  for (std::size_t j = 0; j < dec.generators(); ++j) {
    const Vector v1 = v(shifted(z, j));
    res = std::max(res, (v1 - dec.Ts[j] * v0).norm() / std::max(1.0, v0.norm()));
  }
  return res;
}

/// ṽ(z) = exp(-Σ z_j (β_j + N_j)) v(z) for v inside one block.
inline Vector twist_flat_section(const MonodromyDecomposition& dec, const FlatSection& v, const LogPoint& z,
                                 double equivariance_tol = 1e-8) {
  const double eq = equivariance_residual(dec, v, z);
  if (eq > equivariance_tol) throw ContractViolation("twist: section is not equivariant under monodromy", eq);
  const Vector vz = v(z);
  if (dec.block_of(vz) < 0) throw ContractViolation("twist: section does not lie in a single eigenblock");
  // On the block β_j + N_j agrees with S_j + N_j.
  return dec.exp_log(z, -1.0) * vz;
}

/// One entry of the twisted frame: the flat vector b of a block, seen as a
/// single-valued section.
struct TwistedFrameEntry {
  std::shared_ptr<const MonodromyDecomposition> dec;
  int block = 0;
  Vector b;

  const std::vector<double>& betas() const { return dec->blocks[static_cast<std::size_t>(block)].betas; }

  FlatSection flat() const { return flat_section(dec, b); }

  /// The twisted section in the trivialization given by the frame itself.
  Vector operator()(const LogPoint& z) const { return twist_flat_section(*dec, flat(), z); }

  /// The twisted section expressed in flat coordinates: exp(-Σ z_j R_j) b.
  Vector flat_coordinates(const LogPoint& z) const { return dec->exp_log(z, -1.0) * b; }

  /// Deviation from single-valuedness under z -> z + 2πi e_j, both for the
  /// trivialized values and for the flat coordinates (which must transform
  /// by T_j^{-1}).
  double single_valuedness_residual(const LogPoint& z) const {
    const Vector v0 = (*this)(z);
    const Vector f0 = flat_coordinates(z);
    double res = 0.0;
    for (std::size_t j = 0; j < dec->generators(); ++j) {
      const LogPoint w = shifted(z, j);
      res = std::max(res, ((*this)(w)-v0).norm() / std::max(1.0, v0.norm()));
      res = std::max(res, (dec->Ts[j] * flat_coordinates(w) - f0).norm() / std::max(1.0, f0.norm()));
    }
    return res;
  }
};

/// Twisted frame from the columns of the block basis P.
inline std::vector<TwistedFrameEntry> deligne_frame(std::shared_ptr<const MonodromyDecomposition> dec) {
  std::vector<TwistedFrameEntry> out;
  for (std::size_t k = 0; k < dec->blocks.size(); ++k) {
    const auto& blk = dec->blocks[k];
    for (Index c = 0; c < blk.space.dim(); ++c)
      out.push_back(TwistedFrameEntry{dec, static_cast<int>(k), blk.space.basis().col(c)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dual local system

/// Contragredient monodromy on V^*: μ ↦ μ ∘ T^{-1}, i.e. T^{-T} in the dual
/// basis, with the bilinear pairing μ(v) = μ^T v.
inline MonodromyTuple dual_monodromy(const MonodromyTuple& tuple) {
  std::vector<Matrix> out;
  for (const auto& t : tuple.generators()) out.push_back(t.transpose().inverse());
  return MonodromyTuple(std::move(out));
}

/// Largest distance between Sp(T̃_j) and {λ^{-1} : λ ∈ Sp(T_j)}.
inline double dual_spectrum_residual(const MonodromyTuple& tuple, const MonodromyTuple& dual) {
  double res = 0.0;
  for (std::size_t j = 0; j < tuple.size(); ++j) {
    const auto a = spectrum(tuple[j]);
    const auto b = spectrum(dual[j]);
    for (const auto& ca : a) {
      double best = std::numeric_limits<double>::max();
      for (const auto& cb : b) best = std::min(best, std::abs(cb.eigenvalue - 1.0 / ca.eigenvalue));
      res = std::max(res, best);
    }
    for (const auto& cb : b) {
      double best = std::numeric_limits<double>::max();
      for (const auto& ca : a) best = std::min(best, std::abs(cb.eigenvalue - 1.0 / ca.eigenvalue));
      res = std::max(res, best);
    }
  }
  return res;
}

struct DualPairingReport {
  double off_block_max = 0.0;        // largest |μ(v)| over mismatched blocks
  double matched_min_singular = 0.0; // smallest σ_min over matched pairings
  int matched_pairs = 0;
  bool ok = false;
};

inline bool lambdas_match_dual(const std::vector<Complex>& primal, const std::vector<Complex>& dual, double tol = 1e-6) {
  for (std::size_t j = 0; j < primal.size(); ++j)
    if (std::abs(dual[j] * primal[j] - 1.0) > tol) return false;
  return true;
}

inline DualPairingReport check_dual_pairing(const MonodromyDecomposition& dec, const MonodromyDecomposition& dual_dec,
                                            double tol = 1e-9) {
  if (dec.dim() != dual_dec.dim() || dec.generators() != dual_dec.generators())
    throw ContractViolation("check_dual_pairing: shapes differ");
  DualPairingReport rep;
  rep.matched_min_singular = std::numeric_limits<double>::max();
  bool square = true;
  for (const auto& bp : dec.blocks)
    for (const auto& bd : dual_dec.blocks) {
      const Matrix pairing = bd.space.basis().transpose() * bp.space.basis();
      if (lambdas_match_dual(bp.lambdas, bd.lambdas)) {
        ++rep.matched_pairs;
        if (pairing.rows() != pairing.cols()) {
          square = false;
          rep.matched_min_singular = 0.0;
          continue;
        }
        Eigen::JacobiSVD<Matrix> svd(pairing);
        rep.matched_min_singular = std::min(rep.matched_min_singular, svd.singularValues().minCoeff());
      } else {
        rep.off_block_max = std::max(rep.off_block_max, pairing.cwiseAbs().maxCoeff());
      }
    }
  if (rep.matched_pairs == 0) rep.matched_min_singular = 0.0;
  rep.ok = square && rep.off_block_max <= tol && rep.matched_pairs == static_cast<int>(dec.blocks.size()) &&
           rep.matched_min_singular > 1e-8;
  return rep;
}

/// max over matched blocks, basis pairs and sample points of
/// |μ̃(z)(ṽ(z)) - μ(v)|, relative to max(1, ‖exp(-zR̃)‖ ‖exp(-zR)‖), the
/// scale of the rounding error in the two transports. The dual twist uses the exponents -β
/// of the matched primal block.
inline double twisted_pairing_residual(const MonodromyDecomposition& dec, const MonodromyDecomposition& dual_dec,
                                       const std::vector<LogPoint>& samples) {
  double res = 0.0;
  const Index r = dec.dim();
  for (const auto& bp : dec.blocks)
    for (const auto& bd : dual_dec.blocks) {
      if (!lambdas_match_dual(bp.lambdas, bd.lambdas)) continue;
      const Matrix& vb = bp.space.basis();
      const Matrix& mb = bd.space.basis();
      const Matrix base = mb.transpose() * vb;
      for (const auto& z : samples) {
        Matrix dual_gen = Matrix::Zero(r, r);
        for (std::size_t j = 0; j < z.size(); ++j)
          dual_gen += z[j] * (dual_dec.N[j] - bp.betas[j] * Matrix::Identity(r, r));
        const Matrix em = matrix_exp(-dual_gen);
        const Matrix ev = dec.exp_log(z, -1.0);
        const Matrix pairing = (em * mb).transpose() * (ev * vb);
        const double size = std::max(1.0, spectral_norm(em) * spectral_norm(ev));
        res = std::max(res, (pairing - base).cwiseAbs().maxCoeff() / size);
      }
    }
  return res;
}

}  // namespace nilorbit
