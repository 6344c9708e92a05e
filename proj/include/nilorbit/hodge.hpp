#pragma once

// Polarized Hodge structures, flags in the compact dual, membership in the
// period domain, Hodge norms and flag distances.
//
// Conventions: Q(u, v) = v^* Q u with Q hermitian. Hodge numbers are indexed
// by p = 0..m with q = m - p, and (-1)^q Q is positive on V^{p,q}.

#include <nilorbit/numlin.hpp>

#include <limits>
#include <string>
#include <vector>

namespace nilorbit {

class PolarizedHodgeData {
 public:
  PolarizedHodgeData(int weight, std::vector<int> hodge_numbers, Matrix q)
      : weight_(weight), h_(std::move(hodge_numbers)), q_(std::move(q)) {
    if (weight_ < 0) throw ContractViolation("hodge data: weight must be nonnegative");
    if (static_cast<int>(h_.size()) != weight_ + 1)
      throw ContractViolation("hodge data: need one Hodge number per p = 0..weight");
    int r = 0;
    for (int h : h_) {
      if (h < 0) throw ContractViolation("hodge data: negative Hodge number");
      r += h;
    }
    if (r < 1) throw ContractViolation("hodge data: zero rank");
    if (q_.rows() != r || q_.cols() != r) throw ContractViolation("hodge data: Q has wrong size");
    if (!all_finite(q_)) throw ContractViolation("hodge data: Q has non-finite entries");
    const double herm = (q_ - q_.adjoint()).norm();
    if (herm > 1e-12 * std::max(1.0, q_.norm())) throw ContractViolation("hodge data: Q is not hermitian", herm);
    q_ = 0.5 * (q_ + q_.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(q_, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    int pos = 0, neg = 0;
    for (Index i = 0; i < ev.size(); ++i) {
      if (std::abs(ev(i)) <= tol) throw ContractViolation("hodge data: Q is degenerate", ev(i));
      (ev(i) > 0 ? pos : neg)++;
    }
    int want_pos = 0, want_neg = 0;
    for (int p = 0; p <= weight_; ++p) ((weight_ - p) % 2 == 0 ? want_pos : want_neg) += h_[static_cast<std::size_t>(p)];
    if (pos != want_pos || neg != want_neg)
      throw ContractViolation("hodge data: signature of Q (" + std::to_string(pos) + "," + std::to_string(neg) +
                              ") does not match Hodge numbers (" + std::to_string(want_pos) + "," +
                              std::to_string(want_neg) + ")");
  }

  int weight() const { return weight_; }
  const std::vector<int>& hodge_numbers() const { return h_; }
  int h(int p) const { return (p < 0 || p > weight_) ? 0 : h_[static_cast<std::size_t>(p)]; }
  const Matrix& Q() const { return q_; }
  Index rank() const { return q_.rows(); }

  /// dim F^p.
  Index f(int p) const {
    Index s = 0;
    for (int i = std::max(p, 0); i <= weight_; ++i) s += h_[static_cast<std::size_t>(i)];
    return s;
  }
  /// Sign making the form definite on V^{p, m-p}.
  double sign(int p) const { return ((weight_ - p) % 2 == 0) ? 1.0 : -1.0; }

 private:
  int weight_;
  std::vector<int> h_;
  Matrix q_;
};

/// Decreasing filtration F^m ⊂ ... ⊂ F^0 = V, stored as a unitary frame
/// whose leading dim F^p columns span F^p.
class FlagPoint {
 public:
  /// Flag spanned by leading column blocks of a full-rank frame; the
  /// block sizes are f^p = h^m + ... + h^p.
  static FlagPoint from_frame(const Matrix& frame, std::vector<int> hodge_numbers) {
    check_numbers(hodge_numbers, frame.rows());
    if (frame.cols() != frame.rows()) throw ContractViolation("flag: frame must be square");
    if (!all_finite(frame)) throw ContractViolation("flag: non-finite frame");
    // column scaling does not change the flag; normalize so that the rank
    // test does not depend on it
    Matrix unit = frame;
    for (Index j = 0; j < unit.cols(); ++j) {
      const double n = unit.col(j).norm();
      if (n == 0.0) throw ContractViolation("flag: frame has a zero column");
      unit.col(j) /= n;
    }
    Eigen::JacobiSVD<Matrix> svd(unit);
    const auto& s = svd.singularValues();
    if (!(s(s.size() - 1) > 1e-12 * s(0))) throw ContractViolation("flag: frame is rank deficient", s(s.size() - 1));
    return FlagPoint(orthonormalize_adapted(unit, InnerProduct::standard(frame.rows())), std::move(hodge_numbers));
  }

  /// Flag from explicit step bases, listed from F^m (smallest) to F^0.
  /// Steps for zero Hodge numbers may be repeated or omitted only if the
  /// list has exactly one entry per p.
  static FlagPoint from_steps(const std::vector<Matrix>& steps, std::vector<int> hodge_numbers) {
    const int m = static_cast<int>(hodge_numbers.size()) - 1;
    if (static_cast<int>(steps.size()) != m + 1) throw ContractViolation("flag: need one step per p");
    const Index r = steps.back().rows();
    check_numbers(hodge_numbers, r);
    Matrix frame(r, 0);
    Index expected = 0;
    for (int p = m; p >= 0; --p) {
      const Matrix& b = steps[static_cast<std::size_t>(m - p)];
      if (b.rows() != r) throw ContractViolation("flag: step has wrong ambient size");
      expected += hodge_numbers[static_cast<std::size_t>(p)];
      auto sub = orthonormalize(b);
      if (sub.dim() != expected)
        throw ContractViolation("flag: step F^" + std::to_string(p) + " has dimension " + std::to_string(sub.dim()) +
                                ", expected " + std::to_string(expected));
      // nesting: previous frame must lie inside this step
      if (frame.cols() > 0) {
        const Matrix out = frame - sub.basis() * (sub.basis().adjoint() * frame);
        if (out.norm() > 1e-8) throw ContractViolation("flag: steps are not nested", out.norm());
      }
      const Matrix extra = sub.basis() - frame * (frame.adjoint() * sub.basis());
      auto add = orthonormalize(extra);
      Matrix next(r, frame.cols() + add.dim());
      next << frame, add.basis();
      frame = next;
    }
    return FlagPoint(orthonormalize_adapted(frame, InnerProduct::standard(r)), std::move(hodge_numbers));
  }

  int weight() const { return static_cast<int>(h_.size()) - 1; }
  const std::vector<int>& hodge_numbers() const { return h_; }
  Index dim() const { return frame_.rows(); }
  const Matrix& frame() const { return frame_; }

  Index f(int p) const {
    Index s = 0;
    for (int i = std::max(p, 0); i < static_cast<int>(h_.size()); ++i) s += h_[static_cast<std::size_t>(i)];
    return s;
  }

  /// Orthonormal basis of F^p (empty for p > m, everything for p <= 0).
  Matrix step_basis(int p) const { return frame_.leftCols(f(p)); }
  Subspace step(int p) const { return Subspace(step_basis(p)); }

 private:
  FlagPoint(Matrix frame, std::vector<int> h) : frame_(std::move(frame)), h_(std::move(h)) {}

  static void check_numbers(const std::vector<int>& h, Index r) {
    if (h.empty()) throw ContractViolation("flag: empty Hodge numbers");
    Index s = 0;
    for (int x : h) {
      if (x < 0) throw ContractViolation("flag: negative Hodge number");
      s += x;
    }
    if (s != r) throw ContractViolation("flag: Hodge numbers do not sum to the ambient dimension");
  }

  Matrix frame_;
  std::vector<int> h_;
};

inline void check_compatible(const FlagPoint& f, const PolarizedHodgeData& phd) {
  if (f.hodge_numbers() != phd.hodge_numbers() || f.dim() != phd.rank())
    throw ContractViolation("flag dimension vector does not match the Hodge data");
}

/// V = ⊕ V^{p, m-p}; pieces[p] is an orthonormal (standard) basis.
class HodgeDecomposition {
 public:
  HodgeDecomposition(std::vector<Matrix> pieces, const PolarizedHodgeData& phd) : pieces_(std::move(pieces)) {
    if (static_cast<int>(pieces_.size()) != phd.weight() + 1) throw ContractViolation("decomposition: need one piece per p");
    const Index r = phd.rank();
    Matrix all(r, 0);
    for (int p = 0; p <= phd.weight(); ++p) {
      Matrix& b = pieces_[static_cast<std::size_t>(p)];
      if (b.rows() != r || b.cols() != phd.h(p)) throw ContractViolation("decomposition: piece has wrong shape");
      if (b.cols() > 0) {
        auto sub = orthonormalize(b);
        if (sub.dim() != b.cols()) throw ContractViolation("decomposition: piece basis is rank deficient");
        b = sub.basis();
      }
      Matrix joined(r, all.cols() + b.cols());
      joined << all, b;
      all = joined;
    }
    Eigen::JacobiSVD<Matrix> svd(all);
    const double smin = svd.singularValues()(r - 1);
    if (!(smin > 1e-10)) throw ContractViolation("decomposition: pieces are not independent", smin);
    const double scale = std::max(1.0, phd.Q().norm());
    for (int p = 0; p <= phd.weight(); ++p) {
      const Matrix& bp = pieces_[static_cast<std::size_t>(p)];
      if (bp.cols() == 0) continue;
      for (int p2 = p + 1; p2 <= phd.weight(); ++p2) {
        const Matrix& bq = pieces_[static_cast<std::size_t>(p2)];
        if (bq.cols() == 0) continue;
        const double cross = (bq.adjoint() * phd.Q() * bp).norm();
        if (cross > 1e-8 * scale) throw ContractViolation("decomposition: pieces are not Q-orthogonal", cross);
      }
      const Matrix form = phd.sign(p) * (bp.adjoint() * phd.Q() * bp);
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (form + form.adjoint()), Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff();
      if (!(lo > 1e-10 * scale))
        throw ContractViolation("decomposition: polarization is not definite on V^{" + std::to_string(p) + "," +
                                    std::to_string(phd.weight() - p) + "}",
                                lo);
    }
  }

  const Matrix& piece(int p) const { return pieces_.at(static_cast<std::size_t>(p)); }
  int weight() const { return static_cast<int>(pieces_.size()) - 1; }

 private:
  std::vector<Matrix> pieces_;
};

/// |v|^2 = Σ (-1)^q Q(v^{p,q}, v^{p,q}) with v^{p,q} the Q-orthogonal
/// projections of v.
inline double hodge_norm_sq(const Vector& v, const HodgeDecomposition& dec, const PolarizedHodgeData& phd) {
  if (v.size() != phd.rank()) throw ContractViolation("hodge_norm_sq: vector has wrong length");
  double total = 0.0;
  for (int p = 0; p <= phd.weight(); ++p) {
    const Matrix& b = dec.piece(p);
    if (b.cols() == 0) continue;
    const Matrix g = b.adjoint() * phd.Q() * b;
    const Vector coeff = g.lu().solve(b.adjoint() * (phd.Q() * v));
    const Vector comp = b * coeff;
    total += phd.sign(p) * comp.dot(phd.Q() * comp).real();
  }
  return total;
}

inline FlagPoint filtration_from_decomposition(const HodgeDecomposition& dec, const PolarizedHodgeData& phd) {
  const Index r = phd.rank();
  Matrix frame(r, r);
  Index col = 0;
  for (int p = phd.weight(); p >= 0; --p) {
    const Matrix& b = dec.piece(p);
    frame.middleCols(col, b.cols()) = b;
    col += b.cols();
  }
  return FlagPoint::from_frame(frame, phd.hodge_numbers());
}

struct MembershipReport {
  bool member = false;
  double margin = 0.0;              // min over p of the compressed-form margin
  int failed_p = -1;                // first p (from the top) that fails
  std::vector<double> margins;      // per p, NaN-free; index p
  double split_coupling = 1.0;      // min singular value of the step pairings
};

namespace detail {

struct StepSplit {
  Matrix piece;            // orthonormal basis of F^p ∩ (F^{p+1})^⊥Q
  double margin = 0.0;     // smallest eigenvalue of (-1)^q Q on it
  double coupling = 1.0;   // smallest singular value of the F^{p+1} x F^p pairing
};

inline StepSplit split_step(const FlagPoint& f, const PolarizedHodgeData& phd, int p) {
  const Matrix bp = f.step_basis(p);
  const Matrix bn = f.step_basis(p + 1);
  const Index hp = phd.h(p);
  StepSplit out;
  Matrix k;
  if (bn.cols() == 0) {
    k = Matrix::Identity(bp.cols(), bp.cols());
  } else {
    const Matrix m = bn.adjoint() * phd.Q() * bp;
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    k = svd.matrixV().rightCols(hp);
    // If the pairing drops rank, the null space is larger than h^p and
    // contains a Q-isotropic vector of F^{p+1}; that is caught one level
    // up as a vanishing margin, so only the conditioning is recorded here.
    out.coupling = svd.singularValues().minCoeff();
  }
  out.piece = bp * k;
  const Matrix form = phd.sign(p) * (out.piece.adjoint() * phd.Q() * out.piece);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (form + form.adjoint()), Eigen::EigenvaluesOnly);
  out.margin = es.eigenvalues().minCoeff();
  return out;
}

}  // namespace detail

inline MembershipReport in_period_domain(const FlagPoint& f, const PolarizedHodgeData& phd,
                                         double margin_tol = 1e-10) {
  check_compatible(f, phd);
  MembershipReport rep;
  rep.member = true;
  rep.margin = std::numeric_limits<double>::max();
  rep.margins.assign(static_cast<std::size_t>(phd.weight() + 1), 0.0);
  for (int p = phd.weight(); p >= 0; --p) {
    if (phd.h(p) == 0) continue;
    const auto s = detail::split_step(f, phd, p);
    rep.margins[static_cast<std::size_t>(p)] = s.margin;
    rep.margin = std::min(rep.margin, s.margin);
    rep.split_coupling = std::min(rep.split_coupling, s.coupling);
    if (!(s.margin > margin_tol) && rep.member) {
      rep.member = false;
      rep.failed_p = p;
    }
  }
  return rep;
}

/// Membership margins measured in a given (not re-orthonormalized) adapted
/// frame: for each p above the lowest nonzero level, the smallest eigenvalue
/// of (-1)^q times the Schur complement of the F^{p+1} block in the Gram
/// matrix of Q on F^p. The lowest level is implied by the others and the
/// signature of Q, so it is not included; the result is positive iff the
/// flag lies in D. Scales with the frame, which is what makes margins along
/// an orbit exp(-zR) a comparable across z.
inline MembershipReport frame_margin(const Matrix& frame, const PolarizedHodgeData& phd, double margin_tol = 1e-10) {
  if (frame.rows() != phd.rank() || frame.cols() != phd.rank()) throw ContractViolation("frame_margin: wrong frame size");
  MembershipReport rep;
  rep.member = true;
  rep.margin = std::numeric_limits<double>::max();
  rep.margins.assign(static_cast<std::size_t>(phd.weight() + 1), 0.0);
  int lowest = 0;
  while (lowest <= phd.weight() && phd.h(lowest) == 0) ++lowest;
  for (int p = phd.weight(); p > lowest; --p) {
    if (phd.h(p) == 0) continue;
    const Index fp = phd.f(p), fn = phd.f(p + 1);
    const Matrix b = frame.leftCols(fp);
    const Matrix g = b.adjoint() * phd.Q() * b;
    Matrix c = g.bottomRightCorner(fp - fn, fp - fn);
    if (fn > 0) {
      const Matrix g11 = g.topLeftCorner(fn, fn);
      c -= g.bottomLeftCorner(fp - fn, fn) * g11.fullPivLu().solve(g.topRightCorner(fn, fp - fn));
    }
    c = phd.sign(p) * 0.5 * (c + c.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
    double m = es.eigenvalues().minCoeff();
    if (!std::isfinite(m)) m = 0.0;
    rep.margins[static_cast<std::size_t>(p)] = m;
    rep.margin = std::min(rep.margin, m);
    if (!(m > margin_tol) && rep.member) {
      rep.member = false;
      rep.failed_p = p;
    }
  }
  if (rep.margin == std::numeric_limits<double>::max()) {
    // a single nonzero level: the flag is trivial and positivity is the
    // signature of Q itself, independent of the frame
    const Matrix g = phd.sign(lowest) * phd.Q();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.adjoint()), Eigen::EigenvaluesOnly);
    rep.margin = es.eigenvalues().minCoeff();
    rep.margins[static_cast<std::size_t>(lowest)] = rep.margin;
    rep.member = rep.margin > margin_tol;
    if (!rep.member) rep.failed_p = lowest;
  }
  return rep;
}

inline HodgeDecomposition decomposition_from_filtration(const FlagPoint& f, const PolarizedHodgeData& phd) {
  const auto rep = in_period_domain(f, phd);
  if (!rep.member)
    throw ContractViolation("flag is outside the period domain (failed at p=" + std::to_string(rep.failed_p) + ")",
                            rep.margin);
  std::vector<Matrix> pieces(static_cast<std::size_t>(phd.weight() + 1));
  for (int p = 0; p <= phd.weight(); ++p) {
    if (phd.h(p) == 0) {
      pieces[static_cast<std::size_t>(p)] = Matrix(phd.rank(), 0);
      continue;
    }
    pieces[static_cast<std::size_t>(p)] = detail::split_step(f, phd, p).piece;
  }
  return HodgeDecomposition(std::move(pieces), phd);
}

/// Frame W, columns grouped p = m..0, orthonormal for (-1)^q Q on each
/// piece. The Hodge metric is W^{-*} W^{-1}.
inline Matrix hodge_frame(const HodgeDecomposition& dec, const PolarizedHodgeData& phd) {
  const Index r = phd.rank();
  Matrix w(r, r);
  Index col = 0;
  for (int p = phd.weight(); p >= 0; --p) {
    const Matrix& b = dec.piece(p);
    if (b.cols() == 0) continue;
    const Matrix g = phd.sign(p) * (b.adjoint() * phd.Q() * b);
    Eigen::LLT<Matrix> llt(0.5 * (g + g.adjoint()));
    if (llt.info() != Eigen::Success) throw ContractViolation("hodge_frame: piece form is not definite");
    const Matrix lower = llt.matrixL();
    // W_p = B L^{-*}
    const Matrix wp = lower.triangularView<Eigen::Lower>().solve(b.adjoint()).adjoint();
    w.middleCols(col, b.cols()) = wp;
    col += b.cols();
  }
  return w;
}

inline Matrix hodge_frame(const FlagPoint& f, const PolarizedHodgeData& phd) {
  return hodge_frame(decomposition_from_filtration(f, phd), phd);
}

inline InnerProduct hodge_inner_product(const HodgeDecomposition& dec, const PolarizedHodgeData& phd) {
  const Matrix winv = hodge_frame(dec, phd).inverse();
  return InnerProduct(winv.adjoint() * winv);
}

inline InnerProduct hodge_inner_product(const FlagPoint& f, const PolarizedHodgeData& phd) {
  return hodge_inner_product(decomposition_from_filtration(f, phd), phd);
}

struct HorizontalityReport {
  bool horizontal = false;
  double residual = 0.0;
};

/// A(F^p) ⊂ F^{p-1} for all p; residual is the largest component leaving
/// the next step, in the standard norm.
inline HorizontalityReport is_horizontal(const Matrix& a, const FlagPoint& f, double tol = 1e-8) {
  if (a.rows() != f.dim() || a.cols() != f.dim()) throw ContractViolation("is_horizontal: dimension mismatch");
  HorizontalityReport rep;
  const Index r = f.dim();
  for (int p = 1; p <= f.weight(); ++p) {
    const Matrix bp = f.step_basis(p);
    const Matrix bq = f.step_basis(p - 1);
    if (bp.cols() == 0 || bq.cols() == r) continue;
    const Matrix img = a * bp;
    const Matrix out = img - bq * (bq.adjoint() * img);
    rep.residual = std::max(rep.residual, spectral_norm(out));
  }
  rep.horizontal = rep.residual <= tol;
  return rep;
}

/// max over p of the gap between the steps, measured in `ip`.
inline double domain_distance(const FlagPoint& a, const FlagPoint& b, const InnerProduct& ip) {
  if (a.hodge_numbers() != b.hodge_numbers() || a.dim() != b.dim())
    throw ContractViolation("domain_distance: flags have different dimension vectors");
  double d = 0.0;
  for (int p = 1; p <= a.weight(); ++p) {
    const Index fp = a.f(p);
    if (fp == 0 || fp == a.dim()) continue;
    d = std::max(d, gap_distance(a.step(p), b.step(p), ip));
  }
  return d;
}

inline double domain_distance(const FlagPoint& a, const FlagPoint& b) {
  return domain_distance(a, b, InnerProduct::standard(a.dim()));
}

inline double domain_distance(const FlagPoint& a, const FlagPoint& b, const PolarizedHodgeData& phd,
                              const FlagPoint& reference) {
  return domain_distance(a, b, hodge_inner_product(reference, phd));
}

inline FlagPoint left_translate(const Matrix& g, const FlagPoint& f) {
  if (g.rows() != f.dim() || g.cols() != f.dim()) throw ContractViolation("left_translate: dimension mismatch");
  Eigen::JacobiSVD<Matrix> svd(g);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 1e-13 * s(0))) throw ContractViolation("left_translate: operator is singular", s(s.size() - 1));
  return FlagPoint::from_frame(g * f.frame(), f.hodge_numbers());
}

/// Q-unitary g with g·o = F: maps a Hodge frame at o to one at F.
inline Matrix unitary_alignment(const FlagPoint& target, const FlagPoint& reference, const PolarizedHodgeData& phd) {
  const Matrix wt = hodge_frame(target, phd);
  const Matrix wo = hodge_frame(reference, phd);
  return wt * wo.inverse();
}

}  // namespace nilorbit
