#pragma once

// Formula-driven variations of Hodge structure on a product of punctured
// disks, given by holomorphic adapted frames on the log cover:
//   Φ(z, w)  period map (flag in D), Φ(z + 2πi e_j, w) = T_j^{-1} Φ(z, w)
//   Ψ(t, w)  = exp(Σ z_j R_j) Φ(z, w), single valued, R_j = S_j + N_j
//   a(w)     = Ψ(0, w), the limit filtration
//   ϑ(z, w)  = exp(-Σ z_j R_j) a(w), the nilpotent orbit

#include <nilorbit/hodge.hpp>
#include <nilorbit/monodromy.hpp>
#include <nilorbit/parallel.hpp>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nilorbit {

using WPoint = std::vector<Complex>;
/// Holomorphic adapted frame: leading f^p columns span F^p.
using FrameMap = std::function<Matrix(const LogPoint&, const WPoint&)>;

class UnknownFamily : public Error {
 public:
  using Error::Error;
};

/// Where a family is declared valid: Re z_i <= x_max < 0, |w_k| <= rho.
struct DomainBox {
  double x_max = -1.0;
  double rho = 0.0;
};

struct OrbitData {
  std::function<Matrix(const WPoint&)> a_frame;
  std::vector<int> hodge_numbers;
  std::vector<Matrix> S, N;
  std::size_t nw = 0;

  std::size_t generators() const { return S.size(); }
  Index dim() const { return S.front().rows(); }
  Matrix R(std::size_t i) const { return S[i] + N[i]; }
  FlagPoint a(const WPoint& w) const { return FlagPoint::from_frame(a_frame(w), hodge_numbers); }

  Matrix frame(const LogPoint& z, const WPoint& w) const {
    if (z.size() != generators()) throw ContractViolation("orbit: wrong number of log coordinates");
    Matrix g = Matrix::Zero(dim(), dim());
    for (std::size_t i = 0; i < z.size(); ++i) g += z[i] * R(i);
    return matrix_exp(-g) * a_frame(w);
  }
};

inline WPoint zero_w(std::size_t nw) { return WPoint(nw, Complex(0.0, 0.0)); }

/// Sample parameter points in the polydisk of radius rho (origin first).
inline std::vector<WPoint> w_samples(std::size_t nw, double rho) {
  std::vector<WPoint> out{zero_w(nw)};
  if (nw == 0 || rho <= 0.0) return out;
  for (double ang : {0.4, 2.5, -1.9}) out.push_back(WPoint(nw, 0.6 * rho * std::exp(Complex(0.0, ang))));
  return out;
}

/// Orbit data with the commutation and horizontality contracts checked at
/// the sample parameters.
inline OrbitData make_orbit(std::function<Matrix(const WPoint&)> a_frame, std::vector<int> hodge_numbers,
                            std::vector<Matrix> S, std::vector<Matrix> N, std::size_t nw = 0, double rho = 0.0,
                            double tol = 1e-8) {
  if (S.empty() || S.size() != N.size()) throw ContractViolation("orbit: need matching S and N per generator");
  const Index r = S.front().rows();
  for (std::size_t i = 0; i < S.size(); ++i)
    if (S[i].rows() != r || S[i].cols() != r || N[i].rows() != r || N[i].cols() != r)
      throw ContractViolation("orbit: operator sizes differ");
  auto comm = [](const Matrix& x, const Matrix& y) { return (x * y - y * x).norm(); };
  for (std::size_t i = 0; i < S.size(); ++i)
    for (std::size_t j = 0; j < S.size(); ++j) {
      const double c = std::max({comm(S[i], S[j]), comm(S[i], N[j]), comm(N[i], N[j])});
      if (c > 1e-9 * std::max(1.0, S[i].norm() + N[i].norm()))
        throw ContractViolation("orbit: S and N do not commute", c);
    }
  OrbitData orb{std::move(a_frame), std::move(hodge_numbers), std::move(S), std::move(N), nw};
  for (const auto& w : w_samples(nw, rho)) {
    const FlagPoint a = orb.a(w);
    for (std::size_t i = 0; i < orb.generators(); ++i) {
      const auto rep = is_horizontal(orb.R(i), a, tol);
      if (!rep.horizontal) throw ContractViolation("orbit: S + N is not horizontal at the limit filtration", rep.residual);
    }
  }
  return orb;
}

inline FrameMap nilpotent_orbit(const OrbitData& orb) {
  return [orb](const LogPoint& z, const WPoint& w) { return orb.frame(z, w); };
}

struct VHSFamily {
  std::string name;
  PolarizedHodgeData phd;
  MonodromyTuple monodromy;
  std::size_t nw = 0;
  FrameMap frame;
  DomainBox box;
  FlagPoint reference;              // a point of D fixing the reference Hodge metric
  std::optional<OrbitData> orbit;   // the orbit the family was generated from, if any

  std::size_t generators() const { return monodromy.size(); }
  Index dim() const { return phd.rank(); }
  FlagPoint flag(const LogPoint& z, const WPoint& w) const {
    return FlagPoint::from_frame(frame(z, w), phd.hodge_numbers());
  }
  FlagPoint flag(const LogPoint& z) const { return flag(z, zero_w(nw)); }
};

inline LogPoint diagonal(std::size_t p, Complex z) { return LogPoint(p, z); }

/// Sample log points: for each generator j a 5 x 5 grid in (Re z_j, Im z_j),
/// other coordinates held at a fixed interior point.
inline std::vector<LogPoint> z_grid(std::size_t p, double x_max) {
  std::vector<LogPoint> out;
  const double xs[] = {x_max, x_max - 2.0, x_max - 5.0, x_max - 10.0, x_max - 20.0};
  const double ys[] = {-3.0, -1.5, 0.0, 1.5, 3.0};
  for (std::size_t j = 0; j < p; ++j)
    for (double x : xs)
      for (double y : ys) {
        LogPoint z(p, Complex(x_max - 1.0, 0.5));
        z[j] = Complex(x, y);
        out.push_back(z);
      }
  return out;
}

struct FamilyCheck {
  double equivariance = 0.0;     // max gap between Φ(z + 2πi e_j) and T_j^{-1} Φ(z)
  double min_margin = 0.0;       // smallest membership margin on the grid
  double q_preservation = 0.0;   // max |T^* Q T - Q| / |Q|
  bool member = true;
  LogPoint worst_z;
  WPoint worst_w;
};

inline FamilyCheck check_family(const VHSFamily& fam, unsigned threads = 1) {
  FamilyCheck rep;
  for (const auto& t : fam.monodromy.generators())
    rep.q_preservation =
        std::max(rep.q_preservation, (t.adjoint() * fam.phd.Q() * t - fam.phd.Q()).norm() / fam.phd.Q().norm());
  std::vector<std::pair<LogPoint, WPoint>> pts;
  for (const auto& z : z_grid(fam.generators(), fam.box.x_max))
    for (const auto& w : w_samples(fam.nw, fam.box.rho)) pts.emplace_back(z, w);
  std::vector<Matrix> tinv;
  for (const auto& t : fam.monodromy.generators()) tinv.push_back(t.inverse());
  struct Local {
    double eq = 0.0, margin = 0.0;
    bool member = true;
  };
  auto res = parallel_map(
      pts.size(),
      [&](std::size_t i) {
        const auto& [z, w] = pts[i];
        Local l;
        const FlagPoint f = fam.flag(z, w);
        const auto m = in_period_domain(f, fam.phd);
        l.margin = m.margin;
        l.member = m.member;
        for (std::size_t j = 0; j < fam.generators(); ++j) {
          const FlagPoint g = fam.flag(shifted(z, j), w);
          l.eq = std::max(l.eq, domain_distance(g, left_translate(tinv[j], f)));
        }
        return l;
      },
      threads);
  rep.min_margin = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < res.size(); ++i) {
    rep.equivariance = std::max(rep.equivariance, res[i].eq);
    if (res[i].margin < rep.min_margin) {
      rep.min_margin = res[i].margin;
      rep.worst_z = pts[i].first;
      rep.worst_w = pts[i].second;
    }
    rep.member = rep.member && res[i].member;
  }
  return rep;
}

inline std::string describe_point(const LogPoint& z, const WPoint& w) {
  std::ostringstream os;
  os << "z=(";
  for (std::size_t i = 0; i < z.size(); ++i) os << (i ? ", " : "") << z[i].real() << (z[i].imag() < 0 ? "" : "+") << z[i].imag() << "i";
  os << ")";
  if (!w.empty()) {
    os << " w=(";
    for (std::size_t i = 0; i < w.size(); ++i) os << (i ? ", " : "") << w[i].real() << (w[i].imag() < 0 ? "" : "+") << w[i].imag() << "i";
    os << ")";
  }
  return os.str();
}

/// Throws unless the family is equivariant, preserves Q and lands in D on
/// the sample grid.
inline void validate_family(const VHSFamily& fam, double eq_tol = 1e-8) {
  if (!(fam.box.x_max < 0.0)) throw ContractViolation("family: x_max must be negative");
  check_compatible(fam.reference, fam.phd);
  if (!in_period_domain(fam.reference, fam.phd).member) throw ContractViolation("family: reference point is not in D");
  const auto rep = check_family(fam);
  if (rep.q_preservation > 1e-9) throw ContractViolation("family: monodromy does not preserve Q", rep.q_preservation);
  if (!rep.member)
    throw ContractViolation("family " + fam.name + " leaves the period domain at " +
                                describe_point(rep.worst_z, rep.worst_w),
                            rep.min_margin);
  if (rep.equivariance > eq_tol) throw ContractViolation("family: period map is not equivariant", rep.equivariance);
}

/// Single-valued holomorphic perturbation of the limit frame, as a function
/// of t = e^z and w; must vanish at t = 0.
using Perturbation = std::function<Matrix(const std::vector<Complex>&, const WPoint&)>;

inline std::vector<Complex> exp_coords(const LogPoint& z) {
  std::vector<Complex> t;
  for (const auto& x : z) t.push_back(std::exp(x));
  return t;
}

/// Φ(z, w) = exp(-Σ z_i R_i)(a(w) + perturbation(e^z, w)), validated on
/// the box.
inline VHSFamily make_orbit_family(const OrbitData& orb, const PolarizedHodgeData& phd, DomainBox box,
                                   const FlagPoint& reference, const std::string& name = "orbit",
                                   Perturbation perturbation = nullptr) {
  std::vector<Matrix> ts;
  for (std::size_t i = 0; i < orb.generators(); ++i) ts.push_back(matrix_exp(kTwoPiI * orb.R(i)));
  FrameMap frame;
  if (perturbation) {
    frame = [orb, perturbation](const LogPoint& z, const WPoint& w) {
      const Matrix base = orb.a_frame(w) + perturbation(exp_coords(z), w);
      Matrix g = Matrix::Zero(orb.dim(), orb.dim());
      for (std::size_t i = 0; i < z.size(); ++i) g += z[i] * orb.R(i);
      return Matrix(matrix_exp(-g) * base);
    };
  } else {
    frame = nilpotent_orbit(orb);
  }
  VHSFamily fam{name, phd, MonodromyTuple(ts), orb.nw, frame, box, reference, orb};
  validate_family(fam);
  return fam;
}

// ---------------------------------------------------------------------------
// Untwisting and limits

class UntwistedMap {
 public:
  UntwistedMap(std::shared_ptr<const VHSFamily> fam, std::shared_ptr<const MonodromyDecomposition> dec)
      : fam_(std::move(fam)), dec_(std::move(dec)) {
    if (dec_->dim() != fam_->dim() || dec_->generators() != fam_->generators())
      throw ContractViolation("untwist: decomposition does not match the family");
    for (std::size_t j = 0; j < fam_->generators(); ++j)
      if ((dec_->Ts[j] - fam_->monodromy[j]).norm() > 1e-12 * std::max(1.0, dec_->Ts[j].norm()))
        throw ContractViolation("untwist: decomposition is of a different monodromy");
    const LogPoint z = diagonal(fam_->generators(), Complex(fam_->box.x_max - 1.0, 0.7));
    const double res = single_valuedness_residual(z, zero_w(fam_->nw));
    if (res > 1e-8) throw ContractViolation("untwist: family is not equivariant", res);
  }

  const VHSFamily& family() const { return *fam_; }
  const MonodromyDecomposition& decomposition() const { return *dec_; }

  Matrix frame(const LogPoint& z, const WPoint& w) const { return dec_->exp_log(z, 1.0) * fam_->frame(z, w); }
  FlagPoint at_z(const LogPoint& z, const WPoint& w) const {
    return FlagPoint::from_frame(frame(z, w), fam_->phd.hodge_numbers());
  }
  /// Ψ at t (all t_j != 0), via the principal logarithm.
  FlagPoint at_t(const std::vector<Complex>& t, const WPoint& w) const {
    LogPoint z;
    for (const auto& x : t) z.push_back(std::log(x));
    return at_z(z, w);
  }

  double single_valuedness_residual(const LogPoint& z, const WPoint& w) const {
    const FlagPoint f = at_z(z, w);
    double res = 0.0;
    for (std::size_t j = 0; j < fam_->generators(); ++j) res = std::max(res, domain_distance(at_z(shifted(z, j), w), f));
    return res;
  }

 private:
  std::shared_ptr<const VHSFamily> fam_;
  std::shared_ptr<const MonodromyDecomposition> dec_;
};

inline UntwistedMap untwisted_map(const VHSFamily& fam, const MonodromyDecomposition& dec) {
  return UntwistedMap(std::make_shared<const VHSFamily>(fam), std::make_shared<const MonodromyDecomposition>(dec));
}

struct LimitOptions {
  int k_min = 4;
  int k_max = 22;
  int levels = 5;          // Richardson columns
  double tol = 1e-7;       // successive extrapolants must agree to this gap
};

struct LimitReport {
  FlagPoint a;
  double successive_gap = 0.0;
  double order = 0.0;              // fitted exponent of gap(h) ~ h^order
  bool exact = false;              // sequence constant to roundoff (order undefined)
  bool rank_stable = false;
  double rank_defect = 0.0;        // distance of the extrapolated projector spectra from {0, 1}
  std::vector<double> radii, gaps; // |t| and gap to the limit
};

/// Limit of a flag-valued function along h -> 0 with h = 2^{-k}, by
/// Richardson extrapolation of the step projectors.
inline LimitReport limit_filtration(const std::function<FlagPoint(double)>& along, const std::vector<int>& hodge_numbers,
                                    const LimitOptions& opt = {}) {
  if (opt.k_max - opt.k_min < opt.levels + 1) throw ContractViolation("limit: not enough radii for the Richardson table");
  std::vector<double> hs;
  std::vector<FlagPoint> flags;
  for (int k = opt.k_min; k <= opt.k_max; ++k) {
    hs.push_back(std::ldexp(1.0, -k));
    flags.push_back(along(hs.back()));
  }
  const Index r = flags.front().dim();
  const int m = static_cast<int>(hodge_numbers.size()) - 1;
  const std::size_t n = hs.size();

  // Per step: last and second-to-last extrapolants in the deepest column.
  std::vector<Matrix> best(static_cast<std::size_t>(m + 2)), prev(static_cast<std::size_t>(m + 2));
  for (int p = 1; p <= m; ++p) {
    const Index fp = flags.front().f(p);
    if (fp == 0 || fp == r) continue;
    std::vector<std::vector<Matrix>> table(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Matrix b = flags[i].step_basis(p);
      table[i].push_back(b * b.adjoint());
      for (int j = 1; j <= opt.levels && static_cast<std::size_t>(j) <= i; ++j) {
        const double f = std::ldexp(1.0, j);
        table[i].push_back((f * table[i][static_cast<std::size_t>(j - 1)] - table[i - 1][static_cast<std::size_t>(j - 1)]) /
                           (f - 1.0));
      }
    }
    best[static_cast<std::size_t>(p)] = table[n - 1][static_cast<std::size_t>(opt.levels)];
    prev[static_cast<std::size_t>(p)] = table[n - 2][static_cast<std::size_t>(opt.levels)];
  }

  auto flag_from_projectors = [&](const std::vector<Matrix>& proj, double& defect, bool& stable) {
    // Rank test on each extrapolated projector; the flag itself is grown
    // step by step from the leading eigenvectors of the projector
    // compressed to the complement of the previous step, so it is nested.
    std::vector<Matrix> steps;
    Matrix cur(r, 0);
    stable = true;
    for (int p = m; p >= 0; --p) {
      const Index fp = flags.front().f(p);
      if (fp == r) {
        steps.push_back(Matrix::Identity(r, r));
        cur = Matrix::Identity(r, r);
        continue;
      }
      if (fp > cur.cols()) {
        const Matrix& pm = proj[static_cast<std::size_t>(p)];
        const Matrix herm = 0.5 * (pm + pm.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();  // ascending
        for (Index i = 0; i < r; ++i) {
          const bool top = i >= r - fp;
          defect = std::max(defect, top ? std::abs(1.0 - ev(i)) : std::abs(ev(i)));
          if (top != (ev(i) > 0.5)) stable = false;
        }
        const Matrix comp = Matrix::Identity(r, r) - cur * cur.adjoint();
        Eigen::SelfAdjointEigenSolver<Matrix> ec(comp * herm * comp);
        Matrix next(r, fp);
        next << cur, ec.eigenvectors().rightCols(fp - cur.cols());
        cur = next;
      }
      steps.push_back(cur);
    }
    return steps;
  };

  LimitReport rep{flags.back(), 0.0, 0.0, false, false, 0.0, {}, {}};
  double defect = 0.0, defect_prev = 0.0;
  bool stable = true, stable_prev = true;
  const auto steps = flag_from_projectors(best, defect, stable);
  const auto steps_prev = flag_from_projectors(prev, defect_prev, stable_prev);
  if (!stable || !stable_prev)
    throw ConvergenceError("limit: extrapolated projectors changed rank", defect);
  FlagPoint a = FlagPoint::from_steps(steps, hodge_numbers);
  FlagPoint a_prev = FlagPoint::from_steps(steps_prev, hodge_numbers);
  rep.a = a;
  rep.rank_defect = defect;
  rep.rank_stable = defect < 1e-6;
  rep.successive_gap = domain_distance(a, a_prev);
  if (rep.successive_gap > opt.tol)
    throw ConvergenceError("limit: extrapolants do not settle (not a Cauchy sequence)", rep.successive_gap);

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = domain_distance(flags[i], a);
    rep.radii.push_back(hs[i]);
    rep.gaps.push_back(g);
    if (g > 1e-11) {
      lx.push_back(std::log(hs[i]));
      ly.push_back(std::log(g));
    }
  }
  if (lx.size() < 3) {
    rep.exact = true;
  } else {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    rep.order = sxy / sxx;
  }
  return rep;
}

/// Limit of Ψ(t, w) along t_j = h e^{i θ_j}.
inline LimitReport limit_filtration(const UntwistedMap& psi, const WPoint& w, const std::vector<double>& angles,
                                    const LimitOptions& opt = {}) {
  if (angles.size() != psi.family().generators()) throw ContractViolation("limit: need one ray angle per generator");
  auto along = [&](double h) {
    std::vector<Complex> t;
    for (double th : angles) t.push_back(h * std::exp(Complex(0.0, th)));
    return psi.at_t(t, w);
  };
  return limit_filtration(along, psi.family().phd.hodge_numbers(), opt);
}

/// Nilpotent orbit of a family: the generating orbit when known, otherwise
/// a(w) from the limit of Ψ along the positive real ray.
inline OrbitData orbit_of(const VHSFamily& fam, const MonodromyDecomposition& dec) {
  if (fam.orbit) {
    OrbitData o = *fam.orbit;
    o.S = dec.S;
    o.N = dec.N;
    return o;
  }
  auto psi = std::make_shared<UntwistedMap>(untwisted_map(fam, dec));
  const std::vector<double> angles(fam.generators(), 0.0);
  auto a_frame = [psi, angles](const WPoint& w) { return limit_filtration(*psi, w, angles).a.frame(); };
  return make_orbit(a_frame, fam.phd.hodge_numbers(), dec.S, dec.N, fam.nw, fam.box.rho);
}

// ---------------------------------------------------------------------------
// Norms

namespace detail {

inline Matrix frame_derivative(const FrameMap& frame, const LogPoint& z, const WPoint& w, std::size_t dir,
                               std::size_t p) {
  // central difference along a real step; the frame is holomorphic
  LogPoint zp = z, zm = z;
  WPoint wp = w, wm = w;
  double h;
  if (dir < p) {
    h = 1e-5 * std::max(1.0, std::abs(z[dir]));
    zp[dir] += h;
    zm[dir] -= h;
  } else {
    const std::size_t k = dir - p;
    h = 1e-5 * std::max(1.0, std::abs(w[k]));
    wp[k] += h;
    wm[k] -= h;
  }
  return (frame(zp, wp) - frame(zm, wm)) / (2.0 * h);
}

}  // namespace detail

/// Tangent A with dE = A E for the frame E at (z, w), one per direction
/// (z_1..z_p, then w_1..w_q).
inline std::vector<Matrix> frame_tangents(const FrameMap& frame, std::size_t p, const LogPoint& z, const WPoint& w) {
  const Matrix einv = frame(z, w).inverse();
  std::vector<Matrix> out;
  for (std::size_t d = 0; d < p + w.size(); ++d) out.push_back(detail::frame_derivative(frame, z, w, d, p) * einv);
  return out;
}

/// Per-direction Hodge operator norm of the graded piece V^{p,q} ->
/// V^{p-1,q+1} of the derivative.
inline std::vector<double> higgs_components(const VHSFamily& fam, const LogPoint& z, const WPoint& w) {
  const FlagPoint f = fam.flag(z, w);
  const auto dec = decomposition_from_filtration(f, fam.phd);  // throws outside D
  const Matrix wf = hodge_frame(dec, fam.phd);
  const auto wlu = wf.partialPivLu();
  const int m = fam.phd.weight();
  std::vector<Index> offset(static_cast<std::size_t>(m + 2), 0);
  for (int p = m; p >= 0; --p) offset[static_cast<std::size_t>(p)] = fam.phd.f(p + 1);
  std::vector<double> out;
  for (const auto& a : frame_tangents(fam.frame, fam.generators(), z, w)) {
    const Matrix at = wlu.solve(a * wf);
    Matrix theta = Matrix::Zero(at.rows(), at.cols());
    for (int p = 1; p <= m; ++p) {
      const Index hp = fam.phd.h(p), hq = fam.phd.h(p - 1);
      if (hp == 0 || hq == 0) continue;
      const Index cp = offset[static_cast<std::size_t>(p)], cq = offset[static_cast<std::size_t>(p - 1)];
      theta.block(cq, cp, hq, hp) = at.block(cq, cp, hq, hp);
    }
    out.push_back(spectral_norm(theta));
  }
  return out;
}

/// |θ| measured against the Poincaré-type metric: each log direction's
/// norm is multiplied by |2 Re z_i| (the inverse length of ∂/∂z_i), smooth
/// directions are taken as is; directions combine in root-sum-square.
inline double higgs_norm(const VHSFamily& fam, const LogPoint& z, const WPoint& w) {
  const auto comps = higgs_components(fam, z, w);
  double s = 0.0;
  for (std::size_t d = 0; d < comps.size(); ++d) {
    const double scale = d < fam.generators() ? 2.0 * std::abs(z[d].real()) : 1.0;
    s += std::pow(comps[d] * scale, 2);
  }
  return std::sqrt(s);
}

inline double higgs_norm(const VHSFamily& fam, const LogPoint& z) { return higgs_norm(fam, z, zero_w(fam.nw)); }

/// Hodge norm at Φ(z, w) of a vector given in flat coordinates.
inline double hodge_norm_at(const VHSFamily& fam, const Vector& flat, const LogPoint& z, const WPoint& w) {
  return hodge_inner_product(fam.flag(z, w), fam.phd).norm(flat);
}

/// Hodge norm of a flat multivalued section (evaluator in the twisted-frame
/// trivialization) at Φ(z, w).
inline double flat_section_norm(const VHSFamily& fam, const MonodromyDecomposition& dec, const FlatSection& v,
                                const LogPoint& z, const WPoint& w) {
  return hodge_norm_at(fam, dec.exp_log(z, -1.0) * v(z), z, w);
}

inline double flat_section_norm(const VHSFamily& fam, const MonodromyDecomposition& dec, const FlatSection& v,
                                const LogPoint& z) {
  return flat_section_norm(fam, dec, v, z, zero_w(fam.nw));
}

inline double twisted_entry_norm(const VHSFamily& fam, const TwistedFrameEntry& e, const LogPoint& z, const WPoint& w) {
  return hodge_norm_at(fam, e.flat_coordinates(z), z, w);
}

// ---------------------------------------------------------------------------
// Constructions

/// Q(u, v) = i(u_1 conj(v_2) - u_2 conj(v_1)) on C^2: signature (1, 1).
inline Matrix elliptic_q() {
  Matrix q(2, 2);
  q << 0, Complex(0, -1), Complex(0, 1), 0;
  return q;
}

inline Matrix elliptic_n() {
  Matrix n = Matrix::Zero(2, 2);
  n(1, 0) = -1.0 / kTwoPiI;
  return n;
}

/// Frame [e1 + τ e2 | e2].
inline Matrix line_frame(Complex tau) {
  Matrix f(2, 2);
  f << 1, 0, tau, 1;
  return f;
}

namespace detail {

// Column levels p for a frame grouped by p = m..0.
inline std::vector<int> column_levels(const std::vector<int>& h) {
  std::vector<int> lv;
  for (int p = static_cast<int>(h.size()) - 1; p >= 0; --p)
    for (int i = 0; i < h[static_cast<std::size_t>(p)]; ++i) lv.push_back(p);
  return lv;
}

// Column order interleaving two adapted frames level by level.
struct SumLayout {
  std::vector<int> h;
  std::vector<std::pair<int, Index>> cols;  // (which, column)
};

inline SumLayout sum_layout(const std::vector<int>& ha, const std::vector<int>& hb) {
  if (ha.size() != hb.size()) throw ContractViolation("direct sum: weights differ");
  SumLayout s;
  for (std::size_t p = 0; p < ha.size(); ++p) s.h.push_back(ha[p] + hb[p]);
  const auto la = column_levels(ha), lb = column_levels(hb);
  Index ia = 0, ib = 0;
  for (int p = static_cast<int>(ha.size()) - 1; p >= 0; --p) {
    while (ia < static_cast<Index>(la.size()) && la[static_cast<std::size_t>(ia)] == p) s.cols.push_back({0, ia++});
    while (ib < static_cast<Index>(lb.size()) && lb[static_cast<std::size_t>(ib)] == p) s.cols.push_back({1, ib++});
  }
  return s;
}

inline Matrix blockdiag(const Matrix& a, const Matrix& b) {
  Matrix m = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

inline Matrix sum_frame(const SumLayout& s, const Matrix& fa, const Matrix& fb) {
  const Index ra = fa.rows(), rb = fb.rows();
  Matrix out = Matrix::Zero(ra + rb, ra + rb);
  for (std::size_t c = 0; c < s.cols.size(); ++c) {
    const auto [which, col] = s.cols[c];
    if (which == 0) {
      out.block(0, static_cast<Index>(c), ra, 1) = fa.col(col);
    } else {
      out.block(ra, static_cast<Index>(c), rb, 1) = fb.col(col);
    }
  }
  return out;
}

// Symmetric square: orthonormal embedding of Sym^2 C^r into C^r ⊗ C^r.
struct SymLayout {
  Index r = 0;
  Matrix embed;                        // r^2 x r(r+1)/2
  std::vector<std::pair<Index, Index>> pairs;  // frame column pairs, grouped by level
  std::vector<int> h;
};

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

inline SymLayout sym_layout(const std::vector<int>& h) {
  SymLayout s;
  const auto lv = column_levels(h);
  s.r = static_cast<Index>(lv.size());
  const Index r = s.r;
  const Index d = r * (r + 1) / 2;
  s.embed = Matrix::Zero(r * r, d);
  Index c = 0;
  for (Index a = 0; a < r; ++a)
    for (Index b = a; b < r; ++b, ++c) {
      if (a == b) {
        s.embed(a * r + a, c) = 1.0;
      } else {
        s.embed(a * r + b, c) = std::sqrt(0.5);
        s.embed(b * r + a, c) = std::sqrt(0.5);
      }
    }
  const int m = static_cast<int>(h.size()) - 1;
  s.h.assign(static_cast<std::size_t>(2 * m + 1), 0);
  for (int level = 2 * m; level >= 0; --level)
    for (Index a = 0; a < r; ++a)
      for (Index b = a; b < r; ++b)
        if (lv[static_cast<std::size_t>(a)] + lv[static_cast<std::size_t>(b)] == level) {
          s.pairs.push_back({a, b});
          ++s.h[static_cast<std::size_t>(level)];
        }
  return s;
}

inline Matrix sym_operator(const SymLayout& s, const Matrix& a) {
  return s.embed.transpose() * kron(a, a) * s.embed;
}

inline Matrix sym_derivation(const SymLayout& s, const Matrix& x) {
  const Matrix id = Matrix::Identity(s.r, s.r);
  return s.embed.transpose() * (kron(x, id) + kron(id, x)) * s.embed;
}

inline Matrix sym_frame(const SymLayout& s, const Matrix& f) {
  Matrix out(s.embed.cols(), static_cast<Index>(s.pairs.size()));
  for (std::size_t c = 0; c < s.pairs.size(); ++c) {
    const auto [a, b] = s.pairs[c];
    const Matrix t = 0.5 * (kron(f.col(a), f.col(b)) + kron(f.col(b), f.col(a)));
    out.col(static_cast<Index>(c)) = s.embed.transpose() * t;
  }
  return out;
}

}  // namespace detail

/// Reference point o = span(e1 + i e2) of the upper-half-plane model; its
/// Hodge metric is the standard one.
inline FlagPoint elliptic_reference() { return FlagPoint::from_frame(line_frame(Complex(0, 1)), {1, 1}); }

inline OrbitData elliptic_orbit() {
  return make_orbit([](const WPoint&) { return line_frame(0.0); }, {1, 1}, {Matrix::Zero(2, 2)}, {elliptic_n()});
}

/// Weight 1, rank 2, unipotent monodromy T = [[1,0],[-1,1]];
/// Φ(z) = span(e1 + (z/2πi + e^z) e2).
inline VHSFamily elliptic_family() {
  PolarizedHodgeData phd(1, {1, 1}, elliptic_q());
  Perturbation pert = [](const std::vector<Complex>& t, const WPoint&) {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 0) = t[0];
    return m;
  };
  return make_orbit_family(elliptic_orbit(), phd, {-2.0, 0.0}, elliptic_reference(), "elliptic", pert);
}

/// The elliptic orbit with a(w) = span(e1 + w e2) and the same e^z
/// perturbation.
inline VHSFamily elliptic_w_family(double rho = 0.5) {
  PolarizedHodgeData phd(1, {1, 1}, elliptic_q());
  auto orb = make_orbit([](const WPoint& w) { return line_frame(w[0]); }, {1, 1}, {Matrix::Zero(2, 2)},
                        {elliptic_n()}, 1, rho);
  Perturbation pert = [](const std::vector<Complex>& t, const WPoint&) {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 0) = t[0];
    return m;
  };
  return make_orbit_family(orb, phd, {-5.0, rho}, elliptic_reference(), "elliptic-w", pert);
}

inline VHSFamily constant_family() {
  PolarizedHodgeData phd(1, {1, 1}, elliptic_q());
  const Matrix o = line_frame(Complex(0, 1));
  auto orb = make_orbit([o](const WPoint&) { return o; }, {1, 1}, {Matrix::Zero(2, 2)}, {Matrix::Zero(2, 2)});
  return make_orbit_family(orb, phd, {-1.0, 0.0}, elliptic_reference(), "constant");
}

/// Rank one, monodromy e^{2πiβ}, Hodge type (level, weight - level).
inline VHSFamily twist_family(double beta = -0.5, int weight = 0, int level = 0) {
  if (level < 0 || level > weight) throw ContractViolation("twist: level must lie in [0, weight]");
  std::vector<int> h(static_cast<std::size_t>(weight + 1), 0);
  h[static_cast<std::size_t>(level)] = 1;
  Matrix q(1, 1);
  q(0, 0) = ((weight - level) % 2 == 0) ? 1.0 : -1.0;
  PolarizedHodgeData phd(weight, h, q);
  Matrix s(1, 1);
  s(0, 0) = beta;
  auto orb = make_orbit([](const WPoint&) { return Matrix(Matrix::Identity(1, 1)); }, h, {s}, {Matrix::Zero(1, 1)});
  return make_orbit_family(orb, phd, {-1.0, 0.0}, FlagPoint::from_frame(Matrix::Identity(1, 1), h), "twist");
}

/// Direct sum of two families of the same weight, either driven by the same
/// log coordinates (shared) or by separate ones.
inline VHSFamily direct_sum(const VHSFamily& fa, const VHSFamily& fb, bool shared, const std::string& name) {
  const auto lay = detail::sum_layout(fa.phd.hodge_numbers(), fb.phd.hodge_numbers());
  if (shared && fa.generators() != fb.generators()) throw ContractViolation("direct sum: generator counts differ");
  const std::size_t pa = fa.generators(), pb = fb.generators();
  const std::size_t p = shared ? pa : pa + pb;
  const Index ra = fa.dim(), rb = fb.dim();
  PolarizedHodgeData phd(fa.phd.weight(), lay.h, detail::blockdiag(fa.phd.Q(), fb.phd.Q()));

  std::vector<Matrix> ts;
  if (shared) {
    for (std::size_t j = 0; j < p; ++j) ts.push_back(detail::blockdiag(fa.monodromy[j], fb.monodromy[j]));
  } else {
    for (std::size_t j = 0; j < pa; ++j) ts.push_back(detail::blockdiag(fa.monodromy[j], Matrix::Identity(rb, rb)));
    for (std::size_t j = 0; j < pb; ++j) ts.push_back(detail::blockdiag(Matrix::Identity(ra, ra), fb.monodromy[j]));
  }
  const std::size_t nwa = fa.nw, nwb = fb.nw;
  auto split = [=](const LogPoint& z, const WPoint& w) {
    LogPoint za(z.begin(), z.begin() + static_cast<long>(pa));
    LogPoint zb = shared ? za : LogPoint(z.begin() + static_cast<long>(pa), z.end());
    WPoint wa(w.begin(), w.begin() + static_cast<long>(nwa));
    WPoint wb(w.begin() + static_cast<long>(nwa), w.begin() + static_cast<long>(nwa + nwb));
    return std::make_tuple(za, zb, wa, wb);
  };
  FrameMap fra = fa.frame, frb = fb.frame;
  FrameMap frame = [=](const LogPoint& z, const WPoint& w) {
    const auto [za, zb, wa, wb] = split(z, w);
    return detail::sum_frame(lay, fra(za, wa), frb(zb, wb));
  };
  DomainBox box{std::min(fa.box.x_max, fb.box.x_max),
                (nwa && nwb) ? std::min(fa.box.rho, fb.box.rho) : std::max(fa.box.rho, fb.box.rho)};
  FlagPoint ref = FlagPoint::from_frame(detail::sum_frame(lay, fa.reference.frame(), fb.reference.frame()), lay.h);

  std::optional<OrbitData> orbit;
  if (fa.orbit && fb.orbit) {
    const OrbitData oa = *fa.orbit, ob = *fb.orbit;
    std::vector<Matrix> s, n;
    const Matrix za = Matrix::Zero(ra, ra), zb = Matrix::Zero(rb, rb);
    if (shared) {
      for (std::size_t j = 0; j < p; ++j) {
        s.push_back(detail::blockdiag(oa.S[j], ob.S[j]));
        n.push_back(detail::blockdiag(oa.N[j], ob.N[j]));
      }
    } else {
      for (std::size_t j = 0; j < pa; ++j) {
        s.push_back(detail::blockdiag(oa.S[j], zb));
        n.push_back(detail::blockdiag(oa.N[j], zb));
      }
      for (std::size_t j = 0; j < pb; ++j) {
        s.push_back(detail::blockdiag(za, ob.S[j]));
        n.push_back(detail::blockdiag(za, ob.N[j]));
      }
    }
    auto a_frame = [=](const WPoint& w) {
      WPoint wa(w.begin(), w.begin() + static_cast<long>(nwa));
      WPoint wb(w.begin() + static_cast<long>(nwa), w.begin() + static_cast<long>(nwa + nwb));
      return detail::sum_frame(lay, oa.a_frame(wa), ob.a_frame(wb));
    };
    orbit = make_orbit(a_frame, lay.h, s, n, nwa + nwb, box.rho);
  }
  VHSFamily fam{name, phd, MonodromyTuple(ts), nwa + nwb, frame, box, ref, orbit};
  validate_family(fam);
  return fam;
}

/// Symmetric square of a family (weight doubles).
inline VHSFamily symmetric_square(const VHSFamily& f, const std::string& name) {
  const auto lay = detail::sym_layout(f.phd.hodge_numbers());
  PolarizedHodgeData phd(2 * f.phd.weight(), lay.h, detail::sym_operator(lay, f.phd.Q()));
  std::vector<Matrix> ts;
  for (const auto& t : f.monodromy.generators()) ts.push_back(detail::sym_operator(lay, t));
  FrameMap inner = f.frame;
  FrameMap frame = [=](const LogPoint& z, const WPoint& w) { return detail::sym_frame(lay, inner(z, w)); };
  FlagPoint ref = FlagPoint::from_frame(detail::sym_frame(lay, f.reference.frame()), lay.h);
  std::optional<OrbitData> orbit;
  if (f.orbit) {
    const OrbitData o = *f.orbit;
    std::vector<Matrix> s, n;
    for (std::size_t j = 0; j < o.generators(); ++j) {
      s.push_back(detail::sym_derivation(lay, o.S[j]));
      n.push_back(detail::sym_derivation(lay, o.N[j]));
    }
    orbit = make_orbit([=](const WPoint& w) { return detail::sym_frame(lay, o.a_frame(w)); }, lay.h, s, n, o.nw,
                       f.box.rho);
  }
  VHSFamily fam{name, phd, MonodromyTuple(ts), f.nw, frame, f.box, ref, orbit};
  validate_family(fam);
  return fam;
}

// ---------------------------------------------------------------------------
// Registry

inline std::vector<std::string> registry_names() {
  return {"constant", "elliptic", "twist", "elliptic-sym2", "elliptic+twist", "elliptic^2", "elliptic-w"};
}

inline double param_or(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

inline VHSFamily registry_family(const std::string& name, const std::map<std::string, double>& params = {}) {
  if (name == "constant") return constant_family();
  if (name == "elliptic") return elliptic_family();
  if (name == "twist") {
    return twist_family(param_or(params, "beta", -0.5), static_cast<int>(param_or(params, "weight", 0)),
                        static_cast<int>(param_or(params, "level", 0)));
  }
  if (name == "elliptic-sym2") return symmetric_square(elliptic_family(), name);
  if (name == "elliptic+twist")
    return direct_sum(elliptic_family(), twist_family(param_or(params, "beta", -1.0 / 3.0), 1, 1), true, name);
  if (name == "elliptic^2") return direct_sum(elliptic_family(), elliptic_family(), false, name);
  if (name == "elliptic-w") return elliptic_w_family(param_or(params, "rho", 0.5));
  throw UnknownFamily("unknown family: " + name);
}

}  // namespace nilorbit
