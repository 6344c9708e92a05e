#pragma once

// Quantitative checks on families and orbits: extension of the untwisted
// map, orbit horizontality and membership, distance decay between a family
// and its nilpotent orbit, Ad-norm growth, and parabolic weights of frame
// entries.

#include <nilorbit/vhs.hpp>

#include <string>
#include <vector>

namespace nilorbit {

struct Tolerances {
  double extension_gap = 1e-7;      // pairwise gap between ray limits
  double extension_order = 0.1;     // |order - 1| for a simple zero
  double horizontality = 1e-6;
  double single_valued = 1e-8;
  double pairing = 1e-9;
  double decay_delta = 0.05;
  double decay_beta = 0.3;
  double threshold_c = 0.1;
  double ad_factor = 10.0;
  double schmid_beta = 0.1;
  double weight_beta = 0.05;
  double log_order = 0.1;
  double higgs_factor = 2.0;
};

// ---------------------------------------------------------------------------
// Least squares

struct LinearFit {
  std::vector<double> coeffs;   // one per regressor
  std::vector<double> stderrs;
  double residual = 0.0;        // max |y - fit|
};

/// y ≈ X c with X given column by column (include a ones column for an
/// intercept).
inline LinearFit least_squares(const std::vector<std::vector<double>>& columns, const std::vector<double>& y) {
  const Index n = static_cast<Index>(y.size());
  const Index k = static_cast<Index>(columns.size());
  if (n <= k) throw ContractViolation("fit: not enough samples");
  Eigen::MatrixXd x(n, k);
  Eigen::VectorXd b(n);
  for (Index i = 0; i < n; ++i) {
    b(i) = y[static_cast<std::size_t>(i)];
    for (Index j = 0; j < k; ++j) x(i, j) = columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = x.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd res = b - x * c;
  LinearFit fit;
  fit.residual = res.cwiseAbs().maxCoeff();
  const double s2 = res.squaredNorm() / static_cast<double>(n - k);
  const Eigen::MatrixXd cov = (x.transpose() * x).inverse() * s2;
  for (Index j = 0; j < k; ++j) {
    fit.coeffs.push_back(c(j));
    fit.stderrs.push_back(std::sqrt(std::max(0.0, cov(j, j))));
  }
  return fit;
}

inline std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, n == 1 ? 0.0 : double(i) / double(n - 1)));
  return out;
}

inline std::vector<double> lin_spaced(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * (n == 1 ? 0.0 : double(i) / double(n - 1)));
  return out;
}

// ---------------------------------------------------------------------------
// Extension of Ψ

struct RayLimit {
  double angle = 0.0;
  bool converged = false;
  double order = 0.0;
  bool exact = false;
  double successive_gap = 0.0;
  std::string error;
};

struct ExtensionReport {
  std::vector<RayLimit> rays;
  double max_pairwise_gap = 0.0;
  bool ranks_match = false;   // graded pieces of the limit have the Hodge numbers
  std::optional<FlagPoint> limit;
  bool pass = false;
};

inline const std::vector<double>& default_ray_angles() {
  static const std::vector<double> a{0.0, 2.1, -2.3};
  return a;
}

/// Limits of Ψ along rays t_j = h e^{iθ} (all j), compared pairwise.
inline ExtensionReport check_extension(const UntwistedMap& psi, const WPoint& w, const Tolerances& tol = {},
                                       const std::vector<double>& angles = default_ray_angles(),
                                       const LimitOptions& opt = {}) {
  ExtensionReport rep;
  std::vector<FlagPoint> limits;
  bool all = true;
  for (double th : angles) {
    RayLimit rl;
    rl.angle = th;
    try {
      const auto lim = limit_filtration(psi, w, std::vector<double>(psi.family().generators(), th), opt);
      rl.converged = lim.rank_stable;
      rl.order = lim.order;
      rl.exact = lim.exact;
      rl.successive_gap = lim.successive_gap;
      limits.push_back(lim.a);
    } catch (const ConvergenceError& e) {
      rl.error = e.what();
      rl.successive_gap = e.residual();
    }
    all = all && rl.converged;
    rep.rays.push_back(rl);
  }
  for (std::size_t i = 0; i < limits.size(); ++i)
    for (std::size_t j = i + 1; j < limits.size(); ++j)
      rep.max_pairwise_gap = std::max(rep.max_pairwise_gap, domain_distance(limits[i], limits[j]));
  if (!limits.empty()) {
    rep.limit = limits.front();
    rep.ranks_match = rep.limit->hodge_numbers() == psi.family().phd.hodge_numbers();
  }
  rep.pass = all && rep.ranks_match && rep.max_pairwise_gap <= tol.extension_gap;
  return rep;
}

// ---------------------------------------------------------------------------
// Orbit horizontality and membership

struct HorizontalityScan {
  double max_residual = 0.0;
  LogPoint worst_z;
  bool pass = false;
};

/// Largest horizontality residual of the coordinate derivatives of the
/// orbit (finite differences) over the family grid.
inline HorizontalityScan check_orbit_horizontality(const OrbitData& orb, double x_max = -1.0, double rho = 0.0,
                                                   const Tolerances& tol = {}) {
  HorizontalityScan rep;
  const FrameMap frame = nilpotent_orbit(orb);
  for (const auto& z : z_grid(orb.generators(), x_max))
    for (const auto& w : w_samples(orb.nw, rho)) {
      const FlagPoint f = FlagPoint::from_frame(frame(z, w), orb.hodge_numbers);
      for (const auto& a : frame_tangents(frame, orb.generators(), z, w)) {
        // scale-free: relative to the size of the tangent
        const double r = is_horizontal(a, f).residual / std::max(1.0, spectral_norm(a));
        if (r > rep.max_residual) {
          rep.max_residual = r;
          rep.worst_z = z;
        }
      }
    }
  rep.pass = rep.max_residual <= tol.horizontality;
  return rep;
}

struct ThresholdReport {
  std::vector<double> xs;          // scanned Re z, increasing toward 0
  std::vector<double> margins;     // min frame margin over Im z at each x
  double c_hat = 0.0;
  bool found = false;
  bool extra_period_ok = false;    // membership pattern repeats one period up
  bool monotone = false;           // margin nondecreasing as Re z decreases
  double linear_slope = 0.0;       // log margin vs log |x|
};

/// Frame of ϑ(z) used for margins. When S preserves the limit flag the
/// factor exp(-Re z S) only rescales S-eigenspaces inside each step, so it
/// is dropped; otherwise the raw orbit frame is used.
inline Matrix margin_frame(const OrbitData& orb, const LogPoint& z, const WPoint& w) {
  const Matrix a = orb.a_frame(w);
  const FlagPoint fa = FlagPoint::from_frame(a, orb.hodge_numbers);
  bool s_preserves = true;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (int p = 1; p <= fa.weight(); ++p) {
      const Matrix b = fa.step_basis(p);
      if (b.cols() == 0) continue;
      const Matrix img = orb.S[i] * b;
      if ((img - b * (b.adjoint() * img)).norm() > 1e-10 * std::max(1.0, orb.S[i].norm())) s_preserves = false;
    }
  Matrix g = Matrix::Zero(orb.dim(), orb.dim());
  for (std::size_t i = 0; i < z.size(); ++i) g += Complex(0.0, z[i].imag()) * orb.S[i] + z[i] * orb.N[i];
  if (!s_preserves) return orb.frame(z, w);
  return matrix_exp(-g) * a;
}

/// Smallest C on the grid such that ϑ(z) ∈ D for all sampled Re z <= -C,
/// |Im z| <= 2π. Margins are taken in the orbit frame of margin_frame.
inline ThresholdReport orbit_threshold(const OrbitData& orb, const PolarizedHodgeData& phd, double x_lo = -20.0,
                                       double x_hi = -0.05, int nx = 60, int ny = 9) {
  if (orb.generators() != 1) throw ContractViolation("orbit_threshold: one-variable orbits only");
  ThresholdReport rep;
  rep.xs = lin_spaced(x_lo, x_hi, nx);
  const auto ys = lin_spaced(-2.0 * kPi, 2.0 * kPi, ny);
  const WPoint w = zero_w(orb.nw);
  bool extra_ok = true;
  std::vector<bool> member;
  for (double x : rep.xs) {
    double m = std::numeric_limits<double>::max();
    bool mem = true;
    for (double y : ys) {
      const auto r = frame_margin(margin_frame(orb, {Complex(x, y)}, w), phd);
      m = std::min(m, r.margin);
      mem = mem && r.member;
      // one period up the frame is T^{-1} times this one and T preserves Q
      const auto r2 = frame_margin(margin_frame(orb, {Complex(x, y + 2.0 * kPi)}, w), phd);
      extra_ok = extra_ok && r2.member == r.member &&
                 std::abs(r2.margin - r.margin) <= 1e-8 * std::max(1.0, std::abs(r.margin));
    }
    rep.margins.push_back(m);
    member.push_back(mem);
  }
  rep.extra_period_ok = extra_ok;
  // scan from the far end toward 0 while members
  std::size_t last = 0;
  rep.found = member.front();
  while (rep.found && last + 1 < member.size() && member[last + 1]) ++last;
  if (rep.found) rep.c_hat = -rep.xs[last];
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.margins.size(); ++i)
    if (rep.margins[i] > rep.margins[i - 1] * (1.0 + 1e-12) + 1e-15) rep.monotone = false;
  std::vector<double> lx, lm;
  for (std::size_t i = 0; i < rep.xs.size(); ++i)
    if (rep.margins[i] > 0.0) {
      lx.push_back(std::log(std::abs(rep.xs[i])));
      lm.push_back(std::log(rep.margins[i]));
    }
  if (lx.size() > 2) rep.linear_slope = least_squares({lx, std::vector<double>(lx.size(), 1.0)}, lm).coeffs[0];
  return rep;
}

// ---------------------------------------------------------------------------
// Distance decay and Ad growth

/// Q-unitary g with g·o = Φ(z); throws if the Hodge frame is too
/// ill-conditioned to trust.
inline Matrix alignment_at(const VHSFamily& fam, const LogPoint& z, const WPoint& w, double max_cond = 1e12) {
  const FlagPoint f = fam.flag(z, w);
  const auto mem = in_period_domain(f, fam.phd);
  if (!mem.member) throw ContractViolation("Φ leaves D at " + describe_point(z, w), mem.margin);
  const Matrix g = unitary_alignment(f, fam.reference, fam.phd);
  Eigen::JacobiSVD<Matrix> svd(g);
  const auto& s = svd.singularValues();
  const double cond = s(0) / s(s.size() - 1);
  if (!(cond < max_cond)) throw ContractViolation("alignment is ill-conditioned at " + describe_point(z, w), cond);
  return g;
}

/// d(g(z)^{-1} ϑ(z), o) in the Hodge metric of o.
inline double orbit_distance(const VHSFamily& fam, const OrbitData& orb, const LogPoint& z, const WPoint& w) {
  const Matrix g = alignment_at(fam, z, w);
  const FlagPoint th = FlagPoint::from_frame(g.inverse() * orb.frame(z, w), fam.phd.hodge_numbers());
  return domain_distance(th, fam.reference, fam.phd, fam.reference);
}

struct DecayFit {
  std::vector<std::pair<double, double>> samples;   // (x, distance)
  double delta = 0.0;
  double beta = 0.0;
  double residual = 0.0;      // max deviation in log scale
  double slack = 1.0;         // 1 - (λ_max - λ_min) over the S eigenvalues
  bool zero = false;          // distances vanish to roundoff on the window
};

inline double exponent_slack(const MonodromyDecomposition& dec) {
  double slack = 1.0;
  for (std::size_t j = 0; j < dec.generators(); ++j) {
    const auto ex = exponents(dec, j);
    const auto [lo, hi] = std::minmax_element(ex.begin(), ex.end());
    slack = std::min(slack, 1.0 - (*hi - *lo));
  }
  return slack;
}

/// Fit log d = δ x + β log|x| + c for d(x) = d(g(z)^{-1} ϑ(z), o),
/// z = x + iy, over log-spaced |x| in [|x_hi|, |x_lo|].
inline DecayFit distance_decay(const VHSFamily& fam, const MonodromyDecomposition& dec, const OrbitData& orb,
                               double x_lo = -30.0, double x_hi = -5.0, int n = 60, double y = 0.7,
                               unsigned threads = 1) {
  if (fam.generators() != 1) throw ContractViolation("distance_decay: one-variable families only");
  DecayFit fit;
  fit.slack = exponent_slack(dec);
  const auto ax = log_spaced(-x_hi, -x_lo, n);
  const WPoint w = zero_w(fam.nw);
  const auto ds =
      parallel_map(ax.size(), [&](std::size_t i) { return orbit_distance(fam, orb, {Complex(-ax[i], y)}, w); }, threads);
  std::vector<double> xs, lax, ones, ld;
  double dmax = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    fit.samples.emplace_back(-ax[i], ds[i]);
    dmax = std::max(dmax, ds[i]);
  }
  if (dmax <= 1e-12) {
    fit.zero = true;
    return fit;
  }
  for (std::size_t i = 0; i < ax.size(); ++i) {
    if (!(ds[i] > 0.0)) continue;
    xs.push_back(-ax[i]);
    lax.push_back(std::log(ax[i]));
    ones.push_back(1.0);
    ld.push_back(std::log(ds[i]));
  }
  const auto lf = least_squares({xs, lax, ones}, ld);
  fit.delta = lf.coeffs[0];
  fit.beta = lf.coeffs[1];
  fit.residual = lf.residual;
  return fit;
}

struct AdBoundReport {
  std::vector<std::pair<double, double>> samples;   // (x, ratio or norm)
  double spread = 0.0;        // λ_max - λ_min
  double bound = 0.0;         // allowed maximum of the ratio
  double max_ratio = 0.0;
  double degree = 0.0;        // nilpotent case: fitted log-log slope
  double degree_limit = 0.0;
  bool pass = false;
};

namespace detail {

inline std::vector<double> real_semisimple_spectrum(const Matrix& s) {
  const Index r = s.rows();
  std::vector<double> evs;
  for (const auto& c : spectrum(s)) {
    if (std::abs(c.eigenvalue.imag()) > 1e-9 * std::max(1.0, std::abs(c.eigenvalue)))
      throw ContractViolation("ad_bound: S has a non-real eigenvalue", std::abs(c.eigenvalue.imag()));
    Eigen::JacobiSVD<Matrix> svd(s - c.eigenvalue * Matrix::Identity(r, r));
    const auto& sv = svd.singularValues();
    const Index kernel = (sv.array() <= 1e-8 * std::max(1.0, sv(0))).count();
    if (kernel != c.multiplicity) throw ContractViolation("ad_bound: S is not semisimple", sv(r - c.multiplicity));
    for (Index i = 0; i < c.multiplicity; ++i) evs.push_back(c.eigenvalue.real());
  }
  return evs;
}

}  // namespace detail

/// ratio(x) = |Ad exp(xS)| / exp((λ_max - λ_min)|x|) against 10 times its
/// value at |x| = 1.
inline AdBoundReport ad_bound_check_semisimple(const Matrix& s, double x_lo = -50.0, int n = 51,
                                               const Tolerances& tol = {}) {
  AdBoundReport rep;
  const auto evs = detail::real_semisimple_spectrum(s);
  const auto [lo, hi] = std::minmax_element(evs.begin(), evs.end());
  rep.spread = *hi - *lo;
  auto ratio = [&](double x) {
    return ad_norm(matrix_exp(x * s), matrix_exp(-x * s), InnerProduct::standard(s.rows())) /
           std::exp(rep.spread * std::abs(x));
  };
  rep.bound = tol.ad_factor * ratio(-1.0);
  for (double x : lin_spaced(x_lo, 0.0, n)) {
    const double q = ratio(x);
    rep.samples.emplace_back(x, q);
    rep.max_ratio = std::max(rep.max_ratio, q);
  }
  rep.pass = rep.max_ratio <= rep.bound;
  return rep;
}

/// Log-log slope of |Ad exp(xN)| over log-spaced |x| in [|x_hi|, |x_lo|];
/// Ad on End(V) is polynomial of degree at most 2(r - 1). The window sits
/// far out so the slope is the leading degree rather than a blend.
inline AdBoundReport ad_bound_check_nilpotent(const Matrix& nmat, double x_lo = -1e4, double x_hi = -10.0, int n = 30) {
  const Index r = nmat.rows();
  Matrix pw = Matrix::Identity(r, r);
  for (Index i = 0; i < r; ++i) pw = pw * nmat;
  const double scale = std::pow(std::max(1.0, nmat.norm()), double(r));
  if (pw.norm() > 1e-10 * scale) throw ContractViolation("ad_bound: N is not nilpotent", pw.norm() / scale);
  AdBoundReport rep;
  rep.degree_limit = 2.0 * double(r - 1);
  std::vector<double> lx, ly, ones;
  // exp(xN) as its finite Taylor sum; scaling and squaring loses accuracy here
  auto nil_exp = [&](double x) {
    Matrix term = Matrix::Identity(r, r), sum = term;
    for (Index k = 1; k < r; ++k) {
      term = term * (x * nmat) / double(k);
      sum += term;
    }
    return sum;
  };
  for (double ax : log_spaced(-x_hi, -x_lo, n)) {
    const double v = ad_norm(nil_exp(-ax), nil_exp(ax), InnerProduct::standard(r));
    rep.samples.emplace_back(-ax, v);
    lx.push_back(std::log(ax));
    ly.push_back(std::log(v));
    ones.push_back(1.0);
  }
  rep.degree = least_squares({lx, ones}, ly).coeffs[0];
  rep.pass = rep.degree <= rep.degree_limit + 1e-9;
  return rep;
}

struct GrowthFit {
  std::vector<std::pair<double, double>> samples;   // (x, |Ad g(z)^{-1}|)
  double beta_hat = 0.0;
  double residual = 0.0;
};

/// Slope of log |Ad g(z)^{-1}| against log|x| (Hodge metric of o).
inline GrowthFit schmid_growth_check(const VHSFamily& fam, double x_lo = -400.0, double x_hi = -40.0, int n = 40,
                                     double y = 0.7) {
  if (fam.generators() != 1) throw ContractViolation("schmid_growth_check: one-variable families only");
  GrowthFit fit;
  const InnerProduct ip = hodge_inner_product(fam.reference, fam.phd);
  const WPoint w = zero_w(fam.nw);
  std::vector<double> lx, ly, ones;
  for (double ax : log_spaced(-x_hi, -x_lo, n)) {
    const Matrix g = alignment_at(fam, {Complex(-ax, y)}, w);
    const double v = ad_norm(g.inverse(), g, ip);
    fit.samples.emplace_back(-ax, v);
    lx.push_back(std::log(ax));
    ly.push_back(std::log(v));
    ones.push_back(1.0);
  }
  const auto lf = least_squares({lx, ones}, ly);
  fit.beta_hat = lf.coeffs[0];
  fit.residual = lf.residual;
  return fit;
}

// ---------------------------------------------------------------------------
// Parabolic weights

struct WeightEstimate {
  double beta_hat = 0.0;
  double logorder_hat = 0.0;
  double t_min = 1e-8, t_max = 1e-2;
  double stderr_beta = 0.0;
  double residual = 0.0;
  bool constant = false;     // norm constant along the ray; fit skipped
};

/// Norm of a section along a radial ray, given as flat coordinates z ->
/// vector. Generator j varies with t_j = s e^{iθ}; the other coordinates
/// sit at |t| = 1e-3 (angle 0.5).
using FlatCoordinates = std::function<Vector(const LogPoint&)>;

inline WeightEstimate parabolic_weight(const VHSFamily& fam, const FlatCoordinates& section, std::size_t j = 0,
                                       double theta = 0.3, double t_min = 1e-8, double t_max = 1e-2, int n = 40) {
  if (j >= fam.generators()) throw ContractViolation("parabolic_weight: no such generator");
  WeightEstimate est;
  est.t_min = t_min;
  est.t_max = t_max;
  const WPoint w = zero_w(fam.nw);
  std::vector<double> a, b, ones, y;
  for (double s : log_spaced(t_min, t_max, n)) {
    LogPoint z(fam.generators(), Complex(std::log(1e-3), 0.5));
    z[j] = Complex(std::log(s), theta);
    const double nv = hodge_norm_at(fam, section(z), z, w);
    a.push_back(-std::log(s));
    b.push_back(std::log(std::abs(std::log(s))));
    ones.push_back(1.0);
    y.push_back(std::log(nv));
  }
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymax - *ymin < 1e-10) {
    est.constant = true;
    return est;
  }
  const auto lf = least_squares({a, b, ones}, y);
  est.beta_hat = lf.coeffs[0];
  est.logorder_hat = lf.coeffs[1];
  est.stderr_beta = lf.stderrs[0];
  est.residual = lf.residual;
  return est;
}

inline WeightEstimate parabolic_weight(const VHSFamily& fam, const TwistedFrameEntry& entry, std::size_t j = 0,
                                       double theta = 0.3) {
  return parabolic_weight(fam, [entry](const LogPoint& z) { return entry.flat_coordinates(z); }, j, theta);
}

// ---------------------------------------------------------------------------
// Composite checks

struct SingleValuednessReport {
  double max_residual = 0.0;
  std::size_t entries = 0;
  bool pass = false;
};

inline SingleValuednessReport check_single_valuedness(const VHSFamily& fam,
                                                      std::shared_ptr<const MonodromyDecomposition> dec,
                                                      const Tolerances& tol = {}) {
  SingleValuednessReport rep;
  const auto frame = deligne_frame(dec);
  rep.entries = frame.size();
  for (std::size_t j = 0; j < fam.generators(); ++j)
    for (double x : {-1.0, -3.0, -7.0, -15.0, -30.0}) {
      LogPoint z(fam.generators(), Complex(-2.0, 0.4));
      z[j] = Complex(x, 0.3 * x);
      for (const auto& e : frame) rep.max_residual = std::max(rep.max_residual, e.single_valuedness_residual(z));
    }
  rep.pass = rep.max_residual <= tol.single_valued;
  return rep;
}

struct EntryWeight {
  int block = 0;
  double beta = 0.0;      // exponent of the block for the generator
  WeightEstimate est;
};

struct GradingReport {
  bool ranks_match = false;
  std::vector<EntryWeight> entries;
  double max_beta_error = 0.0;
  bool pass = false;
};

/// Limit ranks and per-entry weights: every Deligne frame entry should show
/// growth |t|^{-β} of its block up to log factors.
inline GradingReport check_grading(const VHSFamily& fam, std::shared_ptr<const MonodromyDecomposition> dec,
                                   const Tolerances& tol = {}) {
  GradingReport rep;
  const auto psi = untwisted_map(fam, *dec);
  const auto ext = check_extension(psi, zero_w(fam.nw), tol);
  rep.ranks_match = ext.ranks_match && !ext.rays.empty() &&
                    std::all_of(ext.rays.begin(), ext.rays.end(), [](const RayLimit& r) { return r.converged; });
  for (const auto& e : deligne_frame(dec)) {
    for (std::size_t j = 0; j < fam.generators(); ++j) {
      EntryWeight ew;
      ew.block = e.block;
      ew.beta = e.betas()[j];
      ew.est = parabolic_weight(fam, e, j);
      const double err = std::abs(ew.est.beta_hat - ew.beta);
      rep.max_beta_error = std::max(rep.max_beta_error, err);
      rep.entries.push_back(ew);
    }
  }
  rep.pass = rep.ranks_match && rep.max_beta_error <= tol.weight_beta;
  return rep;
}

struct HiggsReport {
  std::vector<std::pair<double, double>> samples;   // (x, norm) on the worst ray
  double reference = 0.0;     // max over rays of the norm at x = -5
  double max_ratio = 0.0;     // max over rays of sup / value at -5
  bool pass = false;
};

/// higgs_norm along rays Im z = const (all log coordinates equal) for Re z
/// from -5 to -40.
inline HiggsReport check_higgs(const VHSFamily& fam, const Tolerances& tol = {}, double x_start = -5.0,
                               double x_end = -40.0, int n = 36) {
  HiggsReport rep;
  const WPoint w = zero_w(fam.nw);
  for (double y : {0.0, 2.0, -2.5}) {
    std::vector<std::pair<double, double>> s;
    const double base = higgs_norm(fam, diagonal(fam.generators(), Complex(x_start, y)), w);
    double sup = 0.0;
    for (double x : lin_spaced(x_start, x_end, n)) {
      const double v = higgs_norm(fam, diagonal(fam.generators(), Complex(x, y)), w);
      s.emplace_back(x, v);
      sup = std::max(sup, v);
    }
    // a vanishing field is trivially bounded
    const double ratio = base > 1e-10 ? sup / base : (sup > 1e-10 ? std::numeric_limits<double>::infinity() : 1.0);
    rep.reference = std::max(rep.reference, base);
    if (ratio >= rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.samples = s;
    }
  }
  rep.pass = rep.max_ratio <= tol.higgs_factor;
  return rep;
}

}  // namespace nilorbit
