#include <gtest/gtest.h>

#include <nilorbit/vhs.hpp>

#include "oracles.hpp"

using namespace nilorbit;

namespace {

Complex tau_of(Complex z) { return z / kTwoPiI + std::exp(z); }

// Hodge norm on the upper-half-plane model: V^{1,0} = span(1, τ),
// V^{0,1} = span(1, conj τ), both of squared length 2 Im τ.
double elliptic_hodge_norm(const Vector& u, Complex tau) {
  Matrix basis(2, 2);
  basis << 1, 1, tau, std::conj(tau);
  const Vector c = basis.fullPivLu().solve(u);
  return std::sqrt(2.0 * tau.imag() * c.squaredNorm());
}

FlagPoint line(Complex c) { return FlagPoint::from_frame(line_frame(c), {1, 1}); }

VHSFamily strip_orbit(const VHSFamily& fam) {
  VHSFamily out = fam;
  out.orbit.reset();
  return out;
}

}  // namespace

TEST(Vhs, EllipticFamilyIsValid) {
  const auto fam = elliptic_family();
  const auto rep = check_family(fam);
  EXPECT_TRUE(rep.member);
  EXPECT_LT(rep.equivariance, 1e-10);
  EXPECT_LT(rep.q_preservation, 1e-14);
  Matrix t(2, 2);
  t << 1, 0, -1, 1;
  EXPECT_LT((fam.monodromy[0] - t).norm(), 1e-12);
  // Φ(z) = span(e1 + τ e2)
  const LogPoint z{Complex(-3.0, 0.8)};
  EXPECT_LT(domain_distance(fam.flag(z), line(tau_of(z[0]))), 1e-13);
}

TEST(Vhs, PureOrbitIsValidOnUnitBox) {
  PolarizedHodgeData phd(1, {1, 1}, elliptic_q());
  EXPECT_NO_THROW(make_orbit_family(elliptic_orbit(), phd, {-1.0, 0.0}, elliptic_reference()));
}

TEST(Vhs, FamilyLeavingDomainIsRejectedWithPoint) {
  PolarizedHodgeData phd(1, {1, 1}, elliptic_q());
  Perturbation big = [](const std::vector<Complex>& t, const WPoint&) {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 0) = 5.0 * t[0];
    return m;
  };
  try {
    make_orbit_family(elliptic_orbit(), phd, {-1.0, 0.0}, elliptic_reference(), "bad", big);
    FAIL() << "expected a contract violation";
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("z=("), std::string::npos);
    EXPECT_LT(e.residual(), 0.0);
  }
}

TEST(Vhs, NonHorizontalOrbitIsRejected) {
  // weight 2, F^2 = e1, F^1 = (e1, e2): N' e1 carries a 0.01 e3 component
  Matrix np = Matrix::Zero(3, 3);
  np(1, 0) = 1.0;
  np(2, 1) = 1.0;
  np(2, 0) = 0.01;
  auto a = [](const WPoint&) { return Matrix(Matrix::Identity(3, 3)); };
  try {
    make_orbit(a, {1, 1, 1}, {Matrix::Zero(3, 3)}, {np});
    FAIL() << "expected a contract violation";
  } catch (const ContractViolation& e) {
    EXPECT_NEAR(e.residual(), 0.01, 1e-12);
  }
}

TEST(Vhs, NonCommutingOrbitIsRejected) {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = -0.5;
  auto a = [](const WPoint&) { return line_frame(0.0); };
  EXPECT_THROW(make_orbit(a, {1, 1}, {s}, {elliptic_n()}), ContractViolation);
}

TEST(Vhs, EllipticUntwistsToLine) {
  const auto fam = elliptic_family();
  const auto dec = decompose(fam.monodromy, 0.0);
  const auto psi = untwisted_map(fam, dec);
  for (Complex t : {Complex(0.1, 0.0), Complex(-0.05, 0.02), Complex(1e-4, -3e-4)}) {
    EXPECT_LT(domain_distance(psi.at_t({t}, {}), line(t)), 1e-12);
  }
  EXPECT_LT(psi.single_valuedness_residual({Complex(-4.0, 2.0)}, {}), 1e-12);
}

TEST(Vhs, EllipticLimitAlongRays) {
  const auto fam = elliptic_family();
  const auto psi = untwisted_map(fam, decompose(fam.monodromy, 0.0));
  for (double th : {0.0, 2.1, -2.3}) {
    const auto lim = limit_filtration(psi, {}, {th});
    EXPECT_LT(domain_distance(lim.a, line(0.0)), 1e-10);
    EXPECT_NEAR(lim.order, 1.0, 0.05);
    EXPECT_FALSE(lim.exact);
    EXPECT_TRUE(lim.rank_stable);
  }
}

TEST(Vhs, LimitOrderTwo) {
  auto along = [](double h) { return line(Complex(h * h, 0.5 * h * h)); };
  const auto lim = limit_filtration(along, {1, 1});
  EXPECT_LT(domain_distance(lim.a, line(0.0)), 1e-10);
  EXPECT_NEAR(lim.order, 2.0, 0.05);
}

TEST(Vhs, LimitOfNonAnalyticPathFails) {
  auto along = [](double h) { return line(Complex(1.0 / std::log(h), 0.0)); };
  try {
    limit_filtration(along, {1, 1});
    FAIL() << "expected a convergence error";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 1e-7);
  }
}

TEST(Vhs, ConstantAndTwistLimitsAreExact) {
  for (const auto& fam : {constant_family(), twist_family(-0.5)}) {
    const auto psi = untwisted_map(fam, decompose(fam.monodromy, 0.0));
    const auto lim = limit_filtration(psi, {}, {0.3});
    EXPECT_TRUE(lim.exact) << fam.name;
    EXPECT_LT(domain_distance(lim.a, fam.reference), 1e-12) << fam.name;
  }
}

TEST(Vhs, LimitFromScratchMatchesOrbit) {
  for (const std::string name : {"elliptic", "elliptic-sym2", "elliptic+twist", "elliptic^2"}) {
    const auto fam = registry_family(name);
    const auto dec = decompose(fam.monodromy, 0.0);
    const auto from_limit = orbit_of(strip_orbit(fam), dec);
    const WPoint w = zero_w(fam.nw);
    EXPECT_LT(domain_distance(from_limit.a(w), fam.orbit->a(w)), 1e-9) << name;
  }
}

TEST(Vhs, SeparateVariablesLimit) {
  const auto fam = registry_family("elliptic^2");
  ASSERT_EQ(fam.generators(), 2u);
  EXPECT_EQ(fam.phd.hodge_numbers(), (std::vector<int>{2, 2}));
  const auto psi = untwisted_map(fam, decompose(fam.monodromy, 0.0));
  const auto lim = limit_filtration(psi, {}, {0.4, -1.0});
  Matrix expect = Matrix::Zero(4, 2);
  expect(0, 0) = 1.0;
  expect(2, 1) = 1.0;
  EXPECT_LT(gap_distance(lim.a.step(1), Subspace(expect)), 1e-10);
}

TEST(Vhs, SharedSumWithTwist) {
  const auto fam = registry_family("elliptic+twist");
  EXPECT_EQ(fam.phd.hodge_numbers(), (std::vector<int>{1, 2}));
  const auto dec = decompose(fam.monodromy, 0.0);
  auto ex = exponents(dec, 0);
  std::sort(ex.begin(), ex.end());
  ASSERT_EQ(ex.size(), 2u);  // one per block
  EXPECT_NEAR(ex.front(), -1.0 / 3.0, 1e-12);
  EXPECT_NEAR(ex.back(), 0.0, 1e-12);
  // F^1 = span(e1 + τ e2, e3)
  const LogPoint z{Complex(-6.0, 1.0)};
  Matrix b = Matrix::Zero(3, 2);
  b(0, 0) = 1.0;
  b(1, 0) = tau_of(z[0]);
  b(2, 1) = 1.0;
  EXPECT_LT(gap_distance(fam.flag(z).step(1), Subspace(orthonormalize(b).basis())), 1e-12);
}

TEST(Vhs, SymmetricSquare) {
  const auto fam = registry_family("elliptic-sym2");
  EXPECT_EQ(fam.phd.weight(), 2);
  EXPECT_EQ(fam.phd.hodge_numbers(), (std::vector<int>{1, 1, 1}));
  // F^2 is spanned by the square of e1 + τ e2: (1, √2 τ, τ^2) in the
  // orthonormal symmetric basis.
  const LogPoint z{Complex(-4.0, -0.6)};
  const Complex t = tau_of(z[0]);
  Matrix v(3, 1);
  v << 1.0, std::sqrt(2.0) * t, t * t;
  EXPECT_LT(gap_distance(fam.flag(z).step(2), orthonormalize(v)), 1e-12);
  const auto psi = untwisted_map(fam, decompose(fam.monodromy, 0.0));
  EXPECT_LT(psi.single_valuedness_residual(z, {}), 1e-10);
}

TEST(Vhs, ParameterFamilyLimit) {
  const auto fam = registry_family("elliptic-w");
  EXPECT_EQ(fam.nw, 1u);
  const auto psi = untwisted_map(fam, decompose(fam.monodromy, 0.0));
  for (Complex w : {Complex(0.0, 0.0), Complex(0.2, -0.3), Complex(-0.4, 0.1)}) {
    const auto lim = limit_filtration(psi, {w}, {1.0});
    EXPECT_LT(domain_distance(lim.a, line(w)), 1e-10);
  }
}

TEST(Vhs, HiggsNormEllipticClosedForm) {
  const auto fam = elliptic_family();
  for (double x : {-3.0, -5.0, -12.0, -40.0}) {
    for (double y : {0.0, 2.0}) {
      const Complex z(x, y);
      const Complex dtau = 1.0 / kTwoPiI + std::exp(z);
      const double expect = std::abs(dtau) / (2.0 * tau_of(z).imag()) * 2.0 * std::abs(x);
      EXPECT_NEAR(higgs_norm(fam, {z}), expect, 1e-6 * expect) << x << " " << y;
    }
  }
  EXPECT_NEAR(higgs_norm(fam, {Complex(-5.0, 0.0)}), 1.0, 0.02);
}

TEST(Vhs, HiggsNormMatchesDiskCoordinate) {
  // Same quantity computed from the frame as a function of t (on a branch):
  // ∂_t = ∂_z / t and the Poincaré length of ∂_t is 1 / (2 |t| |log|t||).
  for (const std::string name : {"elliptic", "elliptic-sym2", "elliptic+twist"}) {
    const auto fam = registry_family(name);
    for (Complex t : {Complex(0.01, 0.004), Complex(-1e-3, 2e-4)}) {
      const Complex z = std::log(t);
      const double ht = 1e-5 * std::abs(t);
      const Matrix e = fam.frame({z}, {});
      const Matrix de = (fam.frame({std::log(t + ht)}, {}) - fam.frame({std::log(t - ht)}, {})) / (2.0 * ht);
      const Matrix a = de * e.inverse();
      const auto dec = decomposition_from_filtration(fam.flag({z}), fam.phd);
      const Matrix w = hodge_frame(dec, fam.phd);
      const Matrix at = w.inverse() * a * w;
      Matrix theta = Matrix::Zero(at.rows(), at.cols());
      const int m = fam.phd.weight();
      for (int p = 1; p <= m; ++p) {
        const Index cp = fam.phd.f(p + 1), cq = fam.phd.f(p);
        theta.block(cq, cp, fam.phd.h(p - 1), fam.phd.h(p)) = at.block(cq, cp, fam.phd.h(p - 1), fam.phd.h(p));
      }
      Eigen::JacobiSVD<Matrix> svd(theta);
      const double disk = svd.singularValues()(0) * 2.0 * std::abs(t) * std::abs(std::log(std::abs(t)));
      EXPECT_NEAR(higgs_norm(fam, {z}), disk, 1e-5 * std::max(1.0, disk)) << name;
    }
  }
}

TEST(Vhs, HiggsNormVanishesForConstant) {
  EXPECT_LT(higgs_norm(constant_family(), {Complex(-3.0, 1.0)}), 1e-8);
  EXPECT_LT(higgs_norm(twist_family(-0.3), {Complex(-3.0, 1.0)}), 1e-8);
}

TEST(Vhs, FlatSectionNorms) {
  const auto fam = elliptic_family();
  auto dec = std::make_shared<const MonodromyDecomposition>(decompose(fam.monodromy, 0.0));
  Vector e1 = Vector::Zero(2), e2 = Vector::Zero(2);
  e1(0) = 1.0;
  e2(1) = 1.0;
  const auto v2 = flat_section(dec, e2);
  for (double x : {-3.0, -20.0}) {
    const LogPoint z{Complex(x, 0.9)};
    const Complex tau = tau_of(z[0]);
    EXPECT_NEAR(flat_section_norm(fam, *dec, v2, z), std::pow(tau.imag(), -0.5), 1e-10);
    const TwistedFrameEntry entry{dec, dec->block_of(e1), e1};
    const Vector flat = e1 + (z[0] / kTwoPiI) * e2;
    EXPECT_NEAR(twisted_entry_norm(fam, entry, z, {}), elliptic_hodge_norm(flat, tau), 1e-9);
  }
}

TEST(Vhs, RegistryBuildsAndRejectsUnknown) {
  for (const auto& name : registry_names()) {
    const auto fam = registry_family(name);
    EXPECT_TRUE(fam.orbit.has_value()) << name;
    EXPECT_TRUE(check_family(fam).member) << name;
  }
  EXPECT_THROW(registry_family("no-such-family"), UnknownFamily);
}

TEST(Vhs, TwistWithWeightAndLevel) {
  const auto fam = twist_family(-0.25, 1, 1);
  EXPECT_EQ(fam.phd.hodge_numbers(), (std::vector<int>{0, 1}));
  EXPECT_NEAR(std::arg(fam.monodromy[0](0, 0)), -kPi / 2.0, 1e-12);
}

TEST(Vhs, LimitOptionsNeedEnoughRadii) {
  auto along = [](double h) { return line(Complex(h, 0.0)); };
  LimitOptions opt;
  opt.k_max = 8;
  EXPECT_THROW(limit_filtration(along, {1, 1}, opt), ContractViolation);
}
