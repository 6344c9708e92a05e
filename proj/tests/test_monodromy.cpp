#include <nilorbit/monodromy.hpp>

#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"
#include "oracles.hpp"

using namespace nilorbit;

namespace {

Matrix unipotent_elliptic() {
  Matrix t(2, 2);
  t << 1, 0, -1, 1;
  return t;
}

std::vector<LogPoint> grid_points(std::size_t p) {
  std::vector<LogPoint> pts;
  for (double x : {-0.5, -2.0, -7.0})
    for (double y : {-3.0, 0.0, 2.5}) pts.push_back(LogPoint(p, Complex(x, y)));
  return pts;
}

}  // namespace

TEST(NormalizedExponent, WindowAndSnap) {
  EXPECT_EQ(normalized_exponent(1.0, 0.0), 0.0);
  EXPECT_NEAR(normalized_exponent(-1.0, 0.0), -0.5, 1e-15);
  EXPECT_NEAR(normalized_exponent(std::exp(Complex(0, 2 * kPi / 3)), 0.0), -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(normalized_exponent(std::exp(Complex(0, -2 * kPi / 3)), 0.0), -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(normalized_exponent(std::exp(Complex(0, 1e-12)), 0.0), 0.0, 1e-15);
  EXPECT_NEAR(normalized_exponent(std::exp(Complex(0, -1e-12)), 0.0), 0.0, 1e-15);
  EXPECT_NEAR(normalized_exponent(1.0, 0.3), 0.0, 1e-15);
  EXPECT_NEAR(normalized_exponent(1.0, 1.0), 1.0, 1e-15);
}

TEST(Decompose, Identity) {
  auto dec = decompose(MonodromyTuple({Matrix::Identity(3, 3)}), 0.0);
  EXPECT_LT(dec.S[0].norm(), 1e-15);
  EXPECT_LT(dec.N[0].norm(), 1e-15);
}

TEST(Decompose, CubeRootsOfUnity) {
  Matrix t = Matrix::Zero(2, 2);
  t(0, 0) = std::exp(Complex(0, 2 * kPi / 3));
  t(1, 1) = std::exp(Complex(0, -2 * kPi / 3));
  auto dec = decompose(MonodromyTuple({t}), 0.0);
  Matrix expect = Matrix::Zero(2, 2);
  expect(0, 0) = -2.0 / 3.0;
  expect(1, 1) = -1.0 / 3.0;
  EXPECT_LT((dec.S[0] - expect).norm(), 1e-14);
  EXPECT_LT(dec.N[0].norm(), 1e-14);
  EXPECT_LT((test_oracle::taylor_exp(kTwoPiI * dec.S[0]) - t).norm(), 1e-13);
}

TEST(Decompose, UnipotentElliptic) {
  auto dec = decompose(MonodromyTuple({unipotent_elliptic()}), 0.0);
  Matrix n = Matrix::Zero(2, 2);
  n(1, 0) = -1.0 / kTwoPiI;
  EXPECT_LT(dec.S[0].norm(), 1e-15);
  EXPECT_LT((dec.N[0] - n).norm(), 1e-15);
  EXPECT_LT((test_oracle::taylor_exp(kTwoPiI * dec.N[0]) - unipotent_elliptic()).norm(), 1e-14);
}

TEST(Decompose, Errors) {
  Matrix big = Matrix::Identity(2, 2);
  big(0, 0) = 2.0;
  EXPECT_THROW(MonodromyTuple({big}), ContractViolation);
  Matrix a(2, 2), b(2, 2);
  a << 1, 1, 0, 1;
  b << 1, 0, 1, 1;
  EXPECT_THROW(MonodromyTuple({a, b}), ContractViolation);
  EXPECT_THROW(decompose(MonodromyTuple({a}), {0.0, 0.0}), ContractViolation);
}

TEST(Decompose, RandomTuplesReassemble) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> al(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Index r = 1 + trial % 8;
    const std::size_t p = 1 + trial % 3;
    auto gen = test_gen::random_commuting_tuple(r, p, rng);
    std::vector<double> alpha(p);
    for (auto& a : alpha) a = al(rng);
    auto dec = decompose(MonodromyTuple(gen.ts), alpha);
    for (std::size_t j = 0; j < p; ++j) {
      EXPECT_LT((matrix_exp(kTwoPiI * dec.R(j)) - gen.ts[j]).norm(), 1e-8);
      for (double b : exponents(dec, j)) {
        EXPECT_GT(b, alpha[j] - 1.0);
        EXPECT_LE(b, alpha[j]);
      }
    }
    EXPECT_LT(dec.commutator_residual, 1e-9);
    for (const auto& blk : dec.blocks)
      for (std::size_t j = 0; j < p; ++j) {
        EXPECT_LT(std::abs(std::exp(kTwoPiI * blk.betas[j]) - blk.lambdas[j]), 1e-10);
        const Matrix& n = blk.Ns[j];
        Matrix pw = Matrix::Identity(n.rows(), n.rows());
        for (Index i = 0; i < n.rows(); ++i) pw = pw * n;
        EXPECT_LT(pw.norm(), 1e-9);
      }
  }
}

TEST(Decompose, WindowShift) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto gen = test_gen::random_commuting_tuple(5, 2, rng);
    MonodromyTuple tuple(gen.ts);
    auto d0 = decompose(tuple, {0.2, -0.4});
    auto d1 = decompose(tuple, {1.2, 0.6});
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_LT((d1.S[j] - d0.S[j] - Matrix::Identity(5, 5)).norm(), 1e-9);
      EXPECT_LT((d1.N[j] - d0.N[j]).norm(), 1e-9);
    }
    // at the frame level the shifted twist differs by t_j^{-1} per generator
    auto f0 = deligne_frame(std::make_shared<const MonodromyDecomposition>(d0));
    auto f1 = deligne_frame(std::make_shared<const MonodromyDecomposition>(d1));
    const LogPoint z{Complex(-1.5, 0.4), Complex(-0.7, -2.0)};
    for (std::size_t i = 0; i < f0.size(); ++i) {
      const Vector a = f0[i].flat_coordinates(z);
      const Vector b = f1[i].flat_coordinates(z);
      EXPECT_LT((b - std::exp(-z[0] - z[1]) * a).norm(), 1e-9 * a.norm());
    }
  }
}

TEST(Twist, RankOneExamples) {
  auto trivial = std::make_shared<const MonodromyDecomposition>(decompose(MonodromyTuple({Matrix::Identity(1, 1)}), 0.0));
  Vector c(1);
  c << Complex(2.0, -1.0);
  FlatSection constant = [c](const LogPoint&) { return c; };
  EXPECT_LT((twist_flat_section(*trivial, constant, {Complex(-3, 1)}) - c).norm(), 1e-15);

  auto half = decompose(MonodromyTuple({-Matrix::Identity(1, 1)}), 0.0);
  EXPECT_NEAR(half.blocks[0].betas[0], -0.5, 1e-15);
  // v(t) = t^{-1/2} c satisfies v(e^{2πi} t) = -v(t)
  FlatSection root = [c](const LogPoint& z) -> Vector { return std::exp(-0.5 * z[0]) * c; };
  for (auto z : grid_points(1)) EXPECT_LT((twist_flat_section(half, root, z) - c).norm(), 1e-13);
}

TEST(Twist, Errors) {
  auto dec = decompose(MonodromyTuple({Matrix(Vector::Ones(2).cwiseProduct(Vector::LinSpaced(2, 1.0, -1.0)).asDiagonal())}), 0.0);
  Vector mixed = Vector::Ones(2);
  FlatSection straddle = [mixed](const LogPoint& z) -> Vector {
    Vector v = mixed;
    v(1) *= std::exp(-0.5 * z[0]);
    return v;
  };
  EXPECT_THROW(twist_flat_section(dec, straddle, {Complex(-1, 0)}), ContractViolation);
  FlatSection wrong = [](const LogPoint&) -> Vector { return Vector::Unit(2, 1); };
  try {
    twist_flat_section(dec, wrong, {Complex(-1, 0)});
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NEAR(e.residual(), 2.0, 1e-12);
  }
}

TEST(DeligneFrame, IdentityIsConstant) {
  auto dec = std::make_shared<const MonodromyDecomposition>(decompose(MonodromyTuple({Matrix::Identity(2, 2)}), 0.0));
  auto frame = deligne_frame(dec);
  ASSERT_EQ(frame.size(), 2u);
  for (const auto& e : frame)
    for (auto z : grid_points(1)) EXPECT_LT((e.flat_coordinates(z) - e.b).norm(), 1e-15);
}

TEST(DeligneFrame, CubeRootExponentBookkeeping) {
  Matrix t = Matrix::Zero(2, 2);
  t(0, 0) = std::exp(Complex(0, 2 * kPi / 3));
  t(1, 1) = std::exp(Complex(0, -2 * kPi / 3));
  auto dec = std::make_shared<const MonodromyDecomposition>(decompose(MonodromyTuple({t}), 0.0));
  for (const auto& e : deligne_frame(dec)) {
    const double beta = e.betas()[0];
    for (auto z : grid_points(1)) {
      // flat coordinates are t^{-β} b: t^{2/3} and t^{1/3}
      EXPECT_LT((e.flat_coordinates(z) - std::exp(-beta * z[0]) * e.b).norm(), 1e-13);
      EXPECT_LT(e.single_valuedness_residual(z), 1e-12);
    }
  }
}

TEST(DeligneFrame, UnipotentSingleValued) {
  auto dec = std::make_shared<const MonodromyDecomposition>(decompose(MonodromyTuple({unipotent_elliptic()}), 0.0));
  auto frame = deligne_frame(dec);
  EXPECT_EQ(frame.size(), 2u);
  for (const auto& e : frame)
    for (auto z : grid_points(1)) EXPECT_LT(e.single_valuedness_residual(z), 1e-9);
}

TEST(DeligneFrame, RandomTuplesSingleValued) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t p = 1 + trial % 3;
    auto gen = test_gen::random_commuting_tuple(4, p, rng);
    auto dec = std::make_shared<const MonodromyDecomposition>(decompose(MonodromyTuple(gen.ts), 0.0));
    for (const auto& e : deligne_frame(dec))
      for (auto z : grid_points(p)) EXPECT_LT(e.single_valuedness_residual(z), 1e-8);
  }
}

TEST(Dual, Examples) {
  Matrix u = test_oracle::random_unitary(3, *std::make_unique<std::mt19937_64>(4));
  auto du = dual_monodromy(MonodromyTuple({u}));
  EXPECT_LT((du[0] - u.conjugate()).norm(), 1e-12);

  Matrix d = Matrix::Zero(1, 1);
  d(0, 0) = std::exp(Complex(0, 0.7));
  auto dd = dual_monodromy(MonodromyTuple({d}));
  EXPECT_NEAR(std::abs(dd[0](0, 0) - std::exp(Complex(0, -0.7))), 0.0, 1e-15);

  auto dt = dual_monodromy(MonodromyTuple({unipotent_elliptic()}));
  Matrix expect(2, 2);
  expect << 1, 1, 0, 1;
  EXPECT_LT((dt[0] - expect).norm(), 1e-15);
}

TEST(Dual, InverseSpectra) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    auto gen = test_gen::random_commuting_tuple(5, 2, rng);
    MonodromyTuple t(gen.ts);
    EXPECT_LT(dual_spectrum_residual(t, dual_monodromy(t)), 1e-9);
  }
}

TEST(Dual, PairingExamples) {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  d(2, 2) = Complex(0, 1);
  MonodromyTuple t({d});
  auto rep = check_dual_pairing(decompose(t, 0.0), decompose(dual_monodromy(t), 0.0));
  EXPECT_EQ(rep.off_block_max, 0.0);
  EXPECT_TRUE(rep.ok);

  MonodromyTuple u({unipotent_elliptic()});
  auto rep_u = check_dual_pairing(decompose(u, 0.0), decompose(dual_monodromy(u), 0.0));
  EXPECT_EQ(rep_u.matched_pairs, 1);
  EXPECT_GT(rep_u.matched_min_singular, 0.5);
}

TEST(Dual, RandomPairingsAndTwistedConstancy) {
  std::mt19937_64 rng(23);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    // conjugated block-diagonal pair, non-unitary similarity
    auto gen = test_gen::random_commuting_tuple(4, 2, rng);
    Matrix p = Matrix::Identity(4, 4) + 0.3 * test_oracle::random_matrix(4, 4, rng);
    std::vector<Matrix> ts;
    for (const auto& x : gen.ts) ts.push_back(p * x * p.inverse());
    MonodromyTuple t(ts);
    auto dec = decompose(t, {0.0, 0.25});
    auto dual = decompose(dual_monodromy(t), {0.0, -0.25});
    auto rep = check_dual_pairing(dec, dual);
    EXPECT_TRUE(rep.ok) << rep.off_block_max;
    EXPECT_LE(rep.off_block_max, 1e-9);
    std::vector<LogPoint> ray;
    for (double x : {-0.1, -1.0, -4.0, -10.0}) ray.push_back({Complex(x, 0.3), Complex(x, -0.3)});
    EXPECT_LT(twisted_pairing_residual(dec, dual, ray), 1e-9);
    if (dec.blocks.size() >= 2) ++checked;
  }
  EXPECT_GT(checked, 5);
}
