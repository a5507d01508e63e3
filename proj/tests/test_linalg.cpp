#include <gtest/gtest.h>

#include "commonvar/linalg.hpp"
#include "test_support.hpp"

using namespace commonvar;
using commonvar::testing::random_psd;
using commonvar::testing::random_symmetric;

namespace {

double det3(const Matrix& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

// exp(A) summed to a fixed number of Taylor terms.
Matrix taylor_expm(const Matrix& a, int terms) {
  Matrix sum = Matrix::Identity(a.rows(), a.cols());
  Matrix term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST(SymMatrix, SymmetrizesExactly) {
  Matrix m(2, 2);
  m << 1.0, 2.0, 4.0, 5.0;
  const SymMatrix s(m);
  EXPECT_EQ(s(0, 1), 3.0);
  EXPECT_EQ(s(1, 0), s(0, 1));
}

TEST(SymMatrix, RejectsNonSquareAndNonFinite) {
  try {
    SymMatrix bad(Matrix::Zero(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 1) = std::nan("");
  try {
    SymMatrix bad(nan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(SymEig, Identity) {
  const auto eig = sym_eig(SymMatrix::identity(3));
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(eig.value(i), 1.0, 1e-15);
  EXPECT_TRUE((eig.eigenvectors.transpose() * eig.eigenvectors).isApprox(Matrix::Identity(3, 3)));
}

TEST(SymEig, DiagonalGivesPermutedBasis) {
  Matrix d = Eigen::Vector3d(3, 1, 2).asDiagonal();
  const auto eig = sym_eig(SymMatrix(d));
  EXPECT_DOUBLE_EQ(eig.value(0), 1.0);
  EXPECT_DOUBLE_EQ(eig.value(1), 2.0);
  EXPECT_DOUBLE_EQ(eig.value(2), 3.0);
  // Sign convention makes the unit entry +1.
  EXPECT_NEAR(eig.eigenvectors(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(eig.eigenvectors(2, 1), 1.0, 1e-15);
  EXPECT_NEAR(eig.eigenvectors(0, 2), 1.0, 1e-15);
}

TEST(SymEig, PathGraphLaplacianMatchesCharacteristicPolynomial) {
  const Matrix l = commonvar::testing::path3_laplacian();
  // Oracle: the frozen values are roots of det(L - x I) and sum to the trace.
  const std::vector<double> expected{0.0, 1.0, 3.0};
  for (double x : expected) EXPECT_EQ(det3(l - x * Matrix::Identity(3, 3)), 0.0);
  EXPECT_EQ(expected[0] + expected[1] + expected[2], l.trace());

  const auto eig = sym_eig(SymMatrix(l));
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(eig.value(i), expected[static_cast<std::size_t>(i)], 1e-14);
}

TEST(SymEig, ResidualsOrthonormalityAndSigns) {
  Rng rng(11);
  for (Index n : {2, 5, 17, 50}) {
    const SymMatrix m = random_symmetric(n, rng);
    const auto eig = sym_eig(m);
    for (Index i = 0; i < n; ++i) {
      const double r = (m.mat() * eig.vector(i) - eig.value(i) * eig.vector(i)).norm();
      EXPECT_LE(r, kDefaultEigTol * std::max(1.0, std::abs(eig.value(i))));
      if (i > 0) {
        EXPECT_LE(eig.value(i - 1), eig.value(i));
      }
      Index arg = 0;
      eig.vector(i).cwiseAbs().maxCoeff(&arg);
      EXPECT_GE(eig.eigenvectors(arg, i), 0.0);
    }
    const Matrix gram = eig.eigenvectors.transpose() * eig.eigenvectors;
    EXPECT_LE((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), kDefaultEigTol);
  }
}

TEST(SymEig, ReconstructionProperty) {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(49));
    const SymMatrix m = random_symmetric(n, rng);
    const auto eig = sym_eig(m);
    const Matrix back =
        eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
    EXPECT_LE((back - m.mat()).norm(), static_cast<double>(n) * kDefaultEigTol * m.mat().norm());
  }
}

TEST(SymEig, DeterministicBitForBit) {
  Rng rng(13);
  const SymMatrix m = random_symmetric(30, rng);
  const auto a = sym_eig(m);
  const auto b = sym_eig(m);
  EXPECT_TRUE(a.eigenvalues == b.eigenvalues);
  EXPECT_TRUE(a.eigenvectors == b.eigenvectors);
}

TEST(SymExpm, ZeroExponentIsIdentity) {
  Rng rng(14);
  const SymMatrix m = random_symmetric(6, rng);
  EXPECT_LE((sym_expm(m, 0.0).mat() - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SymExpm, DiagonalCase) {
  Matrix d = Matrix::Zero(2, 2);
  d(1, 1) = std::log(2.0);
  const Matrix e = sym_expm(SymMatrix(d), -1.0).mat();
  EXPECT_NEAR(e(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(e(1, 1), 0.5, 1e-15);
  EXPECT_NEAR(e(0, 1), 0.0, 1e-15);
}

TEST(SymExpm, MatchesTaylorSeries) {
  Rng rng(15);
  const SymMatrix l = random_psd(5, rng);
  const double tau = 0.7;
  const Matrix oracle = taylor_expm(-tau * l.mat(), 30);
  const SymMatrix h = sym_expm(l, -tau);
  EXPECT_LE((h.mat() - oracle).cwiseAbs().maxCoeff(), 1e-8);

  const auto lam = sym_eig(l);
  const auto mu = sym_eig(h);
  for (Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(mu.value(4 - i), std::exp(-tau * lam.value(i)), 1e-8);
  }
}

TEST(SymExpm, SpectralMappingReversesOrder) {
  Rng rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const SymMatrix m = random_psd(12, rng);
    const double tau = rng.uniform(0.1, 3.0);
    const auto lam = sym_eig(m);
    const auto mu = sym_eig(sym_expm(m, -tau));
    for (Index i = 0; i < 12; ++i) {
      EXPECT_NEAR(mu.value(11 - i), std::exp(-tau * lam.value(i)), 1e-10);
    }
  }
}

TEST(ProjectSimplex, FeasiblePointIsFixed) {
  const auto t = project_simplex(Eigen::Vector2d(0.3, 0.7));
  EXPECT_NEAR(t[0], 0.3, 1e-15);
  EXPECT_NEAR(t[1], 0.7, 1e-15);
}

TEST(ProjectSimplex, SaturatesAtVertex) {
  const auto t = project_simplex(Eigen::Vector2d(2.0, 0.0));
  EXPECT_DOUBLE_EQ(t[0], 1.0);
  EXPECT_DOUBLE_EQ(t[1], 0.0);
}

TEST(ProjectSimplex, SymmetricPointAgainstGridSearch) {
  const Vector v = Eigen::Vector3d(0.5, 0.5, 0.5);
  // Brute force over a grid on the simplex.
  const int steps = 300;
  double best = INFINITY;
  Vector best_u;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; i + j <= steps; ++j) {
      const Vector u = Eigen::Vector3d(i, j, steps - i - j) / steps;
      const double d = (u - v).norm();
      if (d < best) {
        best = d;
        best_u = u;
      }
    }
  }
  EXPECT_LE((best_u - Vector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1.0 / steps);

  const auto t = project_simplex(v);
  for (Index k = 0; k < 3; ++k) EXPECT_NEAR(t[k], 1.0 / 3.0, 1e-15);
  EXPECT_LE((t.values() - v).norm(), best + 1e-15);
}

TEST(ProjectSimplex, OptimalAgainstRandomFeasiblePoints) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.below(6));
    Vector v(m);
    for (Index k = 0; k < m; ++k) v(k) = 3.0 * rng.normal();
    const auto t = project_simplex(v);
    EXPECT_NEAR(t.values().sum(), 1.0, 1e-12);
    EXPECT_GE(t.values().minCoeff(), 0.0);
    const double d = (t.values() - v).norm();
    for (int s = 0; s < 1000; ++s) {
      const Vector u = commonvar::testing::random_simplex_point(m, rng);
      EXPECT_LE(d, (u - v).norm() + 1e-12);
    }
  }
}

TEST(SimplexWeights, Validation) {
  EXPECT_THROW(SimplexWeights({0.5, 0.6}), Error);
  EXPECT_THROW(SimplexWeights({-0.1, 1.1}), Error);
  EXPECT_NO_THROW(SimplexWeights({0.25, 0.75}));
  EXPECT_EQ(SimplexWeights::uniform(4)[2], 0.25);
}
