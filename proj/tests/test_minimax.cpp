#include <gtest/gtest.h>

#include <cmath>

#include "commonvar/minimax.hpp"
#include "commonvar/stats.hpp"
#include "test_support.hpp"

using namespace commonvar;
using namespace commonvar::testing;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::Io;
}

Laplacian complete3() {
  return bistochastic_laplacian(Graph(SymMatrix(Matrix::Ones(3, 3))));
}

std::vector<Laplacian> rotations_pair(std::uint64_t seed) {
  const Dataset ds = gen_rotations_2d(250, 6, seed);
  std::vector<Laplacian> ls;
  for (const auto& g : ds.graphs) ls.push_back(bistochastic_laplacian(g));
  return ls;
}

Laplacian standard_laplacian(const Graph& g) {
  return Laplacian::from_matrix(classic_laplacians(g).standard, NormKind::first());
}

}  // namespace

TEST(Combine, SingleLaplacianHasUnitLambda1) {
  Rng rng(41);
  const auto ls = random_laplacians(9, 1, rng);
  const SymMatrix lt = combine(ls, SimplexWeights({1.0}));
  EXPECT_NEAR(lambda1_pair(lt).lambda1, 1.0, 1e-10);
}

TEST(Combine, IdenticalLaplacians) {
  Rng rng(42);
  const auto one = random_laplacians(8, 1, rng);
  const std::vector<Laplacian> ls{one[0], one[0], one[0]};
  for (int trial = 0; trial < 5; ++trial) {
    const SimplexWeights t(random_simplex_point(3, rng));
    EXPECT_NEAR(lambda1_pair(combine(ls, t)).lambda1, 1.0, 1e-10);
  }
}

TEST(Combine, MatchesHandSum) {
  Rng rng(43);
  const auto ls = random_laplacians(7, 2, rng);
  const Matrix oracle = 0.5 * ls[0].matrix().mat() / ls[0].lambda1() +
                        0.5 * ls[1].matrix().mat() / ls[1].lambda1();
  const Matrix lt = combine(ls, SimplexWeights({0.5, 0.5})).mat();
  EXPECT_LE((lt - oracle).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Combine, DimensionMismatch) {
  Rng rng(44);
  std::vector<Laplacian> ls{random_laplacians(5, 1, rng)[0], random_laplacians(6, 1, rng)[0]};
  EXPECT_EQ(kind_of([&] { CommonProblem p(ls); }), ErrorKind::DimensionMismatch);
  const auto ok = random_laplacians(5, 2, rng);
  EXPECT_EQ(kind_of([&] { combine(ok, SimplexWeights::uniform(3)); }), ErrorKind::DimensionMismatch);
}

TEST(Lambda1Pair, PathOnThreeVertices) {
  const auto p = lambda1_pair(SymMatrix(path3_laplacian()));
  EXPECT_NEAR(p.lambda1, 1.0, 1e-12);
  EXPECT_NEAR(p.lambda2, 3.0, 1e-12);
  const Vector expected = Eigen::Vector3d(1, 0, -1) / std::sqrt(2.0);
  EXPECT_LE((p.psi1 - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(p.psi1.dot(path3_laplacian() * p.psi1), p.lambda1, 1e-10);
}

TEST(Lambda1Pair, CompleteGraphIsDegenerate) {
  const auto p = lambda1_pair(complete3().matrix());
  EXPECT_NEAR(p.lambda1, 1.0, 1e-12);
  EXPECT_NEAR(p.lambda2, 1.0, 1e-12);
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(45);
  const auto ls = random_laplacians(8, 2, rng);
  const Vector t = Eigen::Vector2d(0.3, 0.7);
  const Vector g = grad_lambda1(ls, SimplexWeights(t));
  const double h = 1e-6;
  const Vector dir = Eigen::Vector2d(1, -1);
  const double fd = (lambda1_at(ls, t + h * dir) - lambda1_at(ls, t - h * dir)) / (2 * h);
  EXPECT_NEAR(g(0), fd, 1e-5 * std::max(1.0, std::abs(fd)));
}

TEST(Gradient, MatchesCentralDifferencesOnRandomInstances) {
  Rng rng(46);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.below(3));
    const auto ls = random_laplacians(10, m, rng);
    const Vector t = random_simplex_point(m, rng);
    const auto ev = evaluate(CommonProblem(ls), SimplexWeights(t));
    if (ev.spectral_gap() <= 1e-3 || t.minCoeff() < 1e-5) continue;
    const Vector g = grad_lambda1(ls, SimplexWeights(t));
    const double h = 1e-6;
    for (Index j = 0; j + 1 < m; ++j) {
      Vector dir = Vector::Zero(m);
      dir(j) = 1.0;
      dir(m - 1) = -1.0;
      const double fd = (lambda1_at(ls, t + h * dir) - lambda1_at(ls, t - h * dir)) / (2 * h);
      EXPECT_NEAR(g(j), fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Gradient, VanishesForIdenticalGraphs) {
  Rng rng(47);
  const auto one = random_laplacians(8, 1, rng);
  const std::vector<Laplacian> ls{one[0], one[0]};
  const Vector g = grad_lambda1(ls, SimplexWeights({0.2, 0.8}));
  EXPECT_LE(g.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gradient, DegenerateEigenvalueReported) {
  const std::vector<Laplacian> ls{complete3(), complete3()};
  EXPECT_EQ(kind_of([&] { grad_lambda1(ls, SimplexWeights::uniform(2)); }),
            ErrorKind::DegenerateEigenvalue);
}

TEST(Maximize, IdenticalGraphs) {
  Rng rng(48);
  const auto one = random_laplacians(10, 1, rng);
  const std::vector<Laplacian> ls{one[0], one[0]};
  const auto r = maximize_lambda1(ls);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.lambda1, 1.0, 1e-10);
  EXPECT_LE(std::abs(r.gap), 1e-10);
}

TEST(Maximize, SingleGraphReturnsDirectly) {
  Rng rng(49);
  const auto ls = random_laplacians(10, 1, rng);
  const auto r = maximize_lambda1(ls);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.lambda1, 1.0, 1e-10);
  EXPECT_NEAR(r.upper, 1.0, 1e-10);
}

TEST(Maximize, RandomInstancesCertifyAndClimb) {
  Rng rng(50);
  for (int trial = 0; trial < 10; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.below(3));
    const auto ls = random_laplacians(20, m, rng);
    const auto r = maximize_lambda1(ls);
    EXPECT_TRUE(r.converged) << "trial " << trial << " gap " << r.gap;
    EXPECT_GE(r.gap, -1e-10);
    EXPECT_LE(r.lambda1, r.upper + 1e-10);
    EXPECT_NEAR(r.psi1.sum(), 0.0, 1e-8);
    EXPECT_NEAR(r.psi1.norm(), 1.0, 1e-8);
    EXPECT_GE(r.scores.minCoeff(), 0.0);
    for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
      EXPECT_GE(r.trajectory[i].lambda1, r.trajectory[i - 1].lambda1 - 1e-12);
    }
    // Σ t_k s_k = λ₁ and s_k ≤ λ₁ + gap, so each active score sits within
    // gap·(1 − t_k)/t_k below λ₁.
    for (Index k = 0; k < m; ++k) {
      const double tk = r.t_star[k];
      EXPECT_LE(r.scores(k), r.lambda1 + r.gap + 1e-12);
      if (tk > 1e-8) {
        EXPECT_GE(r.scores(k), r.lambda1 - r.gap * (1 - tk) / tk - 1e-10);
      }
    }
  }
}

TEST(Maximize, MaxIterationsReturnsBestSoFar) {
  Rng rng(51);
  const auto ls = random_laplacians(20, 3, rng);
  MaximizeOptions opts;
  opts.max_iter = 1;
  opts.gap_target = 1e-14;
  const auto r = maximize_lambda1(ls, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.iterations, 1);
  EXPECT_GE(r.lambda1, r.trajectory.front().lambda1);
}

TEST(Maximize, RotationsInteriorOptimum) {
  const auto ls = rotations_pair(1);
  const auto r = maximize_lambda1(ls);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.gap, 1e-6);
  EXPECT_GT(r.t_star[0], 0.05);
  EXPECT_GT(r.t_star[1], 0.05);
  const auto eq = equioscillation_check(r, 1e-6);
  EXPECT_TRUE(eq.all);
  EXPECT_TRUE(eq.active[0] && eq.active[1]);
}

TEST(Maximize, BarbellBoundaryOptimum) {
  const Dataset ds = gen_barbell(250, 6, 2);
  std::vector<Laplacian> ls;
  for (const auto& g : ds.graphs) ls.push_back(bistochastic_laplacian(g));
  const auto r = maximize_lambda1(ls);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.t_star[0], 1e-8);
  const auto eq = equioscillation_check(r, 1e-6);
  EXPECT_TRUE(eq.all);
  EXPECT_FALSE(eq.active[0]);
  EXPECT_LE(r.scores(0), r.lambda1 + 1e-6);
}

TEST(DualityGap, SingleAndIdenticalGraphs) {
  Rng rng(52);
  const auto one = random_laplacians(9, 1, rng);
  const auto c1 = duality_gap(one, SimplexWeights({1.0}), one[0].spectrum().vector(1));
  EXPECT_NEAR(c1.lower, 1.0, 1e-10);
  EXPECT_NEAR(c1.upper, 1.0, 1e-10);
  EXPECT_NEAR(c1.gap, 0.0, 1e-10);
  const std::vector<Laplacian> same{one[0], one[0]};
  const auto c2 = duality_gap(same, SimplexWeights({0.7, 0.3}), one[0].spectrum().vector(1));
  EXPECT_NEAR(c2.gap, 0.0, 1e-10);
}

TEST(DualityGap, MatchesResult) {
  Rng rng(53);
  const auto ls = random_laplacians(15, 3, rng);
  const auto r = maximize_lambda1(ls);
  const auto c = duality_gap(ls, r.t_star, r.psi1);
  EXPECT_NEAR(c.lower, r.lambda1, 1e-12);
  EXPECT_NEAR(c.upper, r.upper, 1e-12);
  EXPECT_EQ(kind_of([&] { duality_gap(ls, r.t_star, Vector::Ones(15)); }), ErrorKind::InvalidInput);
}

TEST(Equioscillation, SingleGraphPasses) {
  Rng rng(54);
  const auto r = maximize_lambda1(random_laplacians(8, 1, rng));
  EXPECT_TRUE(equioscillation_check(r, 1e-9).all);
}

TEST(Properties, Concavity) {
  Rng rng(55);
  const auto ls = random_laplacians(12, 3, rng);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector a = random_simplex_point(3, rng);
    const Vector b = random_simplex_point(3, rng);
    const double theta = rng.uniform();
    const double mid = lambda1_at(ls, theta * a + (1 - theta) * b);
    EXPECT_GE(mid, theta * lambda1_at(ls, a) + (1 - theta) * lambda1_at(ls, b) - 1e-9);
  }
}

TEST(Properties, Sandwich) {
  Rng rng(56);
  const auto ls = random_laplacians(12, 3, rng);
  const CommonProblem problem(ls);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ev = evaluate(problem, SimplexWeights(random_simplex_point(3, rng)));
    EXPECT_LE(ev.lambda1, ev.upper() + 1e-10);
  }
}

TEST(Properties, StationarityMeansEqualScores) {
  Rng rng(57);
  for (int trial = 0; trial < 5; ++trial) {
    const auto ls = random_laplacians(16, 2, rng);
    MaximizeOptions opts;
    opts.gap_target = 1e-11;
    const auto r = maximize_lambda1(ls, opts);
    if (r.t_star[0] <= 1e-8 || r.t_star[1] <= 1e-8) continue;
    const Vector g = grad_lambda1(ls, r.t_star);
    if (g.cwiseAbs().maxCoeff() <= 1e-9) {
      EXPECT_LE(r.scores.maxCoeff() - r.scores.minCoeff(), 1e-7);
    }
    // Conversely the certified gap bounds the score spread.
    EXPECT_LE(r.scores.maxCoeff() - r.lambda1, 1e-11 + 1e-12);
  }
}

TEST(Properties, ScaleRobustness) {
  Rng rng(58);
  const Graph g1 = random_graph(14, rng);
  const Graph g2 = random_graph(14, rng);
  const Graph g2_scaled(SymMatrix(3.7 * g2.adjacency().mat()));
  const std::vector<Laplacian> base{standard_laplacian(g1), standard_laplacian(g2)};
  const std::vector<Laplacian> scaled{standard_laplacian(g1), standard_laplacian(g2_scaled)};
  const auto a = maximize_lambda1(base);
  const auto b = maximize_lambda1(scaled);
  EXPECT_LE((a.t_star.values() - b.t_star.values()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(a.lambda1, b.lambda1, 1e-10);
  EXPECT_NEAR(a.gap, b.gap, 1e-10);
  EXPECT_LE((a.psi1 - b.psi1).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Properties, OptimumMinimisesTheMaxScore) {
  Rng rng(59);
  const auto ls = random_laplacians(18, 3, rng);
  const CommonProblem problem(ls);
  const auto r = maximize_lambda1(problem);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector x = random_unit_mean_zero(18, rng);
    EXPECT_LE(r.upper, problem.scores(x).maxCoeff() + 1e-9);
  }
}

TEST(ConstraintBasis, Orthonormal) {
  Rng rng(60);
  const Matrix extra = random_matrix(10, 3, rng);
  const Matrix q = constraint_basis(10, extra);
  ASSERT_EQ(q.cols(), 4);
  EXPECT_LE((q.transpose() * q - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((q.col(0).array() - 1.0 / std::sqrt(10.0)).abs().maxCoeff(), 1e-15);
}

TEST(CommonBasis, FirstLevelMatchesMaximize) {
  Rng rng(61);
  const auto ls = random_laplacians(15, 2, rng);
  const auto basis = common_basis(ls, 1);
  const auto r = maximize_lambda1(ls);
  EXPECT_EQ(basis.vectors.col(0), r.psi1);
  EXPECT_EQ(basis.levels[0].t_star.values(), r.t_star.values());
}

TEST(CommonBasis, IdenticalGraphsGiveEigenvectors) {
  Rng rng(62);
  const auto one = random_laplacians(12, 1, rng);
  const std::vector<Laplacian> ls{one[0], one[0]};
  const auto basis = common_basis(ls, 3);
  const auto& e = one[0].spectrum();
  for (Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(basis.levels[static_cast<std::size_t>(j)].lambda1,
                e.value(j + 1) / e.value(1), 1e-9);
    EXPECT_NEAR(std::abs(basis.vectors.col(j).dot(e.vector(j + 1))), 1.0, 1e-8);
  }
}

TEST(CommonBasis, RotationsSecondVectorIsOrthogonal) {
  const auto ls = rotations_pair(2);
  const auto basis = common_basis(ls, 2);
  ASSERT_EQ(basis.size(), 2);
  EXPECT_LE(std::abs(basis.vectors.col(0).dot(basis.vectors.col(1))), 1e-8);
  for (Index j = 0; j < 2; ++j) {
    EXPECT_LE(std::abs(basis.vectors.col(j).sum()), 1e-8);
    EXPECT_LE(basis.levels[static_cast<std::size_t>(j)].gap, 1e-6);
  }
  EXPECT_EQ(kind_of([&] { common_basis(ls, 249); }), ErrorKind::InvalidInput);
}

TEST(Stats, SpearmanOracle) {
  const Vector a = Eigen::Vector4d(1, 2, 3, 4);
  const Vector b = Eigen::Vector4d(10, 20, 25, 100);
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-15);
  EXPECT_NEAR(spearman(a, -b), -1.0, 1e-15);
  const Vector tied = Eigen::Vector4d(1, 1, 2, 3);
  EXPECT_EQ(average_ranks(tied), Eigen::Vector4d(0.5, 0.5, 2, 3));
}
