#pragma once

// Diffusion geometry over a combined Laplacian: H = exp(−τ L_t), diffusion
// distances between vertices, diffusion maps, and the sum-of-diffusions score.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "commonvar/error.hpp"
#include "commonvar/laplacian.hpp"
#include "commonvar/linalg.hpp"
#include "commonvar/minimax.hpp"
#include "commonvar/rng.hpp"

namespace commonvar {

/// exp(−τ L_t) with its spectrum. mu is descending, mu_i = exp(−τ λ_i(L_t)),
/// and column i of phi is the matching eigenvector.
struct DiffusionOperator {
  double tau = 1.0;
  SimplexWeights t;
  SymMatrix matrix;
  Vector mu;
  Matrix phi;

  Index n() const noexcept { return matrix.n(); }
};

inline DiffusionOperator diffusion_operator(const CommonProblem& problem, const SimplexWeights& t,
                                            double tau) {
  require(std::isfinite(tau) && tau > 0.0, ErrorKind::InvalidInput, "tau must be positive");
  const auto eig = sym_eig(problem.combine(t));
  DiffusionOperator h;
  h.tau = tau;
  h.t = t;
  h.mu = (-tau * eig.eigenvalues.array()).exp().matrix();
  h.phi = eig.eigenvectors;
  h.matrix = SymMatrix(h.phi * h.mu.asDiagonal() * h.phi.transpose());
  return h;
}

inline DiffusionOperator diffusion_operator(std::span<const Laplacian> laplacians,
                                            const SimplexWeights& t, double tau) {
  return diffusion_operator(CommonProblem(laplacians), t, tau);
}

/// ‖H δ_i − H δ_j‖₂.
inline double diffusion_distance(const DiffusionOperator& h, Index i, Index j) {
  const Index n = h.n();
  require(i >= 0 && i < n && j >= 0 && j < n, ErrorKind::IndexOutOfRange,
          "vertex index out of range");
  return (h.matrix.mat().col(i) - h.matrix.mat().col(j)).norm();
}

/// All pairwise diffusion distances.
inline Matrix diffusion_distances(const DiffusionOperator& h) {
  const Index n = h.n();
  Matrix d = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      d(i, j) = d(j, i) = diffusion_distance(h, i, j);
    }
  }
  return d;
}

/// Row j holds (μ_1 φ_{1,j}, …, μ_d φ_{d,j}).
inline Matrix diffusion_map(const DiffusionOperator& h, Index d) {
  require(d >= 1 && d <= h.n() - 1, ErrorKind::InvalidInput,
          "diffusion map dimension must lie in [1, n-1]");
  return h.phi.middleCols(1, d) * h.mu.segment(1, d).asDiagonal();
}

/// e^τ ‖Σ_k P exp(−τ L_k / λ₁(L_k)) P‖ with P the projector onto 𝟏⊥. Each
/// term has norm e^{−τ}, so the score lies in [1, m]; it approaches m when
/// the graphs share their smoothest direction.
inline double sum_of_diffusions_score(std::span<const Laplacian> laplacians, double tau) {
  require(!laplacians.empty(), ErrorKind::InvalidInput, "need at least one Laplacian");
  require(std::isfinite(tau) && tau > 0.0, ErrorKind::InvalidInput, "tau must be positive");
  const Index n = laplacians.front().n();
  Matrix sum = Matrix::Zero(n, n);
  for (const auto& l : laplacians) {
    require(l.n() == n, ErrorKind::DimensionMismatch, "Laplacians must share the vertex count");
    const auto& spec = l.spectrum();
    const double lambda1 = spec.value(1);
    // Scaled by e^τ inside the exponent so large τ does not underflow the
    // dominant terms.
    const Vector weights =
        (-tau * (spec.eigenvalues.tail(n - 1).array() / lambda1 - 1.0)).exp().matrix();
    const auto vecs = spec.eigenvectors.rightCols(n - 1);
    sum.noalias() += vecs * weights.asDiagonal() * vecs.transpose();
  }
  return sym_eig(SymMatrix(std::move(sum))).eigenvalues.maxCoeff();
}

/// Largest Frobenius deviation, over `trials` random products
/// Π_j (I + (ε/s) X_{i_j}) with i_j uniform in {1..m} and
/// X_k = −(t_k / c_k) M_k, from the limit exp((ε/m) Σ_k X_k) = exp(−(ε/m) L_t).
inline double random_product_convergence_check(const CommonProblem& problem,
                                               const SimplexWeights& t, double eps, int s,
                                               int trials, std::uint64_t seed = 0) {
  require(eps > 0.0 && eps <= 0.5, ErrorKind::InvalidInput, "eps must lie in (0, 0.5]");
  require(s >= 100, ErrorKind::InvalidInput, "product length must be at least 100");
  require(trials >= 1, ErrorKind::InvalidInput, "need at least one trial");
  require(t.size() == problem.m(), ErrorKind::DimensionMismatch, "weights have the wrong size");
  const Index n = problem.n();
  const Index m = problem.m();

  std::vector<Matrix> factors;
  for (Index k = 0; k < m; ++k) {
    factors.push_back(Matrix::Identity(n, n) - (eps / s) * t[k] * problem.scaled(k));
  }
  const Matrix limit = sym_expm(problem.combine(t), -eps / static_cast<double>(m)).mat();

  Rng rng(seed, Stream::Trials);
  double worst = 0.0;
  Matrix product(n, n);
  for (int trial = 0; trial < trials; ++trial) {
    product.setIdentity();
    for (int j = 0; j < s; ++j) {
      product = product * factors[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(m)))];
    }
    worst = std::max(worst, (product - limit).norm());
  }
  return worst;
}

inline double random_product_convergence_check(std::span<const Laplacian> laplacians,
                                               const SimplexWeights& t, double eps, int s,
                                               int trials, std::uint64_t seed = 0) {
  return random_product_convergence_check(CommonProblem(laplacians), t, eps, s, trials, seed);
}

}  // namespace commonvar
