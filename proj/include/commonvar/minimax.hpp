#pragma once

// Maximisation of the second-smallest eigenvalue of a simplex-weighted sum of
// normalised Laplacians. The maximiser's eigenvector is the common variable:
// the mean-zero unit vector minimising the largest per-graph smoothness
// score. Every candidate is certified by the bracket
//
//   λ₁(L_t) ≤ min_x max_k s_k(x) ≤ max_k s_k(ψ₁(L_t)),
//
// whose width is the duality gap.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "commonvar/error.hpp"
#include "commonvar/laplacian.hpp"
#include "commonvar/linalg.hpp"

namespace commonvar {

/// Orthonormal basis of span{𝟏, extra...} as columns, 𝟏/√n first.
inline Matrix constraint_basis(Index n, const Matrix& extra = Matrix()) {
  Matrix basis(n, 1 + extra.cols());
  basis.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  for (Index c = 0; c < extra.cols(); ++c) {
    require(extra.rows() == n, ErrorKind::DimensionMismatch, "constraint vector length differs from n");
    Vector v = extra.col(c);
    // Two Gram-Schmidt passes keep the basis orthonormal to rounding.
    for (int pass = 0; pass < 2; ++pass) {
      v -= basis.leftCols(c + 1) * (basis.leftCols(c + 1).transpose() * v);
    }
    const double norm = v.norm();
    require(norm > 1e-8, ErrorKind::InvalidInput, "constraint vectors are linearly dependent");
    basis.col(c + 1) = v / norm;
  }
  return basis;
}

/// The normalised forms S_k = M_k / c_k of m Laplacians on shared vertices,
/// optionally compressed onto the orthogonal complement of a constraint
/// subspace (always containing 𝟏).
class CommonProblem {
 public:
  explicit CommonProblem(std::span<const Laplacian> laplacians) {
    require(!laplacians.empty(), ErrorKind::InvalidInput, "need at least one Laplacian");
    n_ = laplacians.front().n();
    for (const auto& l : laplacians) {
      require(l.n() == n_, ErrorKind::DimensionMismatch,
              "Laplacians must share the vertex count");
      scaled_.push_back(l.form().mat() / l.norm_constant());
    }
    constraints_ = constraint_basis(n_);
  }

  /// Conjugates every form with the projector onto the complement of
  /// span{𝟏, vectors}.
  CommonProblem restricted(const Matrix& vectors) const {
    CommonProblem out = *this;
    out.constraints_ = constraint_basis(n_, vectors);
    const Matrix p =
        Matrix::Identity(n_, n_) - out.constraints_ * out.constraints_.transpose();
    for (auto& s : out.scaled_) s = SymMatrix(p * s * p).mat();
    return out;
  }

  Index n() const noexcept { return n_; }
  Index m() const noexcept { return static_cast<Index>(scaled_.size()); }
  /// Number of leading (zero) eigenvalues excluded from the search space.
  Index kernel_dim() const noexcept { return constraints_.cols(); }
  const Matrix& constraints() const noexcept { return constraints_; }
  const Matrix& scaled(Index k) const { return scaled_[static_cast<std::size_t>(k)]; }

  SymMatrix combine(const SimplexWeights& t) const {
    require(t.size() == m(), ErrorKind::DimensionMismatch,
            "weights have " + std::to_string(t.size()) + " entries for " + std::to_string(m()) +
                " graphs");
    Matrix sum = Matrix::Zero(n_, n_);
    for (Index k = 0; k < m(); ++k) {
      if (t[k] != 0.0) sum += t[k] * scaled(k);
    }
    return SymMatrix(std::move(sum));
  }

  /// xᵀ S_k x for every graph.
  Vector scores(const Vector& x) const {
    require(x.size() == n_, ErrorKind::DimensionMismatch, "vector length differs from n");
    Vector s(m());
    for (Index k = 0; k < m(); ++k) s(k) = x.dot(scaled(k) * x);
    return s;
  }

  /// Removes constraint components, renormalises and fixes the sign.
  Vector clean(Vector x) const {
    x -= constraints_ * (constraints_.transpose() * x);
    x.normalize();
    detail::normalize_sign(x);
    return x;
  }

 private:
  Index n_ = 0;
  std::vector<Matrix> scaled_;
  Matrix constraints_;
};

/// Σ t_k M_k / c_k.
inline SymMatrix combine(std::span<const Laplacian> laplacians, const SimplexWeights& t) {
  return CommonProblem(laplacians).combine(t);
}

struct Lambda1Pair {
  double lambda1 = 0.0;
  Vector psi1;
  double lambda2 = 0.0;

  double spectral_gap() const noexcept { return lambda2 - lambda1; }
};

/// Second and third smallest eigenvalues of a combined Laplacian, with the
/// eigenvector of the second. `kernel` leading eigenvalues are skipped (1 for
/// an unrestricted problem).
inline Lambda1Pair lambda1_pair(const SymMatrix& lt, Index kernel = 1,
                                double eig_tol = kDefaultEigTol) {
  require(lt.n() >= kernel + 2, ErrorKind::InvalidInput,
          "matrix too small for the requested eigenpair");
  const auto eig = sym_eig(lt, eig_tol);
  Lambda1Pair out;
  out.lambda1 = eig.value(kernel);
  out.lambda2 = eig.value(kernel + 1);
  Vector psi = eig.vector(kernel);
  const double n = static_cast<double>(psi.size());
  psi.array() -= psi.sum() / n;
  psi.normalize();
  detail::normalize_sign(psi);
  out.psi1 = std::move(psi);
  return out;
}

/// Spectral data of L_t that the optimiser consumes at every iterate.
struct Evaluation {
  SimplexWeights t;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Vector psi1;
  Vector scores;

  double upper() const { return scores.maxCoeff(); }
  double gap() const { return upper() - lambda1; }
  double spectral_gap() const { return lambda2 - lambda1; }
};

inline Evaluation evaluate(const CommonProblem& problem, const SimplexWeights& t,
                           double eig_tol = kDefaultEigTol) {
  const Index kernel = problem.kernel_dim();
  require(problem.n() >= kernel + 2, ErrorKind::InvalidInput,
          "too few vertices for the constrained problem");
  const auto eig = sym_eig(problem.combine(t), eig_tol);
  Evaluation ev{t, eig.value(kernel), eig.value(kernel + 1), {}, {}};
  ev.psi1 = problem.clean(eig.vector(kernel));
  ev.scores = problem.scores(ev.psi1);
  return ev;
}

inline constexpr double kGapTol = 1e-8;

/// Partial derivatives of λ₁(L_t) in the free coordinates t_1..t_{m-1}, with
/// t_m = 1 − Σ t_j eliminated: component j is s_j(ψ₁) − s_m(ψ₁). Throws
/// DegenerateEigenvalue when λ₁ is not separated from λ₂ by gap_tol.
inline Vector grad_lambda1(const CommonProblem& problem, const SimplexWeights& t,
                           double gap_tol = kGapTol) {
  const auto ev = evaluate(problem, t);
  require(ev.spectral_gap() > gap_tol, ErrorKind::DegenerateEigenvalue,
          "lambda_1 is not simple (spectral gap " + std::to_string(ev.spectral_gap()) + ")");
  const Index m = problem.m();
  return ev.scores.head(m - 1).array() - ev.scores(m - 1);
}

inline Vector grad_lambda1(std::span<const Laplacian> laplacians, const SimplexWeights& t,
                           double gap_tol = kGapTol) {
  return grad_lambda1(CommonProblem(laplacians), t, gap_tol);
}

struct Certificate {
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
};

/// Brackets the minimax score between λ₁(L_t) and max_k s_k(psi1).
inline Certificate duality_gap(const CommonProblem& problem, const SimplexWeights& t,
                               const Vector& psi1) {
  require(psi1.size() == problem.n(), ErrorKind::DimensionMismatch,
          "vector length differs from n");
  require_in_unit_sphere(psi1);
  const auto eig = sym_eig(problem.combine(t));
  Certificate c;
  c.lower = eig.value(problem.kernel_dim());
  c.upper = problem.scores(psi1).maxCoeff();
  c.gap = c.upper - c.lower;
  return c;
}

inline Certificate duality_gap(std::span<const Laplacian> laplacians, const SimplexWeights& t,
                               const Vector& psi1) {
  return duality_gap(CommonProblem(laplacians), t, psi1);
}

struct TrajectoryPoint {
  Vector t;
  double lambda1 = 0.0;
  double gap = 0.0;
};

struct MinimaxResult {
  SimplexWeights t_star;
  double lambda1 = 0.0;
  Vector psi1;
  Vector scores;
  double upper = 0.0;
  double gap = 0.0;
  double spectral_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  // Iterates at which λ₁ was not separated from λ₂ by gap_tol; the step there
  // used a supergradient from one eigenvector of the cluster.
  int degenerate_events = 0;
  std::optional<SimplexWeights> last_degenerate_t;
  double last_degenerate_gap = 0.0;
  std::vector<TrajectoryPoint> trajectory;
};

struct MaximizeOptions {
  std::optional<SimplexWeights> init;  // uniform weights when empty
  double step = 0.0;                   // first trial step; 0 picks one from the gradient
  int max_iter = 5000;
  double gap_target = 1e-6;
  double gap_tol = kGapTol;
  double armijo = 1e-4;
  int max_halvings = 60;
  bool record_trajectory = true;
};

namespace detail {

inline MinimaxResult to_result(const Evaluation& ev, int iterations, bool converged) {
  MinimaxResult r;
  r.t_star = ev.t;
  r.lambda1 = ev.lambda1;
  r.psi1 = ev.psi1;
  r.scores = ev.scores;
  r.upper = ev.upper();
  r.gap = ev.gap();
  r.spectral_gap = ev.spectral_gap();
  r.iterations = iterations;
  r.converged = converged;
  return r;
}

}  // namespace detail

/// Projected supergradient ascent of λ₁(L_t) over the simplex with
/// Barzilai-Borwein trial steps and backtracking. A trial step is accepted on
/// the Armijo condition or when the supergradient at the trial point still
/// points along the step. Stops once the
/// certified gap reaches gap_target; otherwise returns the best iterate with
/// converged = false.
inline MinimaxResult maximize_lambda1(const CommonProblem& problem,
                                      const MaximizeOptions& opts = {}) {
  const Index m = problem.m();
  require(opts.gap_target > 0.0, ErrorKind::InvalidInput, "gap target must be positive");
  SimplexWeights t0 = opts.init.value_or(SimplexWeights::uniform(m));
  require(t0.size() == m, ErrorKind::DimensionMismatch, "initial weights have the wrong size");

  Evaluation ev = evaluate(problem, t0);
  std::vector<TrajectoryPoint> trajectory;
  int degenerate = 0;
  std::optional<SimplexWeights> degenerate_t;
  double degenerate_gap = 0.0;
  auto record = [&](const Evaluation& e) {
    // Weak duality holds for every iterate; a violation means the spectral
    // data is corrupt.
    require(e.lambda1 <= e.upper() + 1e-10, ErrorKind::NonConvergence,
            "lower bound exceeds upper bound");
    if (opts.record_trajectory) trajectory.push_back({e.t.values(), e.lambda1, e.gap()});
    if (e.spectral_gap() <= opts.gap_tol) {
      ++degenerate;
      degenerate_t = e.t;
      degenerate_gap = e.spectral_gap();
    }
  };
  record(ev);

  auto finish = [&](const Evaluation& e, int it, bool converged) {
    MinimaxResult r = detail::to_result(e, it, converged);
    r.degenerate_events = degenerate;
    r.last_degenerate_t = degenerate_t;
    r.last_degenerate_gap = degenerate_gap;
    r.trajectory = std::move(trajectory);
    return r;
  };

  if (m == 1) return finish(ev, 0, ev.gap() <= opts.gap_target);

  auto centered = [](const Vector& g) -> Vector { return g.array() - g.mean(); };

  double step = opts.step;
  if (!(step > 0.0)) {
    const double spread = centered(ev.scores).cwiseAbs().maxCoeff();
    step = spread > 0.0 ? 0.05 / spread : 1.0;
  }

  for (int it = 1; it <= opts.max_iter; ++it) {
    if (ev.gap() <= opts.gap_target) return finish(ev, it - 1, true);

    const Vector& g = ev.scores;
    bool accepted = false;
    Evaluation next = ev;
    double trial = step;
    for (int h = 0; h <= opts.max_halvings; ++h, trial *= 0.5) {
      SimplexWeights candidate = project_simplex(ev.t.values() + trial * g);
      const Vector delta = candidate.values() - ev.t.values();
      if (delta.cwiseAbs().maxCoeff() == 0.0) break;
      Evaluation trial_ev = evaluate(problem, candidate);
      // Concavity gives λ₁(t + δ) ≥ λ₁(t) + g(t + δ)ᵀδ for any supergradient
      // at the trial point, so a nonnegative inner product certifies ascent
      // even when the increase is below eigenvalue round-off.
      const bool sufficient = trial_ev.lambda1 >= ev.lambda1 + opts.armijo * g.dot(delta);
      const bool certified_ascent = trial_ev.scores.dot(delta) >= 0.0;
      if (sufficient || certified_ascent) {
        next = std::move(trial_ev);
        accepted = true;
        break;
      }
    }
    if (!accepted) return finish(ev, it - 1, false);

    // Barzilai-Borwein length from the change in supergradient; λ₁ is
    // concave so −sᵀy ≥ 0 along accepted steps.
    const Vector s = next.t.values() - ev.t.values();
    const Vector y = centered(next.scores) - centered(ev.scores);
    const double curvature = -s.dot(y);
    step = curvature > 0.0 ? s.squaredNorm() / curvature : 2.0 * trial;

    ev = std::move(next);
    record(ev);
    if (it == opts.max_iter) return finish(ev, it, ev.gap() <= opts.gap_target);
  }
  return finish(ev, opts.max_iter, ev.gap() <= opts.gap_target);
}

inline MinimaxResult maximize_lambda1(std::span<const Laplacian> laplacians,
                                      const MaximizeOptions& opts = {}) {
  return maximize_lambda1(CommonProblem(laplacians), opts);
}

struct EquioscillationReport {
  std::vector<bool> pass;
  std::vector<bool> active;  // t*_k above the boundary tolerance
  bool all = true;
};

/// Optimality conditions at t*: graphs with positive weight score exactly λ₁,
/// graphs with zero weight score at most λ₁.
inline EquioscillationReport equioscillation_check(const MinimaxResult& result,
                                                   double score_tol, double weight_tol = 1e-8) {
  EquioscillationReport report;
  for (Index k = 0; k < result.scores.size(); ++k) {
    const bool active = result.t_star[k] > weight_tol;
    const double diff = result.scores(k) - result.lambda1;
    const bool ok = active ? std::abs(diff) <= score_tol : diff <= score_tol;
    report.active.push_back(active);
    report.pass.push_back(ok);
    report.all = report.all && ok;
  }
  return report;
}

struct CommonBasis {
  Matrix vectors;  // n × K, column j is ψ_{j+1}
  std::vector<MinimaxResult> levels;

  Index size() const noexcept { return vectors.cols(); }
};

/// Successive common variables: level j solves the minimax problem on the
/// orthogonal complement of 𝟏 and the j−1 vectors already found.
inline CommonBasis common_basis(const CommonProblem& problem, Index count,
                                const MaximizeOptions& opts = {}) {
  const Index n = problem.n();
  require(count >= 1 && count <= n - 2, ErrorKind::InvalidInput,
          "basis size must lie in [1, n-2]");
  CommonBasis basis;
  basis.vectors.resize(n, count);
  for (Index level = 0; level < count; ++level) {
    const CommonProblem sub =
        level == 0 ? problem : problem.restricted(basis.vectors.leftCols(level));
    try {
      basis.levels.push_back(maximize_lambda1(sub, opts));
    } catch (const Error& e) {
      throw Error(e.kind(), "basis level " + std::to_string(level + 1) + ": " + e.what());
    }
    basis.vectors.col(level) = basis.levels.back().psi1;
  }
  return basis;
}

inline CommonBasis common_basis(std::span<const Laplacian> laplacians, Index count,
                                const MaximizeOptions& opts = {}) {
  return common_basis(CommonProblem(laplacians), count, opts);
}

}  // namespace commonvar
