#pragma once

// Dense symmetric kernels: eigendecomposition with a fixed sign convention,
// spectral matrix functions, and Euclidean projection onto the probability
// simplex.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "commonvar/error.hpp"

namespace commonvar {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultEigTol = 1e-10;

/// Square real matrix that is symmetric bit-for-bit. The constructor averages
/// the input with its transpose, so m(i,j) == m(j,i) holds exactly.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(Matrix m) : m_(std::move(m)) {
    require(m_.rows() == m_.cols(), ErrorKind::DimensionMismatch,
            "SymMatrix requires a square matrix, got " + std::to_string(m_.rows()) + "x" +
                std::to_string(m_.cols()));
    require(m_.allFinite(), ErrorKind::InvalidInput, "SymMatrix entries must be finite");
    for (Index j = 0; j < m_.cols(); ++j) {
      for (Index i = j + 1; i < m_.rows(); ++i) {
        const double avg = 0.5 * (m_(i, j) + m_(j, i));
        m_(i, j) = avg;
        m_(j, i) = avg;
      }
    }
  }

  static SymMatrix identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }

  Index n() const noexcept { return m_.rows(); }
  const Matrix& mat() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// Ascending eigenvalues with orthonormal eigenvector columns.
struct EigDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  Index size() const noexcept { return eigenvalues.size(); }
  double value(Index i) const { return eigenvalues(i); }
  auto vector(Index i) const { return eigenvectors.col(i); }
};

namespace detail {

// Flip each column so that its entry of largest magnitude is nonnegative;
// ties resolve to the lowest index.
// Magnitudes within this relative margin of the largest count as tied, so
// the lowest-index rule survives round-off in symmetric eigenvectors.
inline constexpr double kSignTieTol = 1e-10;

/// Flips v so that its largest-magnitude entry is nonnegative; among
/// near-equal magnitudes the lowest index decides.
inline void normalize_sign(Eigen::Ref<Vector> v) {
  const double top = v.cwiseAbs().maxCoeff();
  for (Index r = 0; r < v.size(); ++r) {
    if (std::abs(v(r)) >= top * (1.0 - kSignTieTol)) {
      if (v(r) < 0.0) v = -v;
      return;
    }
  }
}

inline void normalize_signs(Matrix& vecs) {
  for (Index c = 0; c < vecs.cols(); ++c) normalize_sign(vecs.col(c));
}

}  // namespace detail

/// Full symmetric eigendecomposition (Householder tridiagonalisation followed
/// by implicit symmetric QR). Throws NonConvergence when the solver fails or
/// a residual exceeds eig_tol relative to the spectral scale.
inline EigDecomposition sym_eig(const SymMatrix& m, double eig_tol = kDefaultEigTol) {
  const Index n = m.n();
  EigDecomposition out;
  if (n == 0) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.mat(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NonConvergence, "symmetric eigensolver did not converge");
  }
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  detail::normalize_signs(out.eigenvectors);

  const double scale = std::max(1.0, out.eigenvalues.cwiseAbs().maxCoeff());
  const Matrix residual =
      m.mat() * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal();
  for (Index i = 0; i < n; ++i) {
    const double r = residual.col(i).norm();
    if (!(r <= eig_tol * scale)) {
      throw Error(ErrorKind::NonConvergence, "eigenpair " + std::to_string(i) +
                                                 " residual " + std::to_string(r) +
                                                 " exceeds tolerance");
    }
  }
  return out;
}

/// Ψ diag(f(λ)) Ψᵀ.
template <class F>
SymMatrix spectral_apply(const EigDecomposition& eig, F&& f) {
  Vector mapped(eig.size());
  for (Index i = 0; i < eig.size(); ++i) mapped(i) = f(eig.eigenvalues(i));
  return SymMatrix(eig.eigenvectors * mapped.asDiagonal() * eig.eigenvectors.transpose());
}

/// exp(scale · M) via spectral mapping.
inline SymMatrix sym_expm(const SymMatrix& m, double scale, double eig_tol = kDefaultEigTol) {
  return spectral_apply(sym_eig(m, eig_tol), [scale](double l) { return std::exp(scale * l); });
}

/// A point of the probability simplex {t ∈ [0,1]^m : Σ t = 1}.
class SimplexWeights {
 public:
  static constexpr double kSumTol = 1e-12;

  SimplexWeights() = default;

  explicit SimplexWeights(Vector t) : t_(std::move(t)) {
    require(t_.size() >= 1, ErrorKind::InvalidInput, "simplex weights must be non-empty");
    for (Index k = 0; k < t_.size(); ++k) {
      require(std::isfinite(t_(k)) && t_(k) >= 0.0 && t_(k) <= 1.0, ErrorKind::InvalidInput,
              "simplex weight " + std::to_string(k) + " outside [0,1]");
    }
    require(std::abs(t_.sum() - 1.0) <= kSumTol, ErrorKind::InvalidInput,
            "simplex weights must sum to 1");
  }

  SimplexWeights(std::initializer_list<double> values)
      : SimplexWeights(Vector(Eigen::Map<const Vector>(values.begin(),
                                                       static_cast<Index>(values.size())))) {}

  static SimplexWeights uniform(Index m) {
    require(m >= 1, ErrorKind::InvalidInput, "simplex dimension must be positive");
    return SimplexWeights(Vector::Constant(m, 1.0 / static_cast<double>(m)));
  }

  static SimplexWeights vertex(Index m, Index k) {
    Vector t = Vector::Zero(m);
    t(k) = 1.0;
    return SimplexWeights(std::move(t));
  }

  Index size() const noexcept { return t_.size(); }
  double operator[](Index k) const { return t_(k); }
  const Vector& values() const noexcept { return t_; }

 private:
  Vector t_;
};

/// Euclidean projection onto the probability simplex (sort and threshold).
inline SimplexWeights project_simplex(const Vector& v) {
  require(v.size() >= 1, ErrorKind::InvalidInput, "cannot project an empty vector");
  require(v.allFinite(), ErrorKind::InvalidInput, "projection input must be finite");
  const Index m = v.size();
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<>());

  double cumulative = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < m; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  Vector t = (v.array() - theta).cwiseMax(0.0).matrix();
  // Remove rounding drift in the sum without leaving [0,1].
  const double total = t.sum();
  if (total > 0.0) t /= total;
  t = t.cwiseMin(1.0);
  return SimplexWeights(std::move(t));
}

}  // namespace commonvar
