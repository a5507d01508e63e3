#pragma once

// k-nearest-neighbour graphs with self loops and the synthetic multi-view
// datasets built from them.

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "commonvar/error.hpp"
#include "commonvar/linalg.hpp"
#include "commonvar/rng.hpp"

namespace commonvar {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// n points in R^d stored one per row.
struct PointCloud {
  Matrix points;

  Index size() const noexcept { return points.rows(); }
  Index dim() const noexcept { return points.cols(); }

  void validate() const {
    require(size() >= 2, ErrorKind::InvalidInput, "point cloud needs at least 2 points");
    require(dim() >= 1, ErrorKind::InvalidInput, "point cloud dimension must be positive");
    require(points.allFinite(), ErrorKind::InvalidInput, "point coordinates must be finite");
  }
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }

  Index find(Index x) {
    while (parent_[idx(x)] != x) {
      parent_[idx(x)] = parent_[idx(parent_[idx(x)])];
      x = parent_[idx(x)];
    }
    return x;
  }

  bool unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a < b) std::swap(a, b);
    parent_[idx(a)] = b;
    return true;
  }

 private:
  static std::size_t idx(Index i) { return static_cast<std::size_t>(i); }
  std::vector<Index> parent_;
};

}  // namespace detail

/// Number of connected components of the graph whose edges are the positive
/// off-diagonal entries of `adjacency`.
inline Index count_components(const SymMatrix& adjacency) {
  const Index n = adjacency.n();
  detail::DisjointSets sets(n);
  Index components = n;
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      if (adjacency(i, j) > 0.0 && sets.unite(i, j)) --components;
    }
  }
  return components;
}

/// Undirected weighted graph: symmetric nonnegative adjacency with a positive
/// diagonal (self loops) and a single connected component.
class Graph {
 public:
  explicit Graph(SymMatrix adjacency) : adjacency_(std::move(adjacency)) {
    const Index n = adjacency_.n();
    require(n >= 2, ErrorKind::InvalidInput, "graph needs at least 2 vertices");
    require((adjacency_.mat().array() >= 0.0).all(), ErrorKind::InvalidInput,
            "adjacency entries must be nonnegative");
    for (Index i = 0; i < n; ++i) {
      require(adjacency_(i, i) > 0.0, ErrorKind::InvalidInput,
              "vertex " + std::to_string(i) + " has no self loop");
    }
    const Index components = count_components(adjacency_);
    require(components == 1, ErrorKind::Disconnected,
            "graph has " + std::to_string(components) + " connected components");
  }

  Index n() const noexcept { return adjacency_.n(); }
  const SymMatrix& adjacency() const noexcept { return adjacency_; }

 private:
  SymMatrix adjacency_;
};

/// Indices of the k nearest neighbours of every point. Distance ties resolve
/// to the lowest index.
inline std::vector<std::vector<Index>> knn_lists(const PointCloud& cloud, Index k) {
  cloud.validate();
  const Index n = cloud.size();
  require(k >= 1 && k < n, ErrorKind::InvalidInput,
          "k must satisfy 1 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");

  std::vector<std::vector<Index>> lists(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Index>> candidates;
  candidates.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    candidates.clear();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d2 = (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
      require(d2 > 0.0, ErrorKind::DuplicatePoints,
              "points " + std::to_string(std::min(i, j)) + " and " +
                  std::to_string(std::max(i, j)) + " coincide");
      candidates.emplace_back(d2, j);
    }
    std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end());
    auto& list = lists[static_cast<std::size_t>(i)];
    for (Index r = 0; r < k; ++r) list.push_back(candidates[static_cast<std::size_t>(r)].second);
  }
  return lists;
}

/// 0/1 k-NN graph: a_ii = 1, a_ij = 1 when either point is among the other's
/// k nearest neighbours.
inline Graph knn_graph(const PointCloud& cloud, Index k) {
  const auto lists = knn_lists(cloud, k);
  const Index n = cloud.size();
  Matrix a = Matrix::Identity(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j : lists[static_cast<std::size_t>(i)]) {
      a(i, j) = 1.0;
      a(j, i) = 1.0;
    }
  }
  return Graph(SymMatrix(std::move(a)));
}

enum class Quadrant : int { NE = 0, NW = 1, SW = 2, SE = 3 };

inline Quadrant quadrant_of(double x, double y) {
  if (x >= 0.0) return y >= 0.0 ? Quadrant::NE : Quadrant::SE;
  return y > 0.0 ? Quadrant::NW : Quadrant::SW;
}

/// Multiple views of the same n samples. Vertex j is sample j in every view.
struct Dataset {
  std::string generator;
  Index n = 0;
  Index k = 0;
  std::uint64_t seed = 0;
  std::vector<PointCloud> views;
  std::vector<Graph> graphs;
  std::vector<double> labels;
  std::string label_name;

  Index m() const noexcept { return static_cast<Index>(graphs.size()); }
};

namespace detail {

inline void check_sizes(Index n, Index k) {
  require(k >= 1, ErrorKind::InvalidInput, "k must be positive");
  require(n >= 2 * k, ErrorKind::InvalidInput, "generators require n >= 2k");
}

// Rejection sampling from the enclosing cube keeps the stream portable.
template <int Dim>
Matrix uniform_ball(Index n, Rng& rng) {
  Matrix pts(n, Dim);
  for (Index i = 0; i < n; ++i) {
    std::array<double, Dim> p{};
    double r2;
    do {
      r2 = 0.0;
      for (int d = 0; d < Dim; ++d) {
        p[static_cast<std::size_t>(d)] = rng.uniform(-1.0, 1.0);
        r2 += p[static_cast<std::size_t>(d)] * p[static_cast<std::size_t>(d)];
      }
    } while (r2 > 1.0);
    for (int d = 0; d < Dim; ++d) pts(i, d) = p[static_cast<std::size_t>(d)];
  }
  return pts;
}

inline Dataset finish(Dataset ds) {
  for (const auto& view : ds.views) ds.graphs.push_back(knn_graph(view, ds.k));
  return ds;
}

}  // namespace detail

/// Points uniform in [-1/2,1/2]^2 and the same points each rotated about the
/// origin by an independent uniform angle. Labels are the radii.
inline Dataset gen_rotations_2d(Index n, Index k, std::uint64_t seed) {
  detail::check_sizes(n, k);
  Rng point_rng(seed, Stream::Points);
  Rng angle_rng(seed, Stream::AngleA);

  Matrix x1(n, 2), x2(n, 2);
  std::vector<double> radii(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    x1(i, 0) = point_rng.uniform(-0.5, 0.5);
    x1(i, 1) = point_rng.uniform(-0.5, 0.5);
  }
  for (Index i = 0; i < n; ++i) {
    const double theta = angle_rng.uniform(0.0, 2.0 * kPi);
    const double c = std::cos(theta), s = std::sin(theta);
    x2(i, 0) = c * x1(i, 0) - s * x1(i, 1);
    x2(i, 1) = s * x1(i, 0) + c * x1(i, 1);
    radii[static_cast<std::size_t>(i)] = x1.row(i).norm();
  }
  return detail::finish(Dataset{"rotations2d", n, k, seed, {{x1}, {x2}}, {}, radii, "r"});
}

/// Points uniform in the unit ball, rotated about the z-axis (view 2) and the
/// y-axis (view 3) by independent uniform angles. Labels are the radii.
inline Dataset gen_rotations_3d(Index n, Index k, std::uint64_t seed) {
  detail::check_sizes(n, k);
  Rng point_rng(seed, Stream::Points);
  Rng z_rng(seed, Stream::AngleA);
  Rng y_rng(seed, Stream::AngleB);

  const Matrix x1 = detail::uniform_ball<3>(n, point_rng);
  Matrix x2(n, 3), x3(n, 3);
  std::vector<double> radii(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double theta = z_rng.uniform(0.0, 2.0 * kPi);
    const double ct = std::cos(theta), st = std::sin(theta);
    x2(i, 0) = ct * x1(i, 0) - st * x1(i, 1);
    x2(i, 1) = st * x1(i, 0) + ct * x1(i, 1);
    x2(i, 2) = x1(i, 2);

    const double phi = y_rng.uniform(0.0, 2.0 * kPi);
    const double cp = std::cos(phi), sp = std::sin(phi);
    x3(i, 0) = cp * x1(i, 0) - sp * x1(i, 2);
    x3(i, 1) = x1(i, 1);
    x3(i, 2) = sp * x1(i, 0) + cp * x1(i, 2);

    radii[static_cast<std::size_t>(i)] = x1.row(i).norm();
  }
  return detail::finish(
      Dataset{"rotations3d", n, k, seed, {{x1}, {x2}, {x3}}, {}, radii, "r"});
}

/// Horizontal squeeze (x, y(1 - cos πx)).
inline std::array<double, 2> barbell_horizontal(double x, double y) {
  return {x, y * (1.0 - std::cos(kPi * x))};
}

/// Vertical squeeze (x(1 - cos πy), y).
inline std::array<double, 2> barbell_vertical(double x, double y) {
  return {x * (1.0 - std::cos(kPi * y)), y};
}

/// Unit-disc points and their horizontal and vertical barbell images.
/// Labels are quadrant codes of the original points (see Quadrant).
inline Dataset gen_barbell(Index n, Index k, std::uint64_t seed) {
  detail::check_sizes(n, k);
  Rng point_rng(seed, Stream::Points);
  const Matrix x1 = detail::uniform_ball<2>(n, point_rng);
  Matrix x2(n, 2), x3(n, 2);
  std::vector<double> quadrants(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto f = barbell_horizontal(x1(i, 0), x1(i, 1));
    const auto g = barbell_vertical(x1(i, 0), x1(i, 1));
    x2(i, 0) = f[0];
    x2(i, 1) = f[1];
    x3(i, 0) = g[0];
    x3(i, 1) = g[1];
    quadrants[static_cast<std::size_t>(i)] =
        static_cast<double>(static_cast<int>(quadrant_of(x1(i, 0), x1(i, 1))));
  }
  return detail::finish(
      Dataset{"barbell", n, k, seed, {{x1}, {x2}, {x3}}, {}, quadrants, "quadrant"});
}

/// Spiral point with radial parameter t and width parameter phi.
inline std::array<double, 2> spiral_point(double t, double phi) {
  const double radius = t + 0.45 * phi / (2.0 * kPi);
  const double angle = 4.0 * kPi * (t - 0.25) / 1.5;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Torus point with major angle theta and minor angle phi.
inline std::array<double, 3> torus_point(double theta, double phi) {
  const double ring = 0.75 + 0.25 * std::cos(phi);
  return {ring * std::cos(theta), ring * std::sin(theta), 0.25 * std::sin(phi)};
}

/// A planar spiral and a torus in R^3 sharing the width/minor angle phi.
/// Labels are the phi values.
inline Dataset gen_spiral_torus(Index n, Index k, std::uint64_t seed) {
  detail::check_sizes(n, k);
  Rng theta_rng(seed, Stream::AngleA);
  Rng phi_rng(seed, Stream::AngleB);
  Rng t_rng(seed, Stream::Parameter);

  Matrix x1(n, 2), x2(n, 3);
  std::vector<double> phis(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double theta = theta_rng.uniform(0.0, 2.0 * kPi);
    const double phi = phi_rng.uniform(0.0, 2.0 * kPi);
    const double t = t_rng.uniform(0.25, 1.5);
    const auto s = spiral_point(t, phi);
    const auto p = torus_point(theta, phi);
    x1(i, 0) = s[0];
    x1(i, 1) = s[1];
    x2(i, 0) = p[0];
    x2(i, 1) = p[1];
    x2(i, 2) = p[2];
    phis[static_cast<std::size_t>(i)] = phi;
  }
  return detail::finish(Dataset{"spiral_torus", n, k, seed, {{x1}, {x2}}, {}, phis, "phi"});
}

}  // namespace commonvar
