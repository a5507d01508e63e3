#pragma once

// Validation statistics for recovered common variables.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "commonvar/error.hpp"
#include "commonvar/linalg.hpp"

namespace commonvar {

/// Ranks starting at 0, ties share their average rank.
inline Vector average_ranks(const Vector& v) {
  const Index n = v.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v(a) < v(b); });
  Vector ranks(n);
  for (Index i = 0; i < n;) {
    Index j = i;
    while (j + 1 < n && v(order[static_cast<std::size_t>(j + 1)]) == v(order[static_cast<std::size_t>(i)])) ++j;
    const double rank = 0.5 * static_cast<double>(i + j);
    for (Index q = i; q <= j; ++q) ranks(order[static_cast<std::size_t>(q)]) = rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const Vector& a, const Vector& b) {
  require(a.size() == b.size() && a.size() >= 2, ErrorKind::DimensionMismatch,
          "correlation needs two equally long vectors");
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  const double denom = ca.norm() * cb.norm();
  return denom > 0.0 ? ca.dot(cb) / denom : 0.0;
}

inline double spearman(const Vector& a, const Vector& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

/// Fraction of rows whose nearest class centroid (centroids computed from the
/// true labels) is their own class.
inline double nearest_centroid_purity(const Matrix& embedding, const std::vector<double>& labels) {
  require(static_cast<Index>(labels.size()) == embedding.rows(), ErrorKind::DimensionMismatch,
          "one label per embedded row required");
  std::map<double, std::pair<Vector, int>> centroids;
  for (Index i = 0; i < embedding.rows(); ++i) {
    auto [it, fresh] = centroids.try_emplace(labels[static_cast<std::size_t>(i)],
                                             Vector::Zero(embedding.cols()), 0);
    it->second.first += embedding.row(i).transpose();
    it->second.second += 1;
  }
  for (auto& [label, c] : centroids) c.first /= c.second;

  Index correct = 0;
  for (Index i = 0; i < embedding.rows(); ++i) {
    double best = INFINITY;
    double best_label = 0.0;
    for (const auto& [label, c] : centroids) {
      const double d = (embedding.row(i).transpose() - c.first).squaredNorm();
      if (d < best) {
        best = d;
        best_label = label;
      }
    }
    if (best_label == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(embedding.rows());
}

}  // namespace commonvar
