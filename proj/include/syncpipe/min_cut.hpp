#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace syncpipe {

template <typename Scalar>
struct MinCutResult {
  std::vector<int> side_a;  // vertex indices, contains vertex 0
  std::vector<int> side_b;
  Scalar weight{};
};

/// Stoer-Wagner global minimum cut of the undirected graph given by the
/// symmetric weight matrix (diagonal ignored). Deterministic: every phase
/// starts from the lowest live index, maximum-adjacency ties go to the lowest
/// index, and the first minimum cut-of-the-phase is kept.
template <typename Derived>
MinCutResult<typename Derived::Scalar> stoer_wagner_min_cut(const Eigen::MatrixBase<Derived>& weights) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = weights.rows();
  if (n < 2 || weights.cols() != n) {
    throw std::invalid_argument("min cut needs a square graph with at least 2 vertices");
  }

  Matrix w = weights;
  w.diagonal().setZero();
  std::vector<std::vector<int>> members(n);
  for (Eigen::Index i = 0; i < n; ++i) members[i] = {static_cast<int>(i)};
  std::vector<bool> live(n, true);

  Scalar best = std::numeric_limits<Scalar>::max();
  std::vector<int> best_side;

  for (Eigen::Index remaining = n; remaining > 1; --remaining) {
    std::vector<bool> added(n, false);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> conn = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
    Eigen::Index prev = -1;
    Eigen::Index last = -1;
    for (Eigen::Index step = 0; step < remaining; ++step) {
      Eigen::Index pick = -1;
      for (Eigen::Index v = 0; v < n; ++v) {
        if (!live[v] || added[v]) continue;
        if (pick < 0 || conn(v) > conn(pick)) pick = v;
      }
      added[pick] = true;
      prev = last;
      last = pick;
      for (Eigen::Index v = 0; v < n; ++v)
        if (live[v] && !added[v]) conn(v) += w(pick, v);
    }
    if (conn(last) < best) {
      best = conn(last);
      best_side = members[last];
    }
    // Merge `last` into `prev`.
    members[prev].insert(members[prev].end(), members[last].begin(), members[last].end());
    w.row(prev) += w.row(last);
    w.col(prev) += w.col(last);
    w(prev, prev) = Scalar(0);
    live[last] = false;
  }

  std::vector<bool> in_side(n, false);
  for (int v : best_side) in_side[v] = true;
  const bool flip = in_side[0];
  MinCutResult<Scalar> out;
  out.weight = best;
  for (Eigen::Index v = 0; v < n; ++v) {
    const bool a = in_side[v] == flip;
    (a ? out.side_a : out.side_b).push_back(static_cast<int>(v));
  }
  return out;
}

/// Weight of the cut separating `side` (mask) from the rest.
template <typename Derived>
typename Derived::Scalar cut_weight(const Eigen::MatrixBase<Derived>& weights, const std::vector<bool>& side) {
  typename Derived::Scalar total(0);
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    for (Eigen::Index j = 0; j < weights.cols(); ++j)
      if (side[i] && !side[j]) total += weights(i, j);
  return total;
}

}  // namespace syncpipe
