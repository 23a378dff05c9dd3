#pragma once

// Explicit separating hyperplanes for two labeled point clouds.

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "perfalign/errors.hpp"
#include "perfalign/matrix.hpp"

namespace perfalign {

// Points with label 1 satisfy normal . z + offset > 0, label 0 the opposite.
struct Hyperplane {
  Vector normal;
  double offset = 0.0;
};

// Smallest signed margin y_i (normal . z_i + offset), y = +1 for label 1 and
// -1 for label 0. Positive means strict separation.
inline double min_signed_margin(const Hyperplane& h, const Matrix& z, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != z.cols()) {
    throw DimensionError("separability: label count differs from sample count");
  }
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const double y = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    best = std::min(best, y * (h.normal.dot(z.col(i)) + h.offset));
  }
  return best;
}

inline bool separates(const Hyperplane& h, const Matrix& z, const std::vector<int>& labels) {
  return min_signed_margin(h, z, labels) > 0.0;
}

namespace detail {

// Phase-1 simplex (revised form, Bland's rule) for the hull-intersection
// system  sum_i lambda_i p_i - sum_j mu_j q_j = 0, sum lambda = 1,
// sum mu = 1, lambda, mu >= 0. The columns are [p; 1; 0] and [-q; 0; 1].
// Returns the dual prices at the phase-1 optimum together with the optimal
// infeasibility; a positive infeasibility means the hulls are disjoint.
struct HullLpResult {
  Vector dual;
  double infeasibility = 0.0;
  bool converged = false;
};

inline HullLpResult hull_intersection_lp(const Matrix& columns, int max_pivots) {
  const Eigen::Index m = columns.rows();
  const Eigen::Index n = columns.cols();
  Vector rhs = Vector::Zero(m);
  rhs(m - 2) = 1.0;
  rhs(m - 1) = 1.0;
  // Basis entries >= n are artificial columns (unit vectors).
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
  auto column = [&](Eigen::Index j) -> Vector {
    return j < n ? Vector(columns.col(j)) : Vector(Vector::Unit(m, j - n));
  };
  const double tol = 1e-12;
  HullLpResult out;
  for (int pivot = 0; pivot <= max_pivots; ++pivot) {
    Matrix b(m, m);
    Vector cost_b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      b.col(i) = column(basis[static_cast<std::size_t>(i)]);
      cost_b(i) = basis[static_cast<std::size_t>(i)] >= n ? 1.0 : 0.0;
    }
    const Eigen::PartialPivLU<Matrix> lu(b);
    const Vector x_b = lu.solve(rhs);
    const Vector dual = lu.transpose().solve(cost_b);
    Eigen::Index entering = -1;
    for (Eigen::Index j = 0; j < n + m && entering < 0; ++j) {
      const double cost = j >= n ? 1.0 : 0.0;
      if (cost - dual.dot(column(j)) < -tol) entering = j;
    }
    if (entering < 0) {
      out.dual = dual;
      out.infeasibility = cost_b.dot(x_b);
      out.converged = true;
      return out;
    }
    const Vector dir = lu.solve(column(entering));
    Eigen::Index leaving = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (dir(i) <= tol) continue;
      const double ratio = std::max(x_b(i), 0.0) / dir(i);
      if (ratio < best - tol ||
          (ratio <= best + tol && leaving >= 0 &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leaving)])) {
        best = std::min(best, ratio);
        leaving = i;
      }
    }
    if (leaving < 0) return out;  // unbounded cannot happen in phase 1
    basis[static_cast<std::size_t>(leaving)] = entering;
  }
  return out;
}

}  // namespace detail

// Exact linear separability test: the classes are strictly separable iff
// their convex hulls are disjoint, decided by a phase-1 simplex on centered,
// whitened coordinates (degenerate directions projected out). The dual
// prices of that LP give the hyperplane, which is checked on the original
// points before it is returned. Returns nullopt when the hulls intersect or
// the pivot budget runs out.
inline std::optional<Hyperplane> find_separating_hyperplane(const Matrix& z, const std::vector<int>& labels,
                                                            int max_pivots = 100000) {
  const Eigen::Index k = z.rows();
  const Eigen::Index n = z.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw DimensionError("separability: label count differs from sample count");
  }
  if (n == 0 || k == 0) throw ConfigError("separability: empty point set");
  Eigen::Index positives = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ConfigError("separability: labels must be 0 or 1");
    positives += l;
  }
  if (positives == 0 || positives == n) {
    Hyperplane h{Vector::Zero(k), positives == n ? 1.0 : -1.0};
    return h;
  }

  const Vector mean = z.rowwise().mean();
  const Matrix centered = z.colwise() - mean;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(centered * centered.transpose() / static_cast<double>(n));
  const Vector& lambda = eig.eigenvalues();
  // Directions without spread are dropped rather than amplified.
  const double floor = 1e-12 * std::max(lambda.maxCoeff(), 1e-300);
  Vector inv_sqrt(k);
  for (Eigen::Index i = 0; i < k; ++i) inv_sqrt(i) = lambda(i) > floor ? 1.0 / std::sqrt(lambda(i)) : 0.0;
  const Matrix whitener = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  const Matrix w_points = whitener * centered;

  Matrix columns = Matrix::Zero(k + 2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] == 1) {
      columns.col(i).head(k) = w_points.col(i);
      columns(k, i) = 1.0;
    } else {
      columns.col(i).head(k) = -w_points.col(i);
      columns(k + 1, i) = 1.0;
    }
  }
  const detail::HullLpResult lp = detail::hull_intersection_lp(columns, max_pivots);
  if (!lp.converged || lp.infeasibility <= 1e-10) return std::nullopt;

  // Optimal duals (w, alpha, beta): w.p <= -alpha for label 1, w.q >= beta
  // for label 0, alpha + beta > 0. Place the plane halfway.
  const Vector w = lp.dual.head(k);
  const double alpha = lp.dual(k), beta = lp.dual(k + 1);
  Hyperplane h;
  h.normal = -(whitener.transpose() * w);
  h.offset = 0.5 * (beta - alpha) - h.normal.dot(mean);
  if (!separates(h, z, labels)) return std::nullopt;
  return h;
}

}  // namespace perfalign
