#pragma once

// Two-modality alignment as the linear inverse problem A X = 0.
//
// With X = [X1; -X2] (d x n, d = d1 + d2), any k orthonormal vectors from the
// left null space of X give encoders A = [A1 | A2] with A1 X1 = A2 X2. When
// the null space is smaller than k, the left singular vectors belonging to
// the k smallest singular values minimize ||A X||_F over all A with
// orthonormal rows, and the residual is sqrt(sum of those sigma^2).

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "perfalign/errors.hpp"
#include "perfalign/matrix.hpp"

namespace perfalign {

enum class SvdMode { Full, TruncatedSmallestK };

inline constexpr double kDefaultRankTolerance = 1e-10;
inline constexpr int kDefaultTruncatedFallbackDim = 512;

struct AlignmentProblem {
  Matrix x1;  // d1 x n
  Matrix x2;  // d2 x n
  int k = 1;
  // Singular values <= rank_tolerance * sigma_max count as zero.
  double rank_tolerance = kDefaultRankTolerance;
  SvdMode svd_mode = SvdMode::Full;
  // TruncatedSmallestK uses a full SVD when d is at most this.
  int truncated_fallback_dim = kDefaultTruncatedFallbackDim;
};

struct AlignmentSolution {
  Matrix a_combined;  // k x d, orthonormal rows
  Matrix a1;          // k x d1
  Matrix a2;          // k x d2
  double residual_frobenius = 0.0;
  std::vector<double> smallest_singular_values;  // k values, descending
  int left_null_dim = 0;
  bool perfect = false;
};

// [x1; -x2]
inline Matrix stack_modalities(const Matrix& x1, const Matrix& x2) {
  if (x1.cols() != x2.cols()) {
    throw DimensionError("stack_modalities: x1 has " + std::to_string(x1.cols()) +
                         " columns but x2 has " + std::to_string(x2.cols()));
  }
  Matrix x(x1.rows() + x2.rows(), x1.cols());
  x.topRows(x1.rows()) = x1;
  x.bottomRows(x2.rows()) = -x2;
  return x;
}

// Number of singular values above rank_tolerance * sigma_max. Zero for the
// zero matrix.
inline int numerical_rank(const Eigen::VectorXd& singular_values, double rank_tolerance) {
  if (singular_values.size() == 0) return 0;
  const double sigma_max = singular_values.maxCoeff();
  if (!(sigma_max > 0.0)) return 0;
  const double cutoff = rank_tolerance * sigma_max;
  int rank = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) > cutoff) ++rank;
  }
  return rank;
}

// d - rank(x).
inline int left_null_dimension(const Matrix& x, double rank_tolerance = kDefaultRankTolerance) {
  if (x.size() == 0) throw DimensionError("left_null_dimension: empty matrix");
  require_finite(x, "left_null_dimension input");
  if (rank_tolerance < 0.0) throw ConfigError("rank_tolerance must be nonnegative");
  Eigen::BDCSVD<Matrix> svd(x);
  return static_cast<int>(x.rows()) - numerical_rank(svd.singularValues(), rank_tolerance);
}

// Flips each row so that its largest-magnitude entry (first one on ties) is
// positive. Solutions are only defined up to sign; this makes output files
// reproducible.
inline void canonicalize_row_signs(Matrix& a) {
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    if (a.cols() == 0) return;
    Eigen::Index best = 0;
    a.row(r).cwiseAbs().maxCoeff(&best);
    if (a(r, best) < 0.0) a.row(r) *= -1.0;
  }
}

inline std::pair<Matrix, Matrix> split_solution(const Matrix& a, int d1, int d2) {
  if (d1 < 0 || d2 < 0 || d1 + d2 != a.cols()) {
    throw DimensionError("split_solution: d1 + d2 = " + std::to_string(d1 + d2) +
                         " but a has " + std::to_string(a.cols()) + " columns");
  }
  return {a.leftCols(d1), a.rightCols(d2)};
}

// Column i of the result is the latent estimate of sample i.
inline Matrix encode(const Matrix& a_m, const Matrix& x_m) {
  if (a_m.cols() != x_m.rows()) {
    throw DimensionError("encode: encoder has " + std::to_string(a_m.cols()) +
                         " columns but data has " + std::to_string(x_m.rows()) + " rows");
  }
  return a_m * x_m;
}

// True iff every paired sample maps to latents within `tolerance` (L2).
inline bool verify_perfect(const AlignmentSolution& solution, const Matrix& x1, const Matrix& x2,
                           double tolerance) {
  if (x1.cols() != x2.cols()) throw DimensionError("verify_perfect: unpaired samples");
  const Matrix diff = encode(solution.a1, x1) - encode(solution.a2, x2);
  if (diff.cols() == 0) return true;
  return diff.colwise().norm().maxCoeff() <= tolerance;
}

namespace detail {

struct SmallestLeftVectors {
  Matrix basis;                 // d x k, columns ordered by descending sigma
  std::vector<double> sigmas;   // k values, descending
  Eigen::VectorXd all_sigmas;   // whatever the route computed; used for rank
};

// Full SVD route. Singular values beyond min(d, n) are exact zeros; their
// left vectors are the trailing columns of the full U.
inline SmallestLeftVectors smallest_left_full(const Matrix& x, int k) {
  const Eigen::Index d = x.rows();
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeFullU);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(d);
  padded.head(s.size()) = s;
  SmallestLeftVectors out;
  out.basis = svd.matrixU().rightCols(k);
  out.sigmas.assign(padded.data() + (d - k), padded.data() + d);
  out.all_sigmas = s;
  return out;
}

// Rayleigh-Ritz on a d x m orthonormal trial basis: returns the k directions
// of span(q) with the smallest ||u^T X||, and their singular values.
inline SmallestLeftVectors ritz_smallest(const Matrix& q, const Matrix& x, int k) {
  const Matrix projected = q.transpose() * x;  // m x n
  Eigen::BDCSVD<Matrix> svd(projected, Eigen::ComputeFullU);
  const Eigen::Index m = q.cols();
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(m);
  padded.head(svd.singularValues().size()) = svd.singularValues();
  SmallestLeftVectors out;
  out.basis = q * svd.matrixU().rightCols(k);
  out.sigmas.assign(padded.data() + (m - k), padded.data() + m);
  out.all_sigmas = padded;
  return out;
}

// Shift-and-invert block iteration on the Gram matrix X X^T followed by a
// Rayleigh-Ritz step on X itself, so the returned singular values are those
// of X restricted to the basis rather than square roots of Gram eigenvalues.
inline SmallestLeftVectors smallest_left_truncated(const Matrix& x, int k) {
  const Eigen::Index d = x.rows();
  const Eigen::Index n = x.cols();
  if (n < d) {
    // Wide-null-space case: thin SVD of X plus the orthogonal complement of
    // its column space already gives every small direction.
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU);
    const Matrix& u_thin = svd.matrixU();
    Eigen::HouseholderQR<Matrix> qr(u_thin);
    Matrix q_full = qr.householderQ();
    Matrix u(d, d);
    u.leftCols(u_thin.cols()) = u_thin;
    u.rightCols(d - u_thin.cols()) = q_full.rightCols(d - u_thin.cols());
    Eigen::VectorXd padded = Eigen::VectorXd::Zero(d);
    padded.head(svd.singularValues().size()) = svd.singularValues();
    SmallestLeftVectors out;
    out.basis = u.rightCols(k);
    out.sigmas.assign(padded.data() + (d - k), padded.data() + d);
    out.all_sigmas = svd.singularValues();
    return out;
  }

  const Matrix gram = x * x.transpose();
  const double scale = std::max(gram.diagonal().maxCoeff(), 1e-300);
  Eigen::LDLT<Matrix> shifted(gram + (1e-12 * scale) * Matrix::Identity(d, d));
  if (shifted.info() != Eigen::Success) throw NumericalError("truncated SVD: factorization failed");

  const Eigen::Index block = std::min<Eigen::Index>(d, 2 * static_cast<Eigen::Index>(k) + 4);
  // Deterministic start: a fixed well-spread block.
  Matrix q(d, block);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < block; ++j) {
      q(i, j) = std::cos(0.7 * static_cast<double>((i + 1) * (j + 1)) + 0.3 * static_cast<double>(j));
    }
  }
  Eigen::HouseholderQR<Matrix> qr0(q);
  q = qr0.householderQ() * Matrix::Identity(d, block);

  std::vector<double> previous;
  for (int iter = 0; iter < 300; ++iter) {
    Matrix next = shifted.solve(q);
    Eigen::HouseholderQR<Matrix> qr(next);
    q = qr.householderQ() * Matrix::Identity(d, block);
    auto ritz = ritz_smallest(q, x, k);
    if (!previous.empty()) {
      double change = 0.0;
      for (int i = 0; i < k; ++i) change = std::max(change, std::abs(ritz.sigmas[i] - previous[i]));
      const double ref = std::sqrt(scale);
      if (change <= 1e-14 * ref) break;
    }
    previous = ritz.sigmas;
  }
  SmallestLeftVectors out = ritz_smallest(q, x, k);
  // Rank is counted inside the trial block only, with sigma_max from power
  // iteration on the Gram matrix; null dimensions above `block` are capped.
  Vector v = Vector::Ones(d).normalized();
  double lambda = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    Vector w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) break;
    v = w / norm;
    if (std::abs(norm - lambda) <= 1e-12 * norm) {
      lambda = norm;
      break;
    }
    lambda = norm;
  }
  // Directions outside the block are treated as full rank.
  const Eigen::VectorXd block_sigmas = out.all_sigmas;
  out.all_sigmas = Eigen::VectorXd::Constant(d, std::sqrt(lambda));
  out.all_sigmas.tail(block) = block_sigmas;
  return out;
}

inline void validate(const AlignmentProblem& problem) {
  if (problem.x1.cols() != problem.x2.cols()) {
    throw DimensionError("alignment problem: x1 has " + std::to_string(problem.x1.cols()) +
                         " samples but x2 has " + std::to_string(problem.x2.cols()));
  }
  if (problem.x1.cols() == 0) throw ConfigError("alignment problem: n must be at least 1");
  const Eigen::Index d = problem.x1.rows() + problem.x2.rows();
  if (d == 0) throw ConfigError("alignment problem: d1 + d2 must be at least 1");
  if (problem.k < 1) throw ConfigError("alignment problem: k must be at least 1");
  if (problem.k > d) {
    throw ConfigError("alignment problem: k = " + std::to_string(problem.k) +
                      " exceeds d1 + d2 = " + std::to_string(d));
  }
  if (!(problem.rank_tolerance >= 0.0)) throw ConfigError("rank_tolerance must be nonnegative");
  require_finite(problem.x1, "x1");
  require_finite(problem.x2, "x2");
}

}  // namespace detail

inline AlignmentSolution solve_alignment(const AlignmentProblem& problem) {
  detail::validate(problem);
  const Matrix x = stack_modalities(problem.x1, problem.x2);
  const int d = static_cast<int>(x.rows());
  const int k = problem.k;

  const bool use_full = problem.svd_mode == SvdMode::Full || d <= problem.truncated_fallback_dim;
  detail::SmallestLeftVectors vecs =
      use_full ? detail::smallest_left_full(x, k) : detail::smallest_left_truncated(x, k);

  AlignmentSolution sol;
  sol.a_combined = vecs.basis.transpose();
  canonicalize_row_signs(sol.a_combined);
  auto [a1, a2] = split_solution(sol.a_combined, static_cast<int>(problem.x1.rows()),
                                 static_cast<int>(problem.x2.rows()));
  sol.a1 = std::move(a1);
  sol.a2 = std::move(a2);
  sol.residual_frobenius = (sol.a_combined * x).norm();
  sol.smallest_singular_values = std::move(vecs.sigmas);
  sol.left_null_dim = d - numerical_rank(vecs.all_sigmas, problem.rank_tolerance);
  sol.perfect = sol.left_null_dim >= k;
  return sol;
}

// Convenience overload with default tolerance and full SVD.
inline AlignmentSolution solve_alignment(const Matrix& x1, const Matrix& x2, int k,
                                         double rank_tolerance = kDefaultRankTolerance) {
  AlignmentProblem p;
  p.x1 = x1;
  p.x2 = x2;
  p.k = k;
  p.rank_tolerance = rank_tolerance;
  return solve_alignment(p);
}

}  // namespace perfalign
