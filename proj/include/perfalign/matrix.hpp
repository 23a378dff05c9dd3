#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "perfalign/errors.hpp"

namespace perfalign {

// Dense double matrix. Samples are stored as columns throughout the library:
// X^(m) is d_m x n, A is k x d, Z is k x n, S^(m) is d_m x k.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Throws DataError naming `what` if any entry is NaN or +/-Inf.
inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw DataError(what + " contains non-finite entries");
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(what + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}

// [a | b]
inline Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("hconcat: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

// Largest principal angle (radians) between the row spaces of two matrices
// with orthonormal rows and equal row counts. Computed from the sine side so
// angles near zero keep full precision.
inline double max_principal_angle(const Matrix& a_rows, const Matrix& b_rows) {
  Matrix off = a_rows - (a_rows * b_rows.transpose()) * b_rows;
  if (off.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(off);
  double s = std::min(1.0, svd.singularValues()(0));
  return std::asin(s);
}

}  // namespace perfalign
