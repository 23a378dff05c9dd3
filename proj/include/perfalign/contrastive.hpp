#pragma once

// Linear contrastive baseline: encoders z^(m) = A^(m) x^(m) trained by plain
// gradient descent on a symmetric InfoNCE loss over cosine similarities.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "perfalign/errors.hpp"
#include "perfalign/matrix.hpp"
#include "perfalign/random.hpp"

namespace perfalign {

struct ContrastiveConfig {
  int k = 2;
  double temperature = 0.1;
  double learning_rate = 1e-2;
  int epochs = 500;
  int batch_size = 256;  // 0 means full batch
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  // Precondition by the inverse square root of each modality's second-moment
  // matrix; returned encoders already include it and act on raw data.
  bool whiten = false;
};

struct InfoNceResult {
  double loss = 0.0;
  Matrix grad_z1;  // dL/dz1, k x b
  Matrix grad_z2;  // dL/dz2, k x b
};

namespace detail {

inline Matrix unit_columns_or_throw(const Matrix& z, Vector& norms, const char* name) {
  norms = z.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > 0.0)) {
      throw DataError(std::string("info_nce_loss: ") + name + " column " + std::to_string(i) +
                      " has zero norm");
    }
  }
  return z * norms.cwiseInverse().asDiagonal();
}

// Column-wise softmax of `logits` (column j holds the candidates for anchor
// j) and the mean over j of logsumexp(column j) - logits(j, j).
inline double column_cross_entropy(const Matrix& logits, Matrix& probs) {
  const Eigen::Index b = logits.cols();
  probs.resize(logits.rows(), b);
  double total = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const double m = logits.col(j).maxCoeff();
    probs.col(j) = (logits.col(j).array() - m).exp().matrix();
    const double sum = probs.col(j).sum();
    probs.col(j) /= sum;
    total += m + std::log(sum) - logits(j, j);
  }
  return total / static_cast<double>(b);
}

inline void check_batch(const Matrix& z1, const Matrix& z2, double temperature) {
  require_same_shape(z1, z2, "info_nce_loss");
  if (z1.cols() < 2) throw ConfigError("info_nce_loss: batch needs at least 2 pairs");
  if (!(temperature > 0.0)) throw ConfigError("info_nce_loss: temperature must be positive");
}

}  // namespace detail

namespace detail {

// dL/du and dL/dv for unit columns u, v. Two strategies with identical math:
// `dense` materializes the b x b logit matrix; `streamed` walks it one column
// at a time with a fixed shift of 1/temperature (|logit| <= 1/temperature),
// keeping the working set in cache. The fixed shift can underflow when
// 2/temperature approaches the double exponent range, so small temperatures
// use the dense path.
struct UnitGradient {
  double loss = 0.0;
  Matrix grad_u;
  Matrix grad_v;
};

inline UnitGradient info_nce_unit_dense(const Matrix& u, const Matrix& v, double temperature) {
  const Eigen::Index b = u.cols();
  // logits(i, j) = u_i . v_j / temperature. Column j of `logits` scores the
  // z1 candidates for anchor v_j (2 -> 1); column i of its transpose scores
  // the z2 candidates for anchor u_i (1 -> 2).
  const Matrix logits = (u.transpose() * v) / temperature;
  const Matrix logits_t = logits.transpose();
  Matrix p21, p12_t;
  const double l21 = column_cross_entropy(logits, p21);
  const double l12 = column_cross_entropy(logits_t, p12_t);

  // dL/dlogits
  Matrix g = p21 + p12_t.transpose();
  g.diagonal().array() -= 2.0;
  g /= 2.0 * static_cast<double>(b);
  return {0.5 * (l12 + l21), v * g.transpose() / temperature, u * g / temperature};
}

inline UnitGradient info_nce_unit_streamed(const Matrix& u, const Matrix& v, double temperature) {
  const Eigen::Index b = u.cols();
  const double inv_t = 1.0 / temperature;
  const Matrix ut = u.transpose();  // b x k, so ut * v_j is one logit column
  Eigen::ArrayXd row_sum = Eigen::ArrayXd::Zero(b);
  Eigen::ArrayXd col_lse(b);
  Eigen::ArrayXd diag(b);
  Eigen::ArrayXd column(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    column = (ut * v.col(j)).array() * inv_t;
    diag(j) = column(j);
    const Eigen::ArrayXd e = (column - inv_t).exp();
    col_lse(j) = std::log(e.sum()) + inv_t;
    row_sum += e;
  }
  const Eigen::ArrayXd row_lse = row_sum.log() + inv_t;
  const double l21 = (col_lse - diag).mean();
  const double l12 = (row_lse - diag).mean();

  UnitGradient out;
  out.loss = 0.5 * (l12 + l21);
  out.grad_u = Matrix::Zero(u.rows(), b);
  out.grad_v.resize(v.rows(), b);
  // p_row(i, j) = e_ij * exp(1/t - row_lse_i), p_col(i, j) = e_ij * exp(1/t - col_lse_j)
  // with e_ij = exp(logit_ij - 1/t): one exponential per entry.
  const Eigen::ArrayXd row_factor = (inv_t - row_lse).exp();
  const double scale = inv_t / (2.0 * static_cast<double>(b));
  Vector g(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    column = (ut * v.col(j)).array() * inv_t;
    const Eigen::ArrayXd e = (column - inv_t).exp();
    g = (e * (row_factor + std::exp(inv_t - col_lse(j)))).matrix();
    g(j) -= 2.0;
    g *= scale;
    out.grad_v.col(j) = u * g;
    out.grad_u.noalias() += v.col(j) * g.transpose();
  }
  return out;
}

inline constexpr Eigen::Index kStreamedMinBatch = 256;
inline constexpr double kStreamedMinTemperature = 0.01;

}  // namespace detail

// Symmetric InfoNCE with analytic gradients. With u_i, v_j the normalized
// columns and s_ij = u_i . v_j / temperature, the loss is the mean of the
// row-wise (1 -> 2) and column-wise (2 -> 1) cross-entropies against the
// diagonal.
inline InfoNceResult info_nce_loss_and_grad(const Matrix& z1_hat, const Matrix& z2_hat,
                                            double temperature) {
  detail::check_batch(z1_hat, z2_hat, temperature);
  const Eigen::Index b = z1_hat.cols();
  Vector n1, n2;
  const Matrix u = detail::unit_columns_or_throw(z1_hat, n1, "z1_hat");
  const Matrix v = detail::unit_columns_or_throw(z2_hat, n2, "z2_hat");
  const bool streamed = b >= detail::kStreamedMinBatch && temperature >= detail::kStreamedMinTemperature;
  const detail::UnitGradient unit = streamed ? detail::info_nce_unit_streamed(u, v, temperature)
                                             : detail::info_nce_unit_dense(u, v, temperature);

  // Back through the normalization: d(z/|z|) = (I - u u^T) / |z|.
  InfoNceResult out;
  out.loss = unit.loss;
  out.grad_z1.resize(z1_hat.rows(), b);
  out.grad_z2.resize(z2_hat.rows(), b);
  for (Eigen::Index i = 0; i < b; ++i) {
    out.grad_z1.col(i) = (unit.grad_u.col(i) - u.col(i) * u.col(i).dot(unit.grad_u.col(i))) / n1(i);
    out.grad_z2.col(i) = (unit.grad_v.col(i) - v.col(i) * v.col(i).dot(unit.grad_v.col(i))) / n2(i);
  }
  return out;
}

inline double info_nce_loss(const Matrix& z1_hat, const Matrix& z2_hat, double temperature) {
  detail::check_batch(z1_hat, z2_hat, temperature);
  Vector n1, n2;
  const Matrix u = detail::unit_columns_or_throw(z1_hat, n1, "z1_hat");
  const Matrix v = detail::unit_columns_or_throw(z2_hat, n2, "z2_hat");
  const Matrix logits = (u.transpose() * v) / temperature;
  Matrix probs;
  const double l21 = detail::column_cross_entropy(logits, probs);
  const double l12 = detail::column_cross_entropy(logits.transpose(), probs);
  return 0.5 * (l12 + l21);
}

struct ContrastiveGradient {
  double loss = 0.0;
  Matrix grad_a1;
  Matrix grad_a2;
};

// Loss and encoder gradients on one batch of paired columns.
inline ContrastiveGradient contrastive_gradient(const Matrix& a1, const Matrix& a2,
                                                const Matrix& x1, const Matrix& x2,
                                                double temperature) {
  const InfoNceResult r = info_nce_loss_and_grad(a1 * x1, a2 * x2, temperature);
  return {r.loss, r.grad_z1 * x1.transpose(), r.grad_z2 * x2.transpose()};
}

// W = (X X^T / n)^(-1/2) on the numerically nonzero eigen-directions (zero
// elsewhere). Uncentered, so encoders stay linear.
inline Matrix second_moment_whitener(const Matrix& x) {
  const Matrix m = x * x.transpose() / static_cast<double>(x.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(lambda.maxCoeff(), 0.0);
  Vector inv_sqrt(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    inv_sqrt(i) = lambda(i) > cutoff ? 1.0 / std::sqrt(lambda(i)) : 0.0;
  }
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

struct ContrastiveResult {
  Matrix a1;  // k x d1
  Matrix a2;  // k x d2
  // Full batch: loss before each update. Mini-batch: mean batch loss per epoch.
  std::vector<double> loss_history;
};

inline void validate(const ContrastiveConfig& c) {
  if (c.k < 1) throw ConfigError("contrastive: k must be at least 1");
  if (!(c.temperature > 0.0)) throw ConfigError("contrastive: temperature must be positive");
  if (!(c.learning_rate > 0.0)) throw ConfigError("contrastive: learning_rate must be positive");
  if (c.epochs < 0) throw ConfigError("contrastive: epochs must be nonnegative");
  if (c.batch_size < 0 || c.batch_size == 1) throw ConfigError("contrastive: batch_size must be 0 or >= 2");
  if (!(c.init_scale > 0.0)) throw ConfigError("contrastive: init_scale must be positive");
}

// Encoders start as i.i.d. N(0, init_scale^2) (A1 first, row by row) from the
// seed's contrastive substream. Mini-batches follow a per-epoch Fisher-Yates
// permutation from the same stream; a trailing batch with fewer than 2 pairs
// is skipped.
inline ContrastiveResult train_linear_contrastive(const Matrix& x1, const Matrix& x2,
                                                  const ContrastiveConfig& config) {
  validate(config);
  if (x1.cols() != x2.cols()) throw DimensionError("contrastive: unpaired samples");
  require_finite(x1, "x1");
  require_finite(x2, "x2");
  const Eigen::Index n = x1.cols();
  if (n < 2) throw ConfigError("contrastive: need at least 2 samples");
  const Eigen::Index batch = config.batch_size == 0 ? n : config.batch_size;
  if (batch > n) throw ConfigError("contrastive: batch_size exceeds sample count");

  const Matrix w1 = config.whiten ? second_moment_whitener(x1) : Matrix::Identity(x1.rows(), x1.rows());
  const Matrix w2 = config.whiten ? second_moment_whitener(x2) : Matrix::Identity(x2.rows(), x2.rows());
  const Matrix y1 = w1 * x1;
  const Matrix y2 = w2 * x2;

  CounterRng rng(derive_seed(config.seed, Stream::kContrastiveInit));
  ContrastiveResult out;
  out.a1.resize(config.k, x1.rows());
  out.a2.resize(config.k, x2.rows());
  for (Eigen::Index r = 0; r < out.a1.rows(); ++r)
    for (Eigen::Index c = 0; c < out.a1.cols(); ++c) out.a1(r, c) = config.init_scale * rng.normal();
  for (Eigen::Index r = 0; r < out.a2.rows(); ++r)
    for (Eigen::Index c = 0; c < out.a2.cols(); ++c) out.a2(r, c) = config.init_scale * rng.normal();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    if (batch == n) {
      const ContrastiveGradient g = contrastive_gradient(out.a1, out.a2, y1, y2, config.temperature);
      epoch_loss = g.loss;
      if (std::isfinite(g.loss)) {
        out.a1 -= config.learning_rate * g.grad_a1;
        out.a2 -= config.learning_rate * g.grad_a2;
      }
    } else {
      for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      }
      int batches = 0;
      for (Eigen::Index start = 0; start + 1 < n; start += batch) {
        const Eigen::Index len = std::min(batch, n - start);
        if (len < 2) break;
        Matrix b1(y1.rows(), len), b2(y2.rows(), len);
        for (Eigen::Index j = 0; j < len; ++j) {
          b1.col(j) = y1.col(order[static_cast<std::size_t>(start + j)]);
          b2.col(j) = y2.col(order[static_cast<std::size_t>(start + j)]);
        }
        const ContrastiveGradient g = contrastive_gradient(out.a1, out.a2, b1, b2, config.temperature);
        epoch_loss += g.loss;
        ++batches;
        out.a1 -= config.learning_rate * g.grad_a1;
        out.a2 -= config.learning_rate * g.grad_a2;
      }
      epoch_loss /= std::max(batches, 1);
    }
    if (!std::isfinite(epoch_loss) || !out.a1.allFinite() || !out.a2.allFinite()) {
      throw TrainingError("contrastive training diverged", epoch);
    }
    out.loss_history.push_back(epoch_loss);
  }
  out.a1 = out.a1 * w1;
  out.a2 = out.a2 * w2;
  return out;
}

}  // namespace perfalign
