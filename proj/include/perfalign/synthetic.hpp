#pragma once

// Ground-truth latent worlds and their linear modality observations
// x^(m) = S^(m) z (+ optional white Gaussian noise).

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "perfalign/core_alignment.hpp"
#include "perfalign/errors.hpp"
#include "perfalign/matrix.hpp"
#include "perfalign/random.hpp"

namespace perfalign {

struct GmmSpec {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;

  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
};

// Two unit-covariance components with equal weight at [0, 1] and [4, 5].
inline GmmSpec paper_gmm_spec() {
  GmmSpec spec;
  spec.weights = {0.5, 0.5};
  spec.means = {Vector::Zero(2), Vector::Zero(2)};
  spec.means[0] << 0.0, 1.0;
  spec.means[1] << 4.0, 5.0;
  spec.covariances = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  return spec;
}

// The same mixture lifted to k dimensions: mu1 = e_2 (e_1 when k = 1),
// mu2 = mu1 + 4, identity covariances. Reduces to paper_gmm_spec() at k = 2.
inline GmmSpec default_gmm_spec(int k) {
  if (k < 1) throw ConfigError("default_gmm_spec: k must be at least 1");
  GmmSpec spec;
  spec.weights = {0.5, 0.5};
  Vector mu1 = Vector::Zero(k);
  mu1(k >= 2 ? 1 : 0) = 1.0;
  spec.means = {mu1, (mu1.array() + 4.0).matrix()};
  spec.covariances = {Matrix::Identity(k, k), Matrix::Identity(k, k)};
  return spec;
}

inline void validate(const GmmSpec& spec) {
  const std::size_t c = spec.weights.size();
  if (c == 0) throw ConfigError("GMM spec: no components");
  if (spec.means.size() != c || spec.covariances.size() != c) {
    throw ConfigError("GMM spec: weights, means and covariances differ in length");
  }
  double total = 0.0;
  for (double w : spec.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("GMM spec: negative or non-finite weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("GMM spec: weights do not sum to 1");
  const Eigen::Index k = spec.means.front().size();
  if (k < 1) throw ConfigError("GMM spec: empty mean vector");
  for (std::size_t j = 0; j < c; ++j) {
    const Matrix& cov = spec.covariances[j];
    if (spec.means[j].size() != k || cov.rows() != k || cov.cols() != k) {
      throw ConfigError("GMM spec: component " + std::to_string(j) + " has the wrong dimension");
    }
    if (!spec.means[j].allFinite() || !cov.allFinite()) throw ConfigError("GMM spec: non-finite entries");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw ConfigError("GMM spec: covariance " + std::to_string(j) + " is not symmetric");
    }
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw ConfigError("GMM spec: covariance " + std::to_string(j) + " is not positive definite");
    }
  }
}

struct LatentSample {
  Matrix z;                 // k x n
  std::vector<int> labels;  // component or class per column
};

// Component index by inverse CDF over the weights, then mu + L g with
// L L^T = Sigma and g standard normal. `seed` keys the stream directly.
inline LatentSample sample_gmm_latents(const GmmSpec& spec, int n, std::uint64_t seed) {
  validate(spec);
  if (n < 1) throw ConfigError("sample_gmm_latents: n must be at least 1");
  const int k = spec.dim();
  std::vector<Matrix> factors;
  for (const auto& cov : spec.covariances) factors.push_back(Eigen::LLT<Matrix>(cov).matrixL());

  CounterRng rng(seed);
  LatentSample out{Matrix(k, n), std::vector<int>(static_cast<std::size_t>(n))};
  Vector g(k);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int component = -1;
    double cumulative = 0.0;
    for (std::size_t j = 0; j < spec.weights.size(); ++j) {
      if (spec.weights[j] <= 0.0) continue;
      cumulative += spec.weights[j];
      component = static_cast<int>(j);
      if (u < cumulative) break;
    }
    for (int r = 0; r < k; ++r) g(r) = rng.normal();
    out.z.col(i) = spec.means[component] + factors[component] * g;
    out.labels[static_cast<std::size_t>(i)] = component;
  }
  return out;
}

inline constexpr double kBoundaryXLo = -10.0;
inline constexpr double kBoundaryXHi = 20.0;

// 2-D points in a band around the line y = x - 10. The first n/2 columns lie
// above the line (label 1), the rest below (label 0). Each point is a foot
// point (t, t - 10) with t uniform in [x_lo, x_hi], moved perpendicular to the
// line by a distance uniform in (0, margin].
inline LatentSample sample_uniform_boundary_latents(int n, double margin, std::uint64_t seed,
                                                    double x_lo = kBoundaryXLo,
                                                    double x_hi = kBoundaryXHi) {
  if (n < 2 || n % 2 != 0) throw ConfigError("sample_uniform_boundary_latents: n must be even and positive");
  if (!(margin > 0.0)) throw ConfigError("sample_uniform_boundary_latents: margin must be positive");
  if (!(x_lo < x_hi)) throw ConfigError("sample_uniform_boundary_latents: empty x interval");
  CounterRng rng(seed);
  LatentSample out{Matrix(2, n), std::vector<int>(static_cast<std::size_t>(n))};
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (int i = 0; i < n; ++i) {
    const bool above = i < n / 2;
    const double t = rng.uniform(x_lo, x_hi);
    const double offset = margin * rng.uniform_open_closed();
    const double s = above ? 1.0 : -1.0;
    out.z(0, i) = t - s * offset * inv_sqrt2;
    out.z(1, i) = t - 10.0 + s * offset * inv_sqrt2;
    out.labels[static_cast<std::size_t>(i)] = above ? 1 : 0;
  }
  return out;
}

// d_m x k with i.i.d. uniform entries in [lo, hi), filled row by row.
inline Matrix random_transform(int d_m, int k, double lo, double hi, std::uint64_t seed) {
  if (d_m < 1 || k < 1) throw ConfigError("random_transform: dimensions must be at least 1");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("random_transform: need finite lo < hi");
  }
  CounterRng rng(seed);
  Matrix s(d_m, k);
  for (int r = 0; r < d_m; ++r) {
    for (int c = 0; c < k; ++c) s(r, c) = rng.uniform(lo, hi);
  }
  return s;
}

// S Z plus i.i.d. N(0, noise_sigma^2) entries (column by column). With zero
// noise the result is the plain product and no random numbers are drawn.
inline Matrix generate_modality(const Matrix& s, const Matrix& z, double noise_sigma,
                                std::uint64_t seed) {
  if (s.cols() != z.rows()) {
    throw DimensionError("generate_modality: S has " + std::to_string(s.cols()) +
                         " columns but Z has " + std::to_string(z.rows()) + " rows");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("generate_modality: noise_sigma must be finite and nonnegative");
  }
  Matrix x = s * z;
  if (noise_sigma > 0.0) {
    CounterRng rng(seed);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) += noise_sigma * rng.normal();
    }
  }
  return x;
}

// Moore-Penrose pseudo-inverse of a full-column-rank S via its SVD.
inline Matrix pseudo_inverse(const Matrix& s, double rank_tolerance = kDefaultRankTolerance) {
  if (s.size() == 0) throw DimensionError("pseudo_inverse: empty matrix");
  require_finite(s, "pseudo_inverse input");
  Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (numerical_rank(sv, rank_tolerance) < s.cols()) {
    throw NumericalError("pseudo_inverse: matrix is rank deficient (rank below " +
                         std::to_string(s.cols()) + ")");
  }
  return svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

// S^+ X: the latent estimate obtained from the true generation matrix.
inline Matrix pseudo_inverse_encode(const Matrix& s, const Matrix& x_m,
                                    double rank_tolerance = kDefaultRankTolerance) {
  if (s.rows() != x_m.rows()) {
    throw DimensionError("pseudo_inverse_encode: S has " + std::to_string(s.rows()) +
                         " rows but X has " + std::to_string(x_m.rows()));
  }
  return pseudo_inverse(s, rank_tolerance) * x_m;
}

enum class LatentFamily { Gmm, UniformBoundary };

struct WorldConfig {
  int n = 2000;
  int d1 = 2;
  int d2 = 2;
  int k = 2;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  LatentFamily family = LatentFamily::Gmm;
  double transform_lo = -5.0;
  double transform_hi = 5.0;
  double boundary_margin = 10.0;
};

struct SyntheticWorld {
  Matrix z_true;                // k x n
  std::vector<int> labels;
  std::vector<Matrix> s_list;   // S^(m): d_m x k
  std::vector<Matrix> x_list;   // X^(m): d_m x n
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Every matrix draws from its own substream of `config.seed`.
inline SyntheticWorld make_world(const WorldConfig& config) {
  if (config.d1 < 1 || config.d2 < 1) throw ConfigError("world: d1 and d2 must be at least 1");
  LatentSample latents;
  const std::uint64_t latent_key = derive_seed(config.seed, Stream::kLatents);
  if (config.family == LatentFamily::Gmm) {
    latents = sample_gmm_latents(default_gmm_spec(config.k), config.n, latent_key);
  } else {
    if (config.k != 2) throw ConfigError("world: the boundary family is two-dimensional (k = 2)");
    latents = sample_uniform_boundary_latents(config.n, config.boundary_margin, latent_key);
  }
  SyntheticWorld w;
  w.z_true = std::move(latents.z);
  w.labels = std::move(latents.labels);
  w.noise_sigma = config.noise_sigma;
  w.seed = config.seed;
  w.s_list.push_back(random_transform(config.d1, config.k, config.transform_lo, config.transform_hi,
                                      derive_seed(config.seed, Stream::kTransform1)));
  w.s_list.push_back(random_transform(config.d2, config.k, config.transform_lo, config.transform_hi,
                                      derive_seed(config.seed, Stream::kTransform2)));
  w.x_list.push_back(generate_modality(w.s_list[0], w.z_true, config.noise_sigma,
                                       derive_seed(config.seed, Stream::kNoise1)));
  w.x_list.push_back(generate_modality(w.s_list[1], w.z_true, config.noise_sigma,
                                       derive_seed(config.seed, Stream::kNoise2)));
  return w;
}

// The two-component mixture world: n = 2000, d1 = d2 = k = 2, S uniform in [-5, 5].
inline SyntheticWorld make_paper_gmm_world(std::uint64_t seed, double noise_sigma = 0.0) {
  WorldConfig config;
  config.seed = seed;
  config.noise_sigma = noise_sigma;
  return make_world(config);
}

inline SyntheticWorld make_boundary_world(std::uint64_t seed, int n = 2000, double margin = 10.0) {
  WorldConfig config;
  config.seed = seed;
  config.n = n;
  config.family = LatentFamily::UniformBoundary;
  config.boundary_margin = margin;
  return make_world(config);
}

}  // namespace perfalign
