#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "perfalign/errors.hpp"
#include "perfalign/format.hpp"
#include "perfalign/matrix.hpp"

namespace perfalign {

struct MetricReport {
  double cmae = 0.0;
  double ncmae = 0.0;
  std::vector<double> mlre_per_modality;  // empty when no ground truth
  double mlre_avg = 0.0;
  double residual_frobenius = 0.0;
  std::size_t n = 0;
};

namespace detail {

inline void require_metric_inputs(const Matrix& a, const Matrix& b, const char* name) {
  require_same_shape(a, b, name);
  if (a.cols() == 0) throw ConfigError(std::string(name) + ": n must be at least 1");
}

inline double mean_column_distance(const Matrix& a, const Matrix& b) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) total += (a.col(i) - b.col(i)).norm();
  return total / static_cast<double>(a.cols());
}

// Nonzero columns scaled to unit L2 norm; zero columns stay zero.
inline Matrix normalize_columns(const Matrix& z) {
  Matrix out = z;
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    const double norm = out.col(i).norm();
    if (norm > 0.0) out.col(i) /= norm;
  }
  return out;
}

}  // namespace detail

// Cross-modal alignment error: mean L2 distance between paired latents.
inline double cmae(const Matrix& z1_hat, const Matrix& z2_hat) {
  detail::require_metric_inputs(z1_hat, z2_hat, "cmae");
  return detail::mean_column_distance(z1_hat, z2_hat);
}

// CMAE on L2-normalized columns. Bounded by 2.
inline double ncmae(const Matrix& z1_hat, const Matrix& z2_hat) {
  detail::require_metric_inputs(z1_hat, z2_hat, "ncmae");
  return detail::mean_column_distance(detail::normalize_columns(z1_hat),
                                      detail::normalize_columns(z2_hat));
}

// Modality latent reconstruction error against ground truth.
inline double mlre(const Matrix& z_true, const Matrix& z_hat) {
  detail::require_metric_inputs(z_true, z_hat, "mlre");
  return detail::mean_column_distance(z_true, z_hat);
}

inline double mlre_avg(const Matrix& z_true, const std::vector<Matrix>& z_hats) {
  if (z_hats.empty()) throw ConfigError("mlre_avg: no modality estimates");
  double total = 0.0;
  for (const auto& z_hat : z_hats) total += mlre(z_true, z_hat);
  return total / static_cast<double>(z_hats.size());
}

// Report without ground truth (mlre fields left empty / zero).
inline MetricReport make_report(const Matrix& z1_hat, const Matrix& z2_hat,
                                double residual_frobenius) {
  MetricReport r;
  r.cmae = cmae(z1_hat, z2_hat);
  r.ncmae = ncmae(z1_hat, z2_hat);
  r.residual_frobenius = residual_frobenius;
  r.n = static_cast<std::size_t>(z1_hat.cols());
  return r;
}

inline MetricReport make_report(const Matrix& z1_hat, const Matrix& z2_hat,
                                double residual_frobenius, const Matrix& z_true) {
  MetricReport r = make_report(z1_hat, z2_hat, residual_frobenius);
  r.mlre_per_modality = {mlre(z_true, z1_hat), mlre(z_true, z2_hat)};
  r.mlre_avg = (r.mlre_per_modality[0] + r.mlre_per_modality[1]) / 2.0;
  return r;
}

// ---- serialization --------------------------------------------------------

inline std::string report_csv_header() {
  return "n,cmae,ncmae,mlre_1,mlre_2,mlre_avg,residual_frobenius";
}

// One CSV row. Missing MLRE values are written as empty fields.
inline std::string report_csv_row(const MetricReport& r) {
  std::ostringstream os;
  os << r.n << ',' << format_double(r.cmae) << ',' << format_double(r.ncmae) << ',';
  if (r.mlre_per_modality.size() >= 2) {
    os << format_double(r.mlre_per_modality[0]) << ',' << format_double(r.mlre_per_modality[1])
       << ',' << format_double(r.mlre_avg);
  } else {
    os << ",,";
  }
  os << ',' << format_double(r.residual_frobenius);
  return os.str();
}

inline nlohmann::json report_json(const MetricReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["cmae"] = r.cmae;
  j["ncmae"] = r.ncmae;
  j["residual_frobenius"] = r.residual_frobenius;
  if (!r.mlre_per_modality.empty()) {
    j["mlre_per_modality"] = r.mlre_per_modality;
    j["mlre_avg"] = r.mlre_avg;
  }
  return j;
}

inline std::string report_text(const MetricReport& r) {
  std::ostringstream os;
  os << "samples            " << r.n << '\n'
     << "CMAE               " << format_double(r.cmae) << '\n'
     << "NCMAE              " << format_double(r.ncmae) << '\n'
     << "residual ||AX||_F  " << format_double(r.residual_frobenius) << '\n';
  for (std::size_t m = 0; m < r.mlre_per_modality.size(); ++m) {
    os << "MLRE(" << m + 1 << ")            " << format_double(r.mlre_per_modality[m]) << '\n';
  }
  if (!r.mlre_per_modality.empty()) os << "MLRE avg           " << format_double(r.mlre_avg) << '\n';
  return os.str();
}

}  // namespace perfalign
