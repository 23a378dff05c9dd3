#pragma once

// Experiment drivers: the two-Gaussian synthetic suite, the linear-boundary
// suite, parameter/noise sweeps with CSV + SVG output, the contrastive
// baseline comparison and alignment of externally produced embeddings.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "perfalign/contrastive.hpp"
#include "perfalign/core_alignment.hpp"
#include "perfalign/errors.hpp"
#include "perfalign/format.hpp"
#include "perfalign/matrix.hpp"
#include "perfalign/matrix_io.hpp"
#include "perfalign/metrics.hpp"
#include "perfalign/random.hpp"
#include "perfalign/separability.hpp"
#include "perfalign/svg_plot.hpp"
#include "perfalign/synthetic.hpp"

namespace perfalign {

// ---- shared helpers -------------------------------------------------------

struct LinearImageFit {
  Matrix map;        // k x k, z_hat ~= map * z_true
  double residual;   // ||z_hat - map * z_true||_F
};

// Least-squares map from the true latents to the estimates. A residual at
// rounding level means the estimate is a fixed linear image of the truth.
inline LinearImageFit fit_linear_image(const Matrix& z_true, const Matrix& z_hat) {
  if (z_true.cols() != z_hat.cols()) throw DimensionError("fit_linear_image: sample counts differ");
  LinearImageFit fit;
  fit.map = z_true.transpose().colPivHouseholderQr().solve(z_hat.transpose()).transpose();
  fit.residual = (z_hat - fit.map * z_true).norm();
  return fit;
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

inline const char* family_name(LatentFamily f) {
  return f == LatentFamily::Gmm ? "gmm" : "uniform_boundary";
}

inline nlohmann::json world_manifest(const WorldConfig& c) {
  nlohmann::json j;
  j["family"] = family_name(c.family);
  j["n"] = c.n;
  j["d1"] = c.d1;
  j["d2"] = c.d2;
  j["k"] = c.k;
  j["noise_sigma"] = c.noise_sigma;
  j["seed"] = c.seed;
  j["transform_range"] = {c.transform_lo, c.transform_hi};
  j["rng"] = "splitmix64 counter streams: latents=1 S1=2 S2=3 noise1=4 noise2=5";
  if (c.family == LatentFamily::Gmm) {
    const GmmSpec spec = default_gmm_spec(c.k);
    j["gmm"]["weights"] = spec.weights;
    for (const auto& mu : spec.means) j["gmm"]["means"].push_back(std::vector<double>(mu.data(), mu.data() + mu.size()));
    j["gmm"]["covariance"] = "identity";
  } else {
    j["boundary"] = {{"line", "y = x - 10"}, {"margin", c.boundary_margin},
                     {"x_range", {kBoundaryXLo, kBoundaryXHi}}};
  }
  return j;
}

inline void save_world(const fs::path& dir, const SyntheticWorld& w, const WorldConfig& config) {
  write_matrix_csv(dir / "Z.csv", w.z_true);
  write_labels_csv(dir / "labels.csv", w.labels);
  write_matrix_csv(dir / "S1.csv", w.s_list[0]);
  write_matrix_csv(dir / "S2.csv", w.s_list[1]);
  write_matrix_csv(dir / "X1.csv", w.x_list[0]);
  write_matrix_csv(dir / "X2.csv", w.x_list[1]);
  write_json(dir / "manifest.json", world_manifest(config));
}

// Long-format scatter data: sample,modality,label,z1..zk.
inline std::string scatter_csv(const Matrix& z1_hat, const Matrix& z2_hat, const std::vector<int>& labels) {
  std::string out = "sample,modality,label";
  for (Eigen::Index r = 0; r < z1_hat.rows(); ++r) out += ",z" + std::to_string(r + 1);
  out += '\n';
  const Matrix* zs[2] = {&z1_hat, &z2_hat};
  for (int m = 0; m < 2; ++m) {
    for (Eigen::Index i = 0; i < zs[m]->cols(); ++i) {
      out += std::to_string(i) + "," + std::to_string(m + 1) + "," +
             (labels.empty() ? std::string() : std::to_string(labels[static_cast<std::size_t>(i)]));
      for (Eigen::Index r = 0; r < zs[m]->rows(); ++r) out += "," + format_double((*zs[m])(r, i));
      out += '\n';
    }
  }
  return out;
}

inline void write_report_files(const fs::path& dir, const MetricReport& report) {
  atomic_write_text(dir / "report.csv", report_csv_header() + "\n" + report_csv_row(report) + "\n");
}

inline void write_solution_files(const fs::path& dir, const AlignmentSolution& sol, const Matrix& z1_hat,
                                 const Matrix& z2_hat) {
  write_matrix_csv(dir / "A1.csv", sol.a1);
  write_matrix_csv(dir / "A2.csv", sol.a2);
  write_matrix_csv(dir / "Z1hat.csv", z1_hat);
  write_matrix_csv(dir / "Z2hat.csv", z2_hat);
}

// ---- synthetic and boundary suites ---------------------------------------

struct SuiteOptions {
  WorldConfig world;
  double rank_tolerance = kDefaultRankTolerance;
  std::optional<fs::path> out_dir;
};

struct SuiteResult {
  SyntheticWorld world;
  AlignmentSolution solution;
  Matrix z1_hat;
  Matrix z2_hat;
  MetricReport report;
  // Least-squares residual of z1_hat against a linear image of z_true.
  double structure_residual = 0.0;
  // Boundary suite only.
  std::optional<Hyperplane> separating_hyperplane;
  double solve_ms = 0.0;
};

inline SuiteResult run_suite(const SuiteOptions& options) {
  SuiteResult r;
  r.world = make_world(options.world);
  AlignmentProblem problem;
  problem.x1 = r.world.x_list[0];
  problem.x2 = r.world.x_list[1];
  problem.k = options.world.k;
  problem.rank_tolerance = options.rank_tolerance;
  const auto t0 = std::chrono::steady_clock::now();
  r.solution = solve_alignment(problem);
  r.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  r.z1_hat = encode(r.solution.a1, r.world.x_list[0]);
  r.z2_hat = encode(r.solution.a2, r.world.x_list[1]);
  r.report = make_report(r.z1_hat, r.z2_hat, r.solution.residual_frobenius, r.world.z_true);
  r.structure_residual = fit_linear_image(r.world.z_true, r.z1_hat).residual;
  if (options.world.family == LatentFamily::UniformBoundary) {
    r.separating_hyperplane = find_separating_hyperplane(r.z1_hat, r.world.labels);
  }
  if (options.out_dir) {
    const fs::path& dir = *options.out_dir;
    save_world(dir, r.world, options.world);
    write_solution_files(dir, r.solution, r.z1_hat, r.z2_hat);
    atomic_write_text(dir / "zhat_scatter.csv", scatter_csv(r.z1_hat, r.z2_hat, r.world.labels));
    write_report_files(dir, r.report);
  }
  return r;
}

// The two-component Gaussian world (n = 2000, d1 = d2 = k = 2) solved with k = 2.
inline SuiteResult run_synthetic_suite(std::uint64_t seed, std::optional<fs::path> out_dir = std::nullopt) {
  SuiteOptions o;
  o.world.seed = seed;
  o.out_dir = std::move(out_dir);
  return run_suite(o);
}

// Uniform points on both sides of y = x - 10, solved with k = 2, plus a
// separating-hyperplane search on the estimated latents.
inline SuiteResult run_boundary_suite(std::uint64_t seed, std::optional<fs::path> out_dir = std::nullopt) {
  SuiteOptions o;
  o.world.seed = seed;
  o.world.family = LatentFamily::UniformBoundary;
  o.out_dir = std::move(out_dir);
  return run_suite(o);
}

// ---- contrastive baseline comparison ----------------------------------------

struct BaselineComparison {
  MetricReport perfect;      // SVD alignment on the same world
  MetricReport contrastive;  // trained baseline (residual = ||A X||_F of its maps)
  ContrastiveResult training;
};

inline BaselineComparison compare_with_baseline(const SyntheticWorld& world, const ContrastiveConfig& config,
                                                double rank_tolerance = kDefaultRankTolerance) {
  BaselineComparison out;
  const Matrix& x1 = world.x_list[0];
  const Matrix& x2 = world.x_list[1];
  const AlignmentSolution pa = solve_alignment(x1, x2, config.k, rank_tolerance);
  out.perfect = make_report(encode(pa.a1, x1), encode(pa.a2, x2), pa.residual_frobenius, world.z_true);
  out.training = train_linear_contrastive(x1, x2, config);
  const Matrix z1 = encode(out.training.a1, x1);
  const Matrix z2 = encode(out.training.a2, x2);
  const double residual = (z1 - z2).norm();
  if (z1.rows() == world.z_true.rows()) {
    out.contrastive = make_report(z1, z2, residual, world.z_true);
  } else {
    out.contrastive = make_report(z1, z2, residual);
  }
  return out;
}

// ---- sweeps ---------------------------------------------------------------

enum class SweepAxis { N, D, K };

inline const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::N: return "n";
    case SweepAxis::D: return "d";
    case SweepAxis::K: return "k";
  }
  return "?";
}

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "n" || s == "N") return SweepAxis::N;
  if (s == "d" || s == "D") return SweepAxis::D;
  if (s == "k" || s == "K") return SweepAxis::K;
  throw ConfigError("unknown sweep axis '" + s + "' (expected n, d or k)");
}

struct SweepConfig {
  SweepAxis axis = SweepAxis::K;
  std::vector<int> axis_values = {1, 2, 4, 8, 16};
  // Values for the dimensions that are not swept. On the D axis d1 = d2 =
  // the axis value.
  int n = 1000;
  int d1 = 16;
  int d2 = 16;
  int k = 2;
  // When set, every record uses d1 = d2 = k (combined d = 2k).
  bool tie_d_to_k = false;
  double noise_sigma = 0.0;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::optional<fs::path> output_path;
  int jobs = 1;
  // Wall times are nondeterministic; when off, wall_time_ms is written as 0
  // so that repeated runs produce identical files.
  bool record_timing = false;
  double rank_tolerance = kDefaultRankTolerance;
};

inline std::vector<int> default_axis_values(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::N: return {10, 50, 100, 500, 1000, 5000};
    case SweepAxis::D: return {2, 4, 8, 16, 32, 64};
    case SweepAxis::K: return {1, 2, 4, 8, 16};
  }
  return {};
}

struct SweepRecord {
  int n = 0;
  int d1 = 0;
  int d2 = 0;
  int k = 0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double cmae = 0.0;
  double ncmae = 0.0;
  double mlre_avg = 0.0;
  double residual_frobenius = 0.0;
  bool perfect = false;
  double wall_time_ms = 0.0;
  std::string error;  // empty on success
};

inline void validate(const SweepConfig& c) {
  if (c.axis_values.empty()) throw ConfigError("sweep: no axis values");
  for (std::size_t i = 0; i < c.axis_values.size(); ++i) {
    if (c.axis_values[i] < 1) throw ConfigError("sweep: axis values must be positive");
    if (i && c.axis_values[i] <= c.axis_values[i - 1]) throw ConfigError("sweep: axis values must be strictly increasing");
  }
  if (c.seeds.empty()) throw ConfigError("sweep: no seeds");
  if (c.n < 1 || c.d1 < 1 || c.d2 < 1 || c.k < 1) throw ConfigError("sweep: fixed n, d1, d2, k must be positive");
  if (!(c.noise_sigma >= 0.0)) throw ConfigError("sweep: noise_sigma must be nonnegative");
  if (c.jobs < 1) throw ConfigError("sweep: jobs must be at least 1");
  if (c.axis == SweepAxis::K && !c.tie_d_to_k) {
    for (int v : c.axis_values) {
      if (v > c.d1 + c.d2) throw ConfigError("sweep: k = " + std::to_string(v) + " exceeds d1 + d2");
    }
  }
}

// Dimensions of one sweep point.
inline WorldConfig sweep_world(const SweepConfig& c, int axis_value, std::uint64_t seed) {
  WorldConfig w;
  w.n = c.n;
  w.d1 = c.d1;
  w.d2 = c.d2;
  w.k = c.k;
  switch (c.axis) {
    case SweepAxis::N: w.n = axis_value; break;
    case SweepAxis::D: w.d1 = w.d2 = axis_value; break;
    case SweepAxis::K: w.k = axis_value; break;
  }
  if (c.tie_d_to_k) w.d1 = w.d2 = w.k;
  w.noise_sigma = c.noise_sigma;
  w.seed = seed;
  return w;
}

inline SweepRecord run_sweep_point(const SweepConfig& c, int axis_value, std::uint64_t seed) {
  const WorldConfig w = sweep_world(c, axis_value, seed);
  SweepRecord rec;
  rec.n = w.n;
  rec.d1 = w.d1;
  rec.d2 = w.d2;
  rec.k = w.k;
  rec.noise_sigma = w.noise_sigma;
  rec.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    SuiteOptions o;
    o.world = w;
    o.rank_tolerance = c.rank_tolerance;
    const SuiteResult r = run_suite(o);
    rec.cmae = r.report.cmae;
    rec.ncmae = r.report.ncmae;
    rec.mlre_avg = r.report.mlre_avg;
    rec.residual_frobenius = r.report.residual_frobenius;
    rec.perfect = r.solution.perfect;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  if (c.record_timing) {
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return rec;
}

inline std::string sweep_csv_header() {
  return "n,d1,d2,k,noise_sigma,seed,cmae,ncmae,mlre_avg,residual_frobenius,perfect,wall_time_ms,error";
}

inline std::string sweep_csv_row(const SweepRecord& r) {
  std::string err = r.error;
  std::replace(err.begin(), err.end(), ',', ';');
  std::replace(err.begin(), err.end(), '\n', ' ');
  std::ostringstream os;
  os << r.n << ',' << r.d1 << ',' << r.d2 << ',' << r.k << ',' << format_double(r.noise_sigma) << ',' << r.seed
     << ',' << format_double(r.cmae) << ',' << format_double(r.ncmae) << ',' << format_double(r.mlre_avg) << ','
     << format_double(r.residual_frobenius) << ',' << (r.perfect ? 1 : 0) << ',' << format_double(r.wall_time_ms)
     << ',' << err;
  return os.str();
}

inline std::vector<SweepRecord> parse_sweep_csv(const std::string& text, const std::string& source = "sweep.csv") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != sweep_csv_header()) throw DataError(source + ": unexpected header");
  std::vector<SweepRecord> out;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 13) throw DataError(source + ":" + std::to_string(lineno) + ": expected 13 fields");
    try {
      SweepRecord r;
      r.n = std::stoi(f[0]);
      r.d1 = std::stoi(f[1]);
      r.d2 = std::stoi(f[2]);
      r.k = std::stoi(f[3]);
      r.noise_sigma = std::stod(f[4]);
      r.seed = std::stoull(f[5]);
      r.cmae = std::stod(f[6]);
      r.ncmae = std::stod(f[7]);
      r.mlre_avg = std::stod(f[8]);
      r.residual_frobenius = std::stod(f[9]);
      r.perfect = f[10] == "1";
      r.wall_time_ms = std::stod(f[11]);
      r.error = f[12];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError(source + ":" + std::to_string(lineno) + ": malformed field");
    }
  }
  return out;
}

inline std::string sweep_csv(const std::vector<SweepRecord>& records) {
  std::string out = sweep_csv_header() + "\n";
  for (const auto& r : records) out += sweep_csv_row(r) + "\n";
  return out;
}

// Runs every (axis value, seed) pair, in parallel when jobs > 1. Records are
// returned, and written to <output_path>/sweep.csv, ordered by (axis value,
// seed). The file is rewritten (atomically) each time the completed prefix
// grows, so an interrupted sweep keeps every record before the first one
// still in flight. A failed point is recorded with its error message.
inline std::vector<SweepRecord> run_sweep(const SweepConfig& config) {
  validate(config);
  struct Task {
    int value;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int v : config.axis_values)
    for (std::uint64_t s : config.seeds) tasks.push_back({v, s});

  std::vector<std::optional<SweepRecord>> slots(tasks.size());
  std::size_t flushed = 0;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  const fs::path csv_path = config.output_path ? *config.output_path / "sweep.csv" : fs::path();
  if (config.output_path) atomic_write_text(csv_path, sweep_csv_header() + "\n");

  auto flush_locked = [&] {
    const std::size_t before = flushed;
    while (flushed < slots.size() && slots[flushed]) ++flushed;
    if (!config.output_path || flushed == before) return;
    std::string text = sweep_csv_header() + "\n";
    for (std::size_t i = 0; i < flushed; ++i) text += sweep_csv_row(*slots[i]) + "\n";
    atomic_write_text(csv_path, text);
  };

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      SweepRecord rec = run_sweep_point(config, tasks[i].value, tasks[i].seed);
      std::lock_guard<std::mutex> lock(mu);
      slots[i] = std::move(rec);
      flush_locked();
    }
  };

  const int jobs = std::min<int>(config.jobs, static_cast<int>(tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<SweepRecord> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// Which dimension varies across the records: n, then d1, then k.
inline std::string infer_sweep_axis(const std::vector<SweepRecord>& records) {
  auto varies = [&](auto field) {
    for (const auto& r : records)
      if (field(r) != field(records.front())) return true;
    return false;
  };
  if (records.empty()) return "n";
  if (varies([](const SweepRecord& r) { return r.n; })) return "n";
  if (varies([](const SweepRecord& r) { return r.d1; })) return "d";
  if (varies([](const SweepRecord& r) { return r.k; })) return "k";
  return "n";
}

// One SVG per metric (cmae, ncmae, mlre_avg, residual_frobenius) rendered
// from sweep.csv text alone: scatter of every seed plus the per-x median,
// one series per noise level. CMAE, NCMAE and the residual use a log10 y
// axis, MLRE a linear one. Returns the file names written.
inline std::vector<std::string> render_sweep_plots(const std::string& csv_text, const fs::path& out_dir) {
  const std::vector<SweepRecord> records = parse_sweep_csv(csv_text);
  const std::string axis = infer_sweep_axis(records);
  auto x_of = [&](const SweepRecord& r) {
    return static_cast<double>(axis == "n" ? r.n : axis == "d" ? r.d1 : r.k);
  };
  struct Metric {
    const char* name;
    double SweepRecord::*field;
    bool log_y;
  };
  const Metric metrics[] = {{"cmae", &SweepRecord::cmae, true},
                            {"ncmae", &SweepRecord::ncmae, true},
                            {"mlre_avg", &SweepRecord::mlre_avg, false},
                            {"residual_frobenius", &SweepRecord::residual_frobenius, true}};
  std::vector<std::string> written;
  for (const auto& m : metrics) {
    std::map<double, std::map<double, std::vector<double>>> by_noise;  // noise -> x -> values
    for (const auto& r : records) {
      if (!r.error.empty()) continue;
      by_noise[r.noise_sigma][x_of(r)].push_back(r.*(m.field));
    }
    std::vector<PlotSeries> series;
    for (const auto& [noise, by_x] : by_noise) {
      PlotSeries s;
      s.name = "noise " + format_double(noise);
      for (const auto& [x, values] : by_x) {
        for (double v : values) s.points.emplace_back(x, v);
        s.line.emplace_back(x, median(values));
      }
      series.push_back(std::move(s));
    }
    PlotSpec spec;
    spec.title = std::string(m.name) + " vs " + axis;
    spec.x_label = axis == "d" ? "d per modality" : axis;
    spec.y_label = m.name;
    spec.log_y = m.log_y;
    double lo = 0, hi = 0;
    for (const auto& r : records) {
      const double x = x_of(r);
      lo = lo == 0 ? x : std::min(lo, x);
      hi = std::max(hi, x);
    }
    spec.log_x = lo > 0 && hi / lo >= 50;
    const std::string file = std::string(m.name) + ".svg";
    atomic_write_text(out_dir / file, render_svg_plot(spec, series));
    written.push_back(file);
  }
  return written;
}

// ---- embedding files ------------------------------------------------------

struct EmbeddingPairSet {
  Matrix z1_features;  // d1 x n
  Matrix z2_features;  // d2 x n
  std::optional<std::vector<int>> labels;
  std::string producer;
  std::uint64_t seed = 0;
};

inline void validate(const EmbeddingPairSet& p) {
  if (p.z1_features.cols() != p.z2_features.cols()) {
    throw DimensionError("embedding pairs: " + std::to_string(p.z1_features.cols()) + " vs " +
                         std::to_string(p.z2_features.cols()) + " samples");
  }
  require_finite(p.z1_features, "z1 features");
  require_finite(p.z2_features, "z2 features");
  if (p.labels && static_cast<Eigen::Index>(p.labels->size()) != p.z1_features.cols()) {
    throw DimensionError("embedding pairs: label count differs from sample count");
  }
}

// <dir>/Z1.csv, Z2.csv, optional labels.csv and manifest.json with keys
// d1, d2, n, producer, seed.
inline void save_embedding_pairs(const fs::path& dir, const EmbeddingPairSet& p) {
  validate(p);
  write_matrix_csv(dir / "Z1.csv", p.z1_features);
  write_matrix_csv(dir / "Z2.csv", p.z2_features);
  if (p.labels) write_labels_csv(dir / "labels.csv", *p.labels);
  nlohmann::json j;
  j["d1"] = p.z1_features.rows();
  j["d2"] = p.z2_features.rows();
  j["n"] = p.z1_features.cols();
  j["producer"] = p.producer;
  j["seed"] = p.seed;
  write_json(dir / "manifest.json", j);
}

inline EmbeddingPairSet load_embedding_pairs(const fs::path& dir) {
  const nlohmann::json j = read_json(dir / "manifest.json");
  EmbeddingPairSet p;
  p.z1_features = read_matrix_csv(dir / "Z1.csv");
  p.z2_features = read_matrix_csv(dir / "Z2.csv");
  if (fs::exists(dir / "labels.csv")) p.labels = read_labels_csv(dir / "labels.csv");
  try {
    p.producer = j.at("producer").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    if (j.at("d1").get<long>() != p.z1_features.rows() || j.at("d2").get<long>() != p.z2_features.rows() ||
        j.at("n").get<long>() != p.z1_features.cols()) {
      throw DataError((dir / "manifest.json").string() + ": dimensions disagree with the matrix files");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
  validate(p);
  return p;
}

struct AlignEmbeddingsOptions {
  int k = 1;
  double rank_tolerance = kDefaultRankTolerance;
  // Fraction of pairs held out from the solve and scored separately.
  double holdout_fraction = 0.0;
  std::uint64_t split_seed = 0;
};

struct AlignEmbeddingsResult {
  AlignmentSolution solution;
  MetricReport train_report;
  std::optional<MetricReport> heldout_report;
  // CMAE of the raw features (only when d1 == d2).
  std::optional<double> train_cmae_before;
  std::optional<double> heldout_cmae_before;
  Matrix z1_hat;  // all samples, in input order
  Matrix z2_hat;
  std::vector<Eigen::Index> train_index;
  std::vector<Eigen::Index> heldout_index;
};

inline Matrix select_columns(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

// Held-out indices are the first round(n * fraction) entries of a
// Fisher-Yates permutation drawn from the split substream; both index lists
// are returned sorted.
inline std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> holdout_split(Eigen::Index n, double fraction,
                                                                                     std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("holdout fraction must be in [0, 1)");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  CounterRng rng(derive_seed(seed, Stream::kHoldoutSplit));
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
  }
  const auto held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<Eigen::Index> heldout(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<Eigen::Index> train(perm.begin() + static_cast<std::ptrdiff_t>(held), perm.end());
  std::sort(heldout.begin(), heldout.end());
  std::sort(train.begin(), train.end());
  return {train, heldout};
}

// Solves on the training pairs only and reports train (and held-out) CMAE.
inline AlignEmbeddingsResult align_embeddings(const EmbeddingPairSet& pairs, const AlignEmbeddingsOptions& options) {
  validate(pairs);
  const Eigen::Index n = pairs.z1_features.cols();
  AlignEmbeddingsResult out;
  std::tie(out.train_index, out.heldout_index) = holdout_split(n, options.holdout_fraction, options.split_seed);
  if (out.train_index.empty()) throw ConfigError("align_embeddings: no training pairs left");
  if (options.holdout_fraction > 0.0 && out.heldout_index.empty()) {
    throw ConfigError("align_embeddings: holdout fraction too small for this sample count");
  }
  const Matrix x1_train = select_columns(pairs.z1_features, out.train_index);
  const Matrix x2_train = select_columns(pairs.z2_features, out.train_index);
  out.solution = solve_alignment(x1_train, x2_train, options.k, options.rank_tolerance);
  out.z1_hat = encode(out.solution.a1, pairs.z1_features);
  out.z2_hat = encode(out.solution.a2, pairs.z2_features);
  out.train_report = make_report(select_columns(out.z1_hat, out.train_index),
                                 select_columns(out.z2_hat, out.train_index), out.solution.residual_frobenius);
  const bool same_dim = pairs.z1_features.rows() == pairs.z2_features.rows();
  if (same_dim) out.train_cmae_before = cmae(x1_train, x2_train);
  if (!out.heldout_index.empty()) {
    const Matrix h1 = select_columns(pairs.z1_features, out.heldout_index);
    const Matrix h2 = select_columns(pairs.z2_features, out.heldout_index);
    const Matrix zh1 = encode(out.solution.a1, h1);
    const Matrix zh2 = encode(out.solution.a2, h2);
    out.heldout_report = make_report(zh1, zh2, (out.solution.a1 * h1 - out.solution.a2 * h2).norm());
    if (same_dim) out.heldout_cmae_before = cmae(h1, h2);
  }
  return out;
}

// Features from trained contrastive encoders applied to a world's modalities.
inline EmbeddingPairSet contrastive_embeddings(const SyntheticWorld& world, const ContrastiveResult& trained,
                                               std::uint64_t seed) {
  EmbeddingPairSet p;
  p.z1_features = encode(trained.a1, world.x_list[0]);
  p.z2_features = encode(trained.a2, world.x_list[1]);
  p.labels = world.labels;
  p.producer = "linear-contrastive-baseline";
  p.seed = seed;
  return p;
}

}  // namespace perfalign
