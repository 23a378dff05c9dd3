#pragma once

// Command-line front end. Every subcommand prints its resolved configuration
// to stderr before computing, writes its files atomically and returns
//
//   0  success
//   1  usage error (bad flag, invalid parameter)
//   2  data error (unreadable or malformed input, shape mismatch)
//   3  numerical error (rank-deficient S, diverged training)

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "perfalign/contrastive.hpp"
#include "perfalign/core_alignment.hpp"
#include "perfalign/errors.hpp"
#include "perfalign/experiments.hpp"
#include "perfalign/format.hpp"
#include "perfalign/matrix_io.hpp"
#include "perfalign/metrics.hpp"
#include "perfalign/synthetic.hpp"

namespace perfalign::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

namespace detail {

// Ordered key=value echo of the effective settings.
class ConfigEcho {
 public:
  explicit ConfigEcho(std::string command) : command_(std::move(command)) {}

  template <class T>
  ConfigEcho& add(const std::string& key, const T& value) {
    std::ostringstream os;
    if constexpr (std::is_same_v<T, double>) {
      os << format_double(value);
    } else if constexpr (std::is_same_v<T, bool>) {
      os << (value ? "true" : "false");
    } else {
      os << value;
    }
    entries_.emplace_back(key, os.str());
    return *this;
  }

  void print(std::ostream& err) const {
    err << "perfalign " << command_ << '\n';
    for (const auto& [k, v] : entries_) err << "  " << k << " = " << v << '\n';
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

inline SvdMode parse_svd_mode(const std::string& s) {
  if (s == "full") return SvdMode::Full;
  if (s == "truncated") return SvdMode::TruncatedSmallestK;
  throw ConfigError("unknown --svd-mode '" + s + "' (expected full or truncated)");
}

inline void warn_k_equals_d(std::ostream& err, int k, int d) {
  if (k == d) {
    err << "warning: k equals d1 + d2 = " << d
        << "; perfect alignment is impossible unless the data are zero\n";
  }
}

struct WorldFlags {
  int n = 2000;
  int d1 = 2;
  int d2 = 2;
  int k = 2;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string family = "gmm";
  double margin = 10.0;
  double lo = -5.0;
  double hi = 5.0;

  void attach(CLI::App* app) {
    app->add_option("--n", n, "number of paired samples")->capture_default_str();
    app->add_option("--d1", d1, "rows of X1 (modality 1 dimension)")->capture_default_str();
    app->add_option("--d2", d2, "rows of X2 (modality 2 dimension)")->capture_default_str();
    app->add_option("--k", k, "latent dimension")->capture_default_str();
    app->add_option("--noise-sigma", noise_sigma, "std. dev. of additive Gaussian noise")->capture_default_str();
    app->add_option("--seed", seed, "world seed; fixes every random draw")->capture_default_str();
    app->add_option("--family", family, "latent family: gmm or boundary")
        ->check(CLI::IsMember({"gmm", "boundary"}))
        ->capture_default_str();
    app->add_option("--margin", margin, "boundary family: maximum distance from y = x - 10")->capture_default_str();
    app->add_option("--s-lo", lo, "lower bound of the uniform S entries")->capture_default_str();
    app->add_option("--s-hi", hi, "upper bound of the uniform S entries")->capture_default_str();
  }

  WorldConfig config() const {
    WorldConfig c;
    c.n = n;
    c.d1 = d1;
    c.d2 = d2;
    c.k = k;
    c.noise_sigma = noise_sigma;
    c.seed = seed;
    c.family = family == "boundary" ? LatentFamily::UniformBoundary : LatentFamily::Gmm;
    c.boundary_margin = margin;
    c.transform_lo = lo;
    c.transform_hi = hi;
    return c;
  }

  void echo(ConfigEcho& e) const {
    e.add("family", family).add("n", n).add("d1", d1).add("d2", d2).add("k", k)
        .add("noise_sigma", noise_sigma).add("seed", seed).add("s_range", "[" + format_double(lo) + ", " + format_double(hi) + "]");
    if (family == "boundary") e.add("margin", margin);
  }
};

inline void print_report(std::ostream& out, const MetricReport& r, bool json) {
  if (json) {
    out << report_json(r).dump(2) << '\n';
  } else {
    out << report_text(r);
  }
}

}  // namespace detail

// Parses argv and runs one subcommand. Output goes to `out`, diagnostics and
// the configuration echo to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Perfect alignment of two linear modalities via the left null space of [X1; -X2]", "perfalign"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "perfalign 1.0.0");

  std::function<int()> action;
  double rank_tol = kDefaultRankTolerance;
  bool json = false;
  std::string out_dir = "out";

  auto add_common = [&](CLI::App* sub, bool with_json) {
    sub->add_option("--rank-tol", rank_tol, "relative rank tolerance: sigma <= tol * sigma_max counts as zero")
        ->capture_default_str();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    if (with_json) sub->add_flag("--json", json, "print the metric report as JSON");
  };

  // ---- synth ----
  detail::WorldFlags synth_world;
  bool synth_solve = false;
  CLI::App* synth = app.add_subcommand(
      "synth",
      "Generate a synthetic world: Z.csv, labels.csv, S1.csv, S2.csv, X1.csv, X2.csv and manifest.json.\n"
      "With --solve, also align it (A1/A2/Z1hat/Z2hat/report.csv, zhat_scatter.csv).\n"
      "Matrix files: first line '# rows=<r> cols=<c>', then r lines of c comma-separated values.");
  synth_world.attach(synth);
  add_common(synth, true);
  synth->add_flag("--solve", synth_solve, "solve the alignment and report metrics against the true latents");
  synth->callback([&] {
    action = [&] {
      detail::ConfigEcho e("synth");
      synth_world.echo(e);
      e.add("solve", synth_solve).add("rank_tol", rank_tol).add("out", out_dir);
      e.print(err);
      const WorldConfig wc = synth_world.config();
      if (!synth_solve) {
        const SyntheticWorld w = make_world(wc);
        save_world(out_dir, w, wc);
        out << "wrote world to " << out_dir << '\n';
        return kOk;
      }
      detail::warn_k_equals_d(err, wc.k, wc.d1 + wc.d2);
      SuiteOptions o;
      o.world = wc;
      o.rank_tolerance = rank_tol;
      o.out_dir = fs::path(out_dir);
      const SuiteResult r = run_suite(o);
      if (json) {
        nlohmann::json j = report_json(r.report);
        j["perfect"] = r.solution.perfect;
        j["left_null_dim"] = r.solution.left_null_dim;
        j["structure_residual"] = r.structure_residual;
        out << j.dump(2) << '\n';
      } else {
        out << report_text(r.report) << "perfect            " << (r.solution.perfect ? "yes" : "no") << '\n'
            << "left null dim      " << r.solution.left_null_dim << '\n';
      }
      return kOk;
    };
  });

  // ---- solve ----
  std::string x1_path, x2_path, svd_mode = "full";
  int solve_k = 0;
  CLI::App* solve = app.add_subcommand(
      "solve",
      "Solve A X = 0 for two paired modality files (d_m x n, samples as columns).\n"
      "Writes A1.csv, A2.csv, Z1hat.csv, Z2hat.csv and report.csv to --out.");
  solve->add_option("--x1", x1_path, "matrix CSV for modality 1 (d1 x n)")->required();
  solve->add_option("--x2", x2_path, "matrix CSV for modality 2 (d2 x n)")->required();
  solve->add_option("--k", solve_k, "latent dimension (1 <= k <= d1 + d2)")->required();
  solve->add_option("--svd-mode", svd_mode, "full or truncated (truncated falls back to full when d <= 512)")
      ->check(CLI::IsMember({"full", "truncated"}))
      ->capture_default_str();
  add_common(solve, true);
  solve->callback([&] {
    action = [&] {
      detail::ConfigEcho e("solve");
      e.add("x1", x1_path).add("x2", x2_path).add("k", solve_k).add("svd_mode", svd_mode)
          .add("rank_tol", rank_tol).add("out", out_dir);
      e.print(err);
      if (solve_k < 1) throw ConfigError("--k must be at least 1");
      AlignmentProblem p;
      p.x1 = read_matrix_csv(x1_path);
      p.x2 = read_matrix_csv(x2_path);
      p.k = solve_k;
      p.rank_tolerance = rank_tol;
      p.svd_mode = detail::parse_svd_mode(svd_mode);
      detail::warn_k_equals_d(err, solve_k, static_cast<int>(p.x1.rows() + p.x2.rows()));
      const AlignmentSolution sol = solve_alignment(p);
      const Matrix z1 = encode(sol.a1, p.x1);
      const Matrix z2 = encode(sol.a2, p.x2);
      const MetricReport report = make_report(z1, z2, sol.residual_frobenius);
      const fs::path dir(out_dir);
      write_solution_files(dir, sol, z1, z2);
      write_report_files(dir, report);
      if (json) {
        nlohmann::json j = report_json(report);
        j["perfect"] = sol.perfect;
        j["left_null_dim"] = sol.left_null_dim;
        j["smallest_singular_values"] = sol.smallest_singular_values;
        out << j.dump(2) << '\n';
      } else {
        out << report_text(report) << "perfect            " << (sol.perfect ? "yes" : "no") << '\n'
            << "left null dim      " << sol.left_null_dim << '\n';
      }
      return kOk;
    };
  });

  // ---- sweep ----
  std::string axis = "k";
  std::vector<int> values;
  SweepConfig sweep_cfg;
  std::uint64_t sweep_seed = 0;
  int num_seeds = 5;
  std::vector<std::uint64_t> seed_list;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  CLI::App* sweep = app.add_subcommand(
      "sweep",
      "Sweep n, d (per modality, d1 = d2) or k over several seeds on Gaussian-mixture worlds.\n"
      "Writes sweep.csv (n,d1,d2,k,noise_sigma,seed,cmae,ncmae,mlre_avg,residual_frobenius,perfect,"
      "wall_time_ms,error) incrementally, then cmae.svg, ncmae.svg, mlre_avg.svg, residual_frobenius.svg.");
  sweep->add_option("--axis", axis, "swept dimension: n, d or k")
      ->check(CLI::IsMember({"n", "d", "k"}))
      ->capture_default_str();
  sweep->add_option("--values", values, "comma-separated, strictly increasing axis values (default per axis)")
      ->delimiter(',');
  sweep->add_option("--n", sweep_cfg.n, "fixed n")->capture_default_str();
  sweep->add_option("--d1", sweep_cfg.d1, "fixed d1")->capture_default_str();
  sweep->add_option("--d2", sweep_cfg.d2, "fixed d2")->capture_default_str();
  sweep->add_option("--k", sweep_cfg.k, "fixed k")->capture_default_str();
  sweep->add_flag("--tie-d-to-k", sweep_cfg.tie_d_to_k, "use d1 = d2 = k at every point");
  sweep->add_option("--noise-sigma", sweep_cfg.noise_sigma, "noise std. dev.")->capture_default_str();
  sweep->add_option("--seed", sweep_seed, "first seed")->capture_default_str();
  sweep->add_option("--num-seeds", num_seeds, "seeds used: seed, seed+1, ...")->capture_default_str();
  sweep->add_option("--seeds", seed_list, "explicit comma-separated seed list (overrides --seed/--num-seeds)")
      ->delimiter(',');
  sweep->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  sweep->add_flag("--timing", sweep_cfg.record_timing, "record wall_time_ms (otherwise written as 0)");
  add_common(sweep, false);
  sweep->callback([&] {
    action = [&] {
      sweep_cfg.axis = parse_axis(axis);
      sweep_cfg.axis_values = values.empty() ? default_axis_values(sweep_cfg.axis) : values;
      if (seed_list.empty()) {
        if (num_seeds < 1) throw ConfigError("--num-seeds must be at least 1");
        for (int i = 0; i < num_seeds; ++i) seed_list.push_back(sweep_seed + static_cast<std::uint64_t>(i));
      }
      sweep_cfg.seeds = seed_list;
      sweep_cfg.jobs = jobs;
      sweep_cfg.rank_tolerance = rank_tol;
      sweep_cfg.output_path = fs::path(out_dir);
      detail::ConfigEcho e("sweep");
      e.add("axis", axis).add("values", detail::join(sweep_cfg.axis_values)).add("n", sweep_cfg.n)
          .add("d1", sweep_cfg.d1).add("d2", sweep_cfg.d2).add("k", sweep_cfg.k)
          .add("tie_d_to_k", sweep_cfg.tie_d_to_k).add("noise_sigma", sweep_cfg.noise_sigma)
          .add("seeds", detail::join(sweep_cfg.seeds)).add("jobs", jobs).add("timing", sweep_cfg.record_timing)
          .add("rank_tol", rank_tol).add("out", out_dir);
      e.print(err);
      const std::vector<SweepRecord> records = run_sweep(sweep_cfg);
      const fs::path dir(out_dir);
      render_sweep_plots(read_text(dir / "sweep.csv"), dir);
      std::size_t failed = 0, perfect = 0;
      for (const auto& r : records) {
        if (!r.error.empty()) ++failed;
        if (r.perfect) ++perfect;
      }
      out << records.size() << " records (" << perfect << " perfect, " << failed << " failed) -> "
          << (dir / "sweep.csv").string() << '\n';
      return kOk;
    };
  });

  // ---- baseline ----
  detail::WorldFlags base_world;
  ContrastiveConfig cc;
  bool whiten = false;
  CLI::App* baseline = app.add_subcommand(
      "baseline",
      "Train the linear InfoNCE baseline on a synthetic world and compare it with perfect alignment.\n"
      "Writes A1.csv, A2.csv, Z1hat.csv, Z2hat.csv (baseline encoders), loss_history.csv,\n"
      "comparison.csv, manifest.json and embeddings/ (input for align-embeddings).");
  base_world.attach(baseline);
  baseline->add_option("--temperature", cc.temperature, "InfoNCE temperature")->capture_default_str();
  baseline->add_option("--lr", cc.learning_rate, "gradient-descent step size")->capture_default_str();
  baseline->add_option("--epochs", cc.epochs, "training epochs")->capture_default_str();
  baseline->add_option("--batch-size", cc.batch_size, "pairs per batch, 0 = full batch")->capture_default_str();
  baseline->add_option("--init-scale", cc.init_scale, "std. dev. of the Gaussian initialization")
      ->capture_default_str();
  baseline->add_flag("--whiten", whiten, "train on second-moment whitened inputs");
  add_common(baseline, true);
  baseline->callback([&] {
    action = [&] {
      cc.k = base_world.k;
      cc.seed = base_world.seed;
      cc.whiten = whiten;
      detail::ConfigEcho e("baseline");
      base_world.echo(e);
      e.add("temperature", cc.temperature).add("lr", cc.learning_rate).add("epochs", cc.epochs)
          .add("batch_size", cc.batch_size).add("init_scale", cc.init_scale).add("whiten", cc.whiten)
          .add("rank_tol", rank_tol).add("out", out_dir);
      e.print(err);
      const WorldConfig wc = base_world.config();
      const SyntheticWorld w = make_world(wc);
      const BaselineComparison cmp = compare_with_baseline(w, cc, rank_tol);
      const fs::path dir(out_dir);
      const Matrix z1 = encode(cmp.training.a1, w.x_list[0]);
      const Matrix z2 = encode(cmp.training.a2, w.x_list[1]);
      write_matrix_csv(dir / "A1.csv", cmp.training.a1);
      write_matrix_csv(dir / "A2.csv", cmp.training.a2);
      write_matrix_csv(dir / "Z1hat.csv", z1);
      write_matrix_csv(dir / "Z2hat.csv", z2);
      std::string hist = "epoch,loss\n";
      for (std::size_t i = 0; i < cmp.training.loss_history.size(); ++i) {
        hist += std::to_string(i) + "," + format_double(cmp.training.loss_history[i]) + "\n";
      }
      atomic_write_text(dir / "loss_history.csv", hist);
      atomic_write_text(dir / "comparison.csv", "method," + report_csv_header() + "\nperfect," +
                                                    report_csv_row(cmp.perfect) + "\ncontrastive," +
                                                    report_csv_row(cmp.contrastive) + "\n");
      nlohmann::json m = world_manifest(wc);
      m["contrastive"] = {{"k", cc.k}, {"temperature", cc.temperature}, {"learning_rate", cc.learning_rate},
                          {"epochs", cc.epochs}, {"batch_size", cc.batch_size}, {"init_scale", cc.init_scale},
                          {"whiten", cc.whiten}, {"optimizer", "plain gradient descent"}};
      write_json(dir / "manifest.json", m);
      save_embedding_pairs(dir / "embeddings", contrastive_embeddings(w, cmp.training, wc.seed));
      if (json) {
        nlohmann::json j;
        j["perfect_alignment"] = report_json(cmp.perfect);
        j["contrastive"] = report_json(cmp.contrastive);
        j["final_loss"] = cmp.training.loss_history.empty() ? nlohmann::json(nullptr)
                                                            : nlohmann::json(cmp.training.loss_history.back());
        out << j.dump(2) << '\n';
      } else {
        out << "-- perfect alignment --\n" << report_text(cmp.perfect) << "-- contrastive baseline --\n"
            << report_text(cmp.contrastive);
      }
      return kOk;
    };
  });

  // ---- align-embeddings ----
  std::string emb_dir;
  AlignEmbeddingsOptions ao;
  CLI::App* align = app.add_subcommand(
      "align-embeddings",
      "Align precomputed paired embeddings. --dir holds Z1.csv (d1 x n), Z2.csv (d2 x n), optional\n"
      "labels.csv and manifest.json with keys d1, d2, n, producer, seed.\n"
      "Writes A1.csv, A2.csv, Z1hat.csv, Z2hat.csv, report.csv and, with a holdout, heldout_report.csv.");
  align->add_option("--dir", emb_dir, "embedding pair directory")->required();
  align->add_option("--k", ao.k, "latent dimension")->required();
  align->add_option("--holdout-fraction", ao.holdout_fraction, "fraction of pairs held out from the solve")
      ->capture_default_str();
  align->add_option("--seed", ao.split_seed, "seed of the holdout split")->capture_default_str();
  add_common(align, true);
  align->callback([&] {
    action = [&] {
      ao.rank_tolerance = rank_tol;
      detail::ConfigEcho e("align-embeddings");
      e.add("dir", emb_dir).add("k", ao.k).add("holdout_fraction", ao.holdout_fraction).add("seed", ao.split_seed)
          .add("rank_tol", rank_tol).add("out", out_dir);
      e.print(err);
      if (ao.k < 1) throw ConfigError("--k must be at least 1");
      const EmbeddingPairSet pairs = load_embedding_pairs(emb_dir);
      detail::warn_k_equals_d(err, ao.k, static_cast<int>(pairs.z1_features.rows() + pairs.z2_features.rows()));
      const AlignEmbeddingsResult r = align_embeddings(pairs, ao);
      const fs::path dir(out_dir);
      write_solution_files(dir, r.solution, r.z1_hat, r.z2_hat);
      write_report_files(dir, r.train_report);
      if (r.heldout_report) {
        atomic_write_text(dir / "heldout_report.csv",
                          report_csv_header() + "\n" + report_csv_row(*r.heldout_report) + "\n");
      }
      if (json) {
        nlohmann::json j;
        j["train"] = report_json(r.train_report);
        if (r.heldout_report) j["heldout"] = report_json(*r.heldout_report);
        if (r.train_cmae_before) j["train_cmae_before"] = *r.train_cmae_before;
        if (r.heldout_cmae_before) j["heldout_cmae_before"] = *r.heldout_cmae_before;
        j["perfect"] = r.solution.perfect;
        out << j.dump(2) << '\n';
      } else {
        out << "-- train (" << r.train_index.size() << " pairs) --\n" << report_text(r.train_report);
        if (r.train_cmae_before) out << "CMAE before        " << format_double(*r.train_cmae_before) << '\n';
        if (r.heldout_report) {
          out << "-- held out (" << r.heldout_index.size() << " pairs) --\n" << report_text(*r.heldout_report);
          if (r.heldout_cmae_before) out << "CMAE before        " << format_double(*r.heldout_cmae_before) << '\n';
        }
      }
      return kOk;
    };
  });

  // ---- boundary ----
  std::uint64_t b_seed = 0;
  int b_n = 2000;
  double b_margin = 10.0;
  CLI::App* boundary = app.add_subcommand(
      "boundary",
      "Uniform latents on both sides of y = x - 10 (x in [-10, 20]), d1 = d2 = k = 2; solves the\n"
      "alignment and searches for a hyperplane separating the classes in Z1hat.");
  boundary->add_option("--seed", b_seed, "world seed")->capture_default_str();
  boundary->add_option("--n", b_n, "number of samples (even)")->capture_default_str();
  boundary->add_option("--margin", b_margin, "maximum distance from the line")->capture_default_str();
  add_common(boundary, true);
  boundary->callback([&] {
    action = [&] {
      detail::ConfigEcho e("boundary");
      e.add("seed", b_seed).add("n", b_n).add("margin", b_margin).add("d1", 2).add("d2", 2).add("k", 2)
          .add("rank_tol", rank_tol).add("out", out_dir);
      e.print(err);
      SuiteOptions o;
      o.world.seed = b_seed;
      o.world.n = b_n;
      o.world.family = LatentFamily::UniformBoundary;
      o.world.boundary_margin = b_margin;
      o.rank_tolerance = rank_tol;
      o.out_dir = fs::path(out_dir);
      const SuiteResult r = run_suite(o);
      nlohmann::json hp = nullptr;
      if (r.separating_hyperplane) {
        const auto& h = *r.separating_hyperplane;
        hp = {{"normal", std::vector<double>(h.normal.data(), h.normal.data() + h.normal.size())},
              {"offset", h.offset},
              {"min_margin", min_signed_margin(h, r.z1_hat, r.world.labels)}};
      }
      write_json(fs::path(out_dir) / "separation.json", {{"separable", r.separating_hyperplane.has_value()},
                                                         {"hyperplane", hp}});
      if (json) {
        nlohmann::json j = report_json(r.report);
        j["perfect"] = r.solution.perfect;
        j["separable"] = r.separating_hyperplane.has_value();
        j["hyperplane"] = hp;
        out << j.dump(2) << '\n';
      } else {
        out << report_text(r.report) << "separable          " << (r.separating_hyperplane ? "yes" : "no") << '\n';
      }
      return kOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << " (see --help)\n";
    return kUsage;
  }

  try {
    return action ? action() : kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace perfalign::cli
