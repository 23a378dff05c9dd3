#include <gtest/gtest.h>

#include <cmath>

#include "perfalign/experiments.hpp"
#include "test_util.hpp"

using namespace perfalign;

TEST(SyntheticSuite, DefaultRun) {
  const SuiteResult r = run_synthetic_suite(0);
  EXPECT_TRUE(r.solution.perfect);
  EXPECT_LT(r.report.cmae, 1e-10);
  EXPECT_GT(r.report.mlre_avg, 1.0);
  EXPECT_LE(r.structure_residual, 1e-8);
}

TEST(SyntheticSuite, IdentityGenerationPseudoInverse) {
  // S1 = S2 = I: the pseudo-inverse encoding is the data itself.
  const SyntheticWorld w = make_paper_gmm_world(1);
  EXPECT_LE(mlre(w.z_true, pseudo_inverse_encode(Matrix::Identity(2, 2), w.z_true)), 1e-12);
}

TEST(SyntheticSuite, WritesArtifacts) {
  const auto dir = testutil::temp_dir("suite");
  run_synthetic_suite(2, dir);
  for (const char* f : {"Z.csv", "labels.csv", "S1.csv", "S2.csv", "X1.csv", "X2.csv", "manifest.json", "A1.csv",
                        "A2.csv", "Z1hat.csv", "Z2hat.csv", "zhat_scatter.csv", "report.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const Matrix x1 = read_matrix_csv(dir / "X1.csv");
  EXPECT_EQ(x1, make_paper_gmm_world(2).x_list[0]);
  const auto manifest = read_json(dir / "manifest.json");
  EXPECT_EQ(manifest.at("seed"), 2);
  EXPECT_EQ(manifest.at("family"), "gmm");
  const std::string scatter = read_text(dir / "zhat_scatter.csv");
  EXPECT_EQ(scatter.substr(0, scatter.find('\n')), "sample,modality,label,z1,z2");
}

TEST(BoundarySuite, DefaultRun) {
  const SuiteResult r = run_boundary_suite(0);
  EXPECT_LT(r.report.cmae, 1e-10);
  EXPECT_GT(r.report.mlre_avg, 1.0);
  ASSERT_TRUE(r.separating_hyperplane.has_value());
  EXPECT_TRUE(separates(*r.separating_hyperplane, r.z1_hat, r.world.labels));
}

TEST(Separability, FindsAndRejects) {
  Matrix z(2, 4);
  z << 0, 1, 3, 4, 0, 1, 3, 4;
  EXPECT_TRUE(find_separating_hyperplane(z, {0, 0, 1, 1}).has_value());
  // XOR is not linearly separable.
  Matrix x(2, 4);
  x << 0, 1, 0, 1, 0, 0, 1, 1;
  EXPECT_FALSE(find_separating_hyperplane(x, {0, 1, 1, 0}, 200).has_value());
  EXPECT_THROW(find_separating_hyperplane(x, {0, 1, 1}), DimensionError);
}

TEST(Separability, TinyGapRelativeToSpread) {
  // Two clouds 1e-4 apart across y = x, spread over [-100, 100].
  CounterRng rng(3);
  Matrix z(2, 400);
  std::vector<int> labels(400);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const double t = rng.uniform(-100, 100), off = 1e-4 + rng.uniform(0, 5);
    const int l = i % 2;
    z(0, i) = t - (l ? off : -off);
    z(1, i) = t + (l ? off : -off);
    labels[static_cast<std::size_t>(i)] = l;
  }
  const auto h = find_separating_hyperplane(z, labels);
  ASSERT_TRUE(h.has_value());
  EXPECT_GT(min_signed_margin(*h, z, labels), 0.0);
  // A label-1 copy of a label-0 point breaks separability.
  z.col(1) = z.col(0);
  EXPECT_FALSE(find_separating_hyperplane(z, labels).has_value());
}

TEST(Separability, ThreeDimensionsAndSingleClass) {
  const Matrix z = testutil::gaussian(3, 60, 4);
  std::vector<int> labels(60);
  for (Eigen::Index i = 0; i < 60; ++i) labels[static_cast<std::size_t>(i)] = z(0, i) + 2 * z(2, i) > 0.3;
  ASSERT_TRUE(find_separating_hyperplane(z, labels).has_value());
  EXPECT_TRUE(separates(*find_separating_hyperplane(z, labels), z, labels));
  const std::vector<int> ones(60, 1);
  EXPECT_TRUE(separates(*find_separating_hyperplane(z, ones), z, ones));
}

TEST(Helpers, FitLinearImageAndMedian) {
  const Matrix z = testutil::gaussian(3, 50, 1);
  const Matrix m = testutil::gaussian(2, 3, 2);
  const LinearImageFit fit = fit_linear_image(z, m * z);
  EXPECT_LT((fit.map - m).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(fit.residual, 1e-12);
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median({}), ConfigError);
}

// ---- baseline ----

TEST(Baseline, SmallWorldComparison) {
  WorldConfig wc;
  wc.n = 300;
  wc.seed = 1;
  const SyntheticWorld w = make_world(wc);
  ContrastiveConfig c;
  c.epochs = 30;
  c.batch_size = 100;
  const BaselineComparison cmp = compare_with_baseline(w, c);
  EXPECT_LT(cmp.perfect.cmae, 1e-10);
  EXPECT_GT(cmp.contrastive.cmae, 1e6 * cmp.perfect.cmae);
  EXPECT_EQ(cmp.training.loss_history.size(), 30u);
}

// ---- sweeps ----

TEST(Sweep, KSweepWithTiedDimensionsIsPerfect) {
  SweepConfig c;
  c.axis = SweepAxis::K;
  c.axis_values = {1, 2, 4, 8};
  c.tie_d_to_k = true;
  c.n = 300;
  c.seeds = {0, 1, 2};
  for (const SweepRecord& r : run_sweep(c)) {
    EXPECT_EQ(r.d1, r.k);
    EXPECT_TRUE(r.perfect);
    EXPECT_LE(r.cmae, 1e-9);
    EXPECT_TRUE(r.error.empty());
  }
}

TEST(Sweep, OrderedAndParallelMatchesSerial) {
  const auto dir = testutil::temp_dir("sweep_par");
  SweepConfig c;
  c.axis = SweepAxis::N;
  c.axis_values = {5, 20, 80};
  c.d1 = c.d2 = c.k = 4;
  c.noise_sigma = 1.0;
  c.seeds = {3, 1, 2};
  c.output_path = dir;
  c.jobs = 1;
  const auto serial = run_sweep(c);
  const std::string serial_csv = read_text(dir / "sweep.csv");
  c.jobs = 4;
  const auto parallel = run_sweep(c);
  EXPECT_EQ(read_text(dir / "sweep.csv"), serial_csv);
  EXPECT_EQ(sweep_csv(serial), serial_csv);
  ASSERT_EQ(parallel.size(), 9u);
  EXPECT_EQ(parallel[0].n, 5);
  EXPECT_EQ(parallel[0].seed, 3u);
  EXPECT_EQ(parallel[8].n, 80);
  EXPECT_EQ(parallel[8].seed, 2u);
  for (const auto& r : parallel) EXPECT_EQ(r.wall_time_ms, 0.0);
}

TEST(Sweep, CsvRoundTripAndErrorColumn) {
  SweepConfig c;
  c.axis = SweepAxis::N;
  c.axis_values = {1, 7};  // n = 1 still solves; odd n is fine for GMM
  c.d1 = c.d2 = 2;
  c.k = 2;
  c.seeds = {0};
  const auto recs = run_sweep(c);
  EXPECT_EQ(parse_sweep_csv(sweep_csv(recs)).size(), 2u);
  SweepRecord bad;
  bad.error = "boom, with comma";
  const auto parsed = parse_sweep_csv(sweep_csv({bad}));
  EXPECT_EQ(parsed[0].error, "boom; with comma");
  EXPECT_THROW(parse_sweep_csv("nope\n"), DataError);
}

TEST(Sweep, FailedPointsAreRecorded) {
  SweepConfig c;
  c.axis = SweepAxis::D;
  c.axis_values = {1, 2};
  c.k = 3;  // k = 3 > d = 2 at the first point
  c.n = 50;
  c.seeds = {0};
  const auto recs = run_sweep(c);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_FALSE(recs[0].error.empty());
  EXPECT_TRUE(recs[1].error.empty());
}

TEST(Sweep, Validation) {
  SweepConfig c;
  c.axis_values = {2, 2};
  EXPECT_THROW(run_sweep(c), ConfigError);
  c.axis_values = {40};
  EXPECT_THROW(run_sweep(c), ConfigError);  // k = 40 > d1 + d2 = 32
  c.axis_values = {1};
  c.seeds = {};
  EXPECT_THROW(run_sweep(c), ConfigError);
  EXPECT_THROW(parse_axis("q"), ConfigError);
  EXPECT_EQ(parse_axis("N"), SweepAxis::N);
}

TEST(Sweep, NoiselessMlreTrendAcrossK) {
  SweepConfig c;
  c.axis = SweepAxis::K;
  c.axis_values = {1, 2, 4, 8};
  c.n = 1000;
  c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto recs = run_sweep(c);
  std::map<int, std::vector<double>> by_k;
  for (const auto& r : recs) by_k[r.k].push_back(r.mlre_avg);
  double prev = -1.0;
  for (const auto& [k, v] : by_k) {
    EXPECT_GE(median(v), prev) << "k = " << k;
    prev = median(v);
  }
}

TEST(Plots, IdempotentAndOnePerMetric) {
  const auto dir = testutil::temp_dir("plots");
  SweepConfig c;
  c.axis = SweepAxis::K;
  c.axis_values = {1, 2, 4};
  c.n = 100;
  c.d1 = c.d2 = 4;
  c.seeds = {0, 1};
  c.output_path = dir;
  run_sweep(c);
  const std::string csv = read_text(dir / "sweep.csv");
  const auto files = render_sweep_plots(csv, dir);
  ASSERT_EQ(files.size(), 4u);
  const std::string first = read_text(dir / "cmae.svg");
  render_sweep_plots(csv, dir);
  EXPECT_EQ(read_text(dir / "cmae.svg"), first);
  EXPECT_EQ(first.rfind("<svg", 0), 0u);
  EXPECT_NE(first.find("(log10)"), std::string::npos);
  EXPECT_EQ(read_text(dir / "mlre_avg.svg").find("(log10)"), std::string::npos);
}

// ---- embeddings ----

TEST(Embeddings, SaveLoadRoundTrip) {
  const auto dir = testutil::temp_dir("emb");
  EmbeddingPairSet p;
  p.z1_features = testutil::gaussian(3, 10, 1);
  p.z2_features = testutil::gaussian(2, 10, 2);
  p.labels = std::vector<int>(10, 1);
  p.producer = "test";
  p.seed = 4;
  save_embedding_pairs(dir, p);
  const EmbeddingPairSet q = load_embedding_pairs(dir);
  EXPECT_EQ(q.z1_features, p.z1_features);
  EXPECT_EQ(q.z2_features, p.z2_features);
  EXPECT_EQ(q.producer, "test");
  EXPECT_EQ(q.seed, 4u);
  EXPECT_EQ(*q.labels, *p.labels);
  const auto m = read_json(dir / "manifest.json");
  for (const char* key : {"d1", "d2", "n", "producer", "seed"}) EXPECT_TRUE(m.contains(key)) << key;
  write_json(dir / "manifest.json", {{"d1", 9}, {"d2", 2}, {"n", 10}, {"producer", "x"}, {"seed", 0}});
  EXPECT_THROW(load_embedding_pairs(dir), DataError);
}

TEST(Embeddings, IdenticalFeaturesAlignExactly) {
  EmbeddingPairSet p;
  p.z1_features = testutil::gaussian(4, 50, 3);
  p.z2_features = p.z1_features;
  for (int k = 1; k <= 4; ++k) {
    AlignEmbeddingsOptions o;
    o.k = k;
    const auto r = align_embeddings(p, o);
    EXPECT_LT(r.train_report.cmae, 1e-12);
  }
}

TEST(Embeddings, HoldoutSplit) {
  auto [train, held] = holdout_split(100, 0.2, 1);
  EXPECT_EQ(held.size(), 20u);
  EXPECT_EQ(train.size(), 80u);
  std::vector<Eigen::Index> all(train);
  all.insert(all.end(), held.begin(), held.end());
  std::sort(all.begin(), all.end());
  for (Eigen::Index i = 0; i < 100; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
  EXPECT_THROW(holdout_split(10, 1.0, 0), ConfigError);
}

TEST(Embeddings, HeldOutWorseThanTrainOnNoisyFeatures) {
  std::vector<double> train, held;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    WorldConfig wc;
    wc.n = 40;
    wc.d1 = wc.d2 = 8;
    wc.k = 2;
    wc.noise_sigma = 1.0;
    wc.seed = seed;
    const SyntheticWorld w = make_world(wc);
    EmbeddingPairSet p;
    p.z1_features = w.x_list[0];
    p.z2_features = w.x_list[1];
    AlignEmbeddingsOptions o;
    o.k = 2;
    o.holdout_fraction = 0.5;
    o.split_seed = seed;
    const auto r = align_embeddings(p, o);
    train.push_back(r.train_report.cmae);
    held.push_back(r.heldout_report->cmae);
  }
  EXPECT_GE(median(held), median(train));
}
