#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "akd/checkpoint.hpp"
#include "akd/compare.hpp"
#include "akd/config.hpp"
#include "akd/error.hpp"
#include "akd/gradcheck_suite.hpp"
#include "akd/metrics.hpp"
#include "akd/plots.hpp"
#include "akd/trainer.hpp"

using namespace akd;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("akd_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.dataset.n = 240;
  cfg.dataset.classes = 3;
  cfg.teacher_widths = {2, 24, 3};
  cfg.teacher_epochs = 5;
  cfg.student_widths = {2, 6, 3};
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.out_dir = out.string();
  return cfg;
}

std::string parse_error(const fs::path& p) {
  try {
    read_metrics_csv(p);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  const ExperimentConfig cfg = parse_config("{}");
  EXPECT_EQ(cfg.method, Method::kDynamicCam);
  EXPECT_EQ(cfg.epochs, 20u);
  EXPECT_EQ(cfg.teacher_widths, (std::vector<std::size_t>{2, 256, 256, 4}));
}

TEST(Config, ParsesEveryKind) {
  const ExperimentConfig cfg = parse_config(R"({
    "dataset.kind": "blobs", "dataset.n": 300, "dataset.classes": 3, "dataset.dim": 5,
    "teacher.widths": [5, 32, 3], "student.widths": [5, 4, 3],
    "optimizer.kind": "sgd", "optimizer.lr": 0.1, "optimizer.momentum": 0.9,
    "method": "learnable", "theta0": -1.5, "temperature": 2.5, "seed": 18446744073709551615,
    "compare.methods": ["fixed", "dynamic+cam"], "compare.seeds": [3, 1, 2],
    "cam.alpha_policy": "fixed", "sign_flip": true })");
  EXPECT_EQ(cfg.dataset.kind, DatasetKind::kBlobs);
  EXPECT_EQ(cfg.optimizer.kind, OptimizerKind::kSgd);
  EXPECT_EQ(cfg.optimizer.momentum, 0.9);
  EXPECT_EQ(cfg.method, Method::kLearnable);
  EXPECT_EQ(cfg.seed, 18446744073709551615ULL);
  EXPECT_EQ(cfg.compare_seeds, (std::vector<std::uint64_t>{3, 1, 2}));
  EXPECT_EQ(cfg.cam.alpha_policy, Method::kFixed);
  EXPECT_TRUE(cfg.sign_flip);
  EXPECT_TRUE(std::holds_alternative<LearnableAlpha>(cfg.alpha_policy()));
  EXPECT_TRUE(std::holds_alternative<FixedAlpha>(cfg.alpha_policy_for(Method::kDynamicCam)));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config(R"({"temprature": 4})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"temperature": 0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"temperature": "4"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"epochs": 0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"batch_size": 0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"epochs": -3})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"epochs": 2.5})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"method": "cam"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"alpha0": 1.2})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"k": 0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"cam.alpha_policy": "dynamic+cam"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"student.widths": [3, 16, 4]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"student.widths": [2, 16, 5]})"), ConfigError);
  EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Config, DigestIgnoresOutputDirectoryOnly) {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.out_dir = "elsewhere";
  EXPECT_EQ(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 16u);
  b.k = 2.0;
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(parse_config(canonical_json(a)).k, a.k);
}

TEST(Config, SeedStreamsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (auto s : {SeedStream::kDataset, SeedStream::kTeacherInit, SeedStream::kTeacherShuffle,
                 SeedStream::kStudentInit, SeedStream::kStudentShuffle, SeedStream::kCamInit}) {
    seen.insert(derive_seed(1, s));
    seen.insert(derive_seed(2, s));
  }
  EXPECT_EQ(seen.size(), 12u);
  EXPECT_EQ(derive_seed(5, SeedStream::kDataset), derive_seed(5, SeedStream::kDataset));
}

TEST(MetricsCsv, RoundTripIsLossless) {
  const auto dir = scratch_dir("csv");
  std::vector<MetricsRow> rows;
  for (std::size_t e = 1; e <= 3; ++e) {
    rows.push_back({e, Split::kTrain, 0.1 / e, 1.0 / 3.0, std::nextafter(2.0, 3.0), 0.875, 0.5,
                    1e-300, 5e-324});
    rows.push_back({e, Split::kVal, 1e10, 0.0, -0.0, 1.0, 0.26894142136999510, 0.0, 0.125});
  }
  {
    MetricsCsvWriter w(dir / "m.csv");
    for (const auto& r : rows) w.write(r);
  }
  EXPECT_EQ(read_metrics_csv(dir / "m.csv"), rows);
  const std::string text = slurp(dir / "m.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), kMetricsHeader);
  EXPECT_EQ(count(text, "\n"), 7u);
}

TEST(MetricsCsv, FlushesEachRow) {
  const auto dir = scratch_dir("flush");
  MetricsCsvWriter w(dir / "m.csv");
  w.write({1, Split::kTrain, 1, 1, 1, 0.5, 0.5, 0, 0});
  EXPECT_EQ(read_metrics_csv(dir / "m.csv").size(), 1u);
}

TEST(MetricsCsv, MalformedFilesNameFileAndLine) {
  const auto dir = scratch_dir("badcsv");
  std::ofstream(dir / "empty.csv").close();
  EXPECT_NE(parse_error(dir / "empty.csv").find("empty.csv"), std::string::npos);
  std::ofstream(dir / "header_only.csv") << kMetricsHeader << "\n";
  EXPECT_FALSE(parse_error(dir / "header_only.csv").empty());
  std::ofstream(dir / "bad_header.csv") << "epoch,split\n1,train\n";
  EXPECT_NE(parse_error(dir / "bad_header.csv").find(":1"), std::string::npos);
  std::ofstream(dir / "short_row.csv") << kMetricsHeader << "\n1,train,1,1,1,0.5,0.5,0,0\n2,val,1,1\n";
  EXPECT_NE(parse_error(dir / "short_row.csv").find("short_row.csv:3"), std::string::npos);
  std::ofstream(dir / "bad_split.csv") << kMetricsHeader << "\n1,test,1,1,1,0.5,0.5,0,0\n";
  EXPECT_NE(parse_error(dir / "bad_split.csv").find(":2"), std::string::npos);
  std::ofstream(dir / "bad_num.csv") << kMetricsHeader << "\n1,train,x,1,1,0.5,0.5,0,0\n";
  EXPECT_NE(parse_error(dir / "bad_num.csv").find(":2"), std::string::npos);
  EXPECT_THROW(read_metrics_csv(dir / "missing.csv"), IoError);
}

TEST(Plots, TwoMethodsGiveTwoSeriesWithLegends) {
  std::vector<PlotSeries> series(2);
  series[0].label = "fixed";
  series[1].label = "dynamic";
  for (std::size_t e = 1; e <= 4; ++e) {
    series[0].rows.push_back({e, Split::kTrain, 1, 0.1, 1.0 / e, 0.5, 0.5, 0, 0.1});
    series[0].rows.push_back({e, Split::kVal, 1, 0.1, 1.2 / e, 0.6 + e * 0.05, 0.5, 0, 0.1});
    series[1].rows.push_back({e, Split::kTrain, 1, 0.1, 1.1 / e, 0.5, 0.3, 0.05, 0.2});
    series[1].rows.push_back({e, Split::kVal, 1, 0.1, 1.3 / e, 0.5 + e * 0.05, 0.3, 0.05, 0.2});
  }
  const std::string acc = render_accuracy_svg(series);
  EXPECT_EQ(count(acc, "<polyline class=\"series\""), 2u);
  EXPECT_EQ(count(acc, "class=\"legend-entry\""), 2u);
  EXPECT_NE(acc.find(">fixed</text>"), std::string::npos);
  EXPECT_NE(acc.find(">dynamic</text>"), std::string::npos);
  EXPECT_NE(acc.find("viewBox=\"0 0 800 500\""), std::string::npos);
  EXPECT_NE(acc.find("class=\"x-label\""), std::string::npos);
  EXPECT_NE(acc.find("class=\"y-label\""), std::string::npos);

  const std::string loss = render_loss_svg(series);
  EXPECT_EQ(count(loss, "<polyline class=\"series\""), 4u);
  EXPECT_EQ(count(loss, "class=\"legend-entry\""), 4u);

  const std::string alpha = render_alpha_svg(series);
  EXPECT_EQ(count(alpha, "<polyline class=\"series\""), 2u);
  EXPECT_EQ(count(alpha, "<polygon class=\"band\""), 2u);
}

TEST(Plots, FixedAlphaIsAFlatLine) {
  std::vector<PlotSeries> series(1);
  series[0].label = "fixed";
  for (std::size_t e = 1; e <= 5; ++e) series[0].rows.push_back({e, Split::kTrain, 1, 1, 1, 0.5, 0.5, 0, 0});
  const std::string svg = render_alpha_svg(series);
  const std::regex points("<polyline class=\"series\"[^>]*points=\"([^\"]*)\"");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, points));
  std::istringstream pts(m[1].str());
  std::string pair;
  std::set<std::string> ys;
  while (pts >> pair) ys.insert(pair.substr(pair.find(',') + 1));
  EXPECT_EQ(ys.size(), 1u);
}

TEST(Plots, EmitWritesThreeFilesAndLabelsBySeed) {
  const auto dir = scratch_dir("plots");
  for (const char* name : {"metrics_fixed_1.csv", "metrics_fixed_2.csv", "metrics_dynamic+cam_1.csv"}) {
    MetricsCsvWriter w(dir / name);
    w.write({1, Split::kTrain, 1, 1, 1, 0.5, 0.5, 0, 0});
    w.write({1, Split::kVal, 1, 1, 1, 0.6, 0.5, 0, 0});
  }
  const PlotFiles files = emit_plots({dir / "metrics_fixed_1.csv", dir / "metrics_fixed_2.csv",
                                      dir / "metrics_dynamic+cam_1.csv"},
                                     dir / "svg");
  EXPECT_TRUE(fs::exists(files.loss));
  EXPECT_TRUE(fs::exists(files.alpha));
  const std::string acc = slurp(files.accuracy);
  EXPECT_NE(acc.find(">fixed seed 1</text>"), std::string::npos);
  EXPECT_NE(acc.find(">fixed seed 2</text>"), std::string::npos);
  EXPECT_NE(acc.find(">dynamic+cam</text>"), std::string::npos);
  EXPECT_EQ(series_label("metrics_dynamic+cam_12.csv"), "dynamic+cam");
  EXPECT_EQ(series_label("other.csv"), "other");
}

TEST(Plots, EmptyCsvIsParseError) {
  const auto dir = scratch_dir("plots_empty");
  std::ofstream(dir / "metrics_fixed_1.csv").close();
  EXPECT_THROW(emit_plots({dir / "metrics_fixed_1.csv"}, dir), ParseError);
  EXPECT_THROW(emit_plots({}, dir), ParameterError);
}

TEST(RunExperiment, OneEpochGivesTwoRows) {
  for (Method m : kAllMethods) {
    auto cfg = small_config(scratch_dir("one_epoch"));
    cfg.epochs = 1;
    cfg.method = m;
    const RunResult r = run_experiment(cfg);
    ASSERT_EQ(r.rows.size(), 2u) << method_name(m);
    EXPECT_EQ(r.rows[0].split, Split::kTrain);
    EXPECT_EQ(r.rows[1].split, Split::kVal);
    EXPECT_EQ(read_metrics_csv(r.metrics_path), r.rows);
    EXPECT_EQ(r.metrics_path.filename().string(), "metrics_" + std::string(method_name(m)) + "_1.csv");
    EXPECT_TRUE(load_checkpoint(r.student_checkpoint) == load_checkpoint(r.student_checkpoint));
  }
}

TEST(RunExperiment, FixedAlphaLogsHalfEverywhere) {
  auto cfg = small_config(scratch_dir("fixed"));
  cfg.method = Method::kFixed;
  for (const MetricsRow& row : run_experiment(cfg).rows) {
    EXPECT_EQ(row.alpha_mean, 0.5);
    EXPECT_EQ(row.alpha_std, 0.0);
  }
}

TEST(RunExperiment, SelfDistillationHasNoDiscrepancy) {
  auto cfg = small_config(scratch_dir("self"));
  cfg.method = Method::kDynamic;
  cfg.student_widths = cfg.teacher_widths;
  cfg.student_init_from_teacher = true;
  cfg.epochs = 1;
  const RunResult r = run_experiment(cfg);
  for (const MetricsRow& row : r.rows) {
    EXPECT_LT(row.dist_mean, 1e-3);
    EXPECT_NEAR(row.alpha_mean, 0.5, 1e-2);
  }
  // Before any update the student equals the teacher exactly.
  const Dataset data = build_dataset(cfg);
  const MlpModel teacher = ensure_teacher(cfg, data);
  DistillationRun run(cfg, data, teacher);
  const MetricsRow before = run.evaluate(0);
  EXPECT_EQ(before.dist_mean, 0.0);
  EXPECT_EQ(before.alpha_mean, 0.5);
  EXPECT_NEAR(before.kd_loss, 0.0, 1e-12);
}

TEST(RunExperiment, StatisticsComeFromTheStepVectors) {
  auto cfg = small_config(scratch_dir("stats"));
  cfg.method = Method::kDynamic;
  const Dataset data = build_dataset(cfg);
  const MlpModel teacher = ensure_teacher(cfg, data);
  DistillationRun run(cfg, data, teacher);
  const std::vector<std::size_t> rows(data.train_indices.begin(), data.train_indices.begin() + 8);
  const StepOutcome s = run.step(rows);
  ASSERT_EQ(s.alpha.size(), 8u);
  double mean_total = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(s.alpha[i], dynamic_alpha(std::span<const double>(&s.dist[i], 1), cfg.k)[0]);
    EXPECT_NEAR(s.total[i], s.alpha[i] * s.ce[i] + (1 - s.alpha[i]) * 16.0 * s.kd[i], 1e-12);
    mean_total += s.total[i];
  }
  EXPECT_NEAR(s.loss, mean_total / 8, 1e-12);
  ASSERT_EQ(run.trace().records().size(), 1u);
  EXPECT_EQ(run.steps_taken(), 1u);
}

TEST(RunExperiment, MissingTeacherWithoutTrainingIsIoError) {
  auto cfg = small_config(scratch_dir("noteacher"));
  cfg.teacher_train_if_missing = false;
  EXPECT_THROW(run_experiment(cfg), IoError);
}

TEST(RunExperiment, MismatchedTeacherCheckpointIsConfigError) {
  const auto dir = scratch_dir("mismatch");
  auto cfg = small_config(dir);
  save_checkpoint(MlpModel::random({2, 5, 3}, 1), teacher_checkpoint_path(cfg));
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(RunExperiment, RerunIsByteIdentical) {
  auto cfg = small_config(scratch_dir("rerun_a"));
  const RunResult a = run_experiment(cfg);
  cfg.out_dir = scratch_dir("rerun_b").string();
  const RunResult b = run_experiment(cfg);
  EXPECT_EQ(slurp(a.metrics_path), slurp(b.metrics_path));
  EXPECT_EQ(slurp(a.student_checkpoint), slurp(b.student_checkpoint));
  EXPECT_EQ(slurp(teacher_checkpoint_path(cfg)), slurp(fs::path(a.metrics_path).parent_path() / "teacher_1.akd"));
}

TEST(Compare, NeedsTwoMethodsAndThreeSeeds) {
  auto cfg = small_config(scratch_dir("cmp_contract"));
  cfg.compare_methods = {Method::kFixed};
  EXPECT_THROW(compare_methods(cfg), ParameterError);
  cfg.compare_methods = {Method::kFixed, Method::kFixed};
  EXPECT_THROW(compare_methods(cfg), ParameterError);
  cfg.compare_methods = {Method::kFixed, Method::kDynamic};
  cfg.compare_seeds = {1, 2};
  EXPECT_THROW(compare_methods(cfg), ParameterError);
  cfg.compare_seeds = {1, 1, 2};
  EXPECT_THROW(compare_methods(cfg), ParameterError);
}

TEST(Compare, ReportsAreDeterministicAcrossJobCounts) {
  auto cfg = small_config(scratch_dir("cmp_a"));
  cfg.epochs = 2;
  cfg.compare_methods = {Method::kDynamic, Method::kFixed};
  cfg.compare_seeds = {3, 1, 2};
  const ComparisonReport serial = compare_methods(cfg, 1);
  ASSERT_EQ(serial.methods.size(), 2u);
  EXPECT_EQ(serial.methods[0].method, Method::kFixed);
  EXPECT_EQ(serial.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_FALSE(serial.has_reference_ordering);
  const std::string text_a = slurp(fs::path(cfg.out_dir) / "report.txt");
  const std::string csv_a = slurp(fs::path(cfg.out_dir) / "report.csv");
  EXPECT_NE(text_a.find("not evaluated"), std::string::npos);
  EXPECT_EQ(count(csv_a, "\n"), 3u);

  cfg.out_dir = scratch_dir("cmp_b").string();
  compare_methods(cfg, 3);
  EXPECT_EQ(slurp(fs::path(cfg.out_dir) / "report.txt"), text_a);
  EXPECT_EQ(slurp(fs::path(cfg.out_dir) / "report.csv"), csv_a);
  EXPECT_EQ(slurp(fs::path(cfg.out_dir) / "metrics_dynamic_2.csv"),
            slurp(fs::temp_directory_path() / "akd_harness_cmp_a" / "metrics_dynamic_2.csv"));
}

TEST(Compare, ReferenceOrderingVerdict) {
  ComparisonReport r;
  r.seeds = {1, 2, 3};
  r.digest = "0123456789abcdef";
  const double means[] = {0.80, 0.81, 0.82, 0.83};
  for (std::size_t i = 0; i < 4; ++i) {
    r.methods.push_back({kAllMethods[i], {means[i], means[i], means[i]}, means[i], 0.0});
  }
  r.has_reference_ordering = true;
  r.matches_reference_ordering = true;
  const std::string text = render_report_text(r);
  EXPECT_NE(text.find("fixed < learnable < dynamic < dynamic+cam: MATCHED"), std::string::npos);
  EXPECT_NE(text.find("0123456789abcdef"), std::string::npos);
  const std::string csv = render_report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,mean_val_accuracy,std_val_accuracy,seeds,val_accuracies,digest");
}

TEST(Compare, FailingPairIsNamed) {
  auto cfg = small_config(scratch_dir("cmp_fail"));
  cfg.compare_methods = {Method::kFixed, Method::kDynamic};
  cfg.compare_seeds = {1, 2, 3};
  cfg.teacher_train_if_missing = false;
  try {
    compare_methods(cfg);
    FAIL() << "expected failure";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("seed"), std::string::npos) << e.what();
  }
}

TEST(GradCheckSuite, DefaultSettingsPass) {
  const GradCheckReport report = run_grad_check_suite(GradCheckSettings{});
  EXPECT_TRUE(report.passed()) << render_grad_check(report);
  for (const char* name : {"cross_entropy", "kd_kl", "combined_fixed", "combined_learnable",
                           "combined_dynamic", "cam_pipeline", "mlp"}) {
    const GradCheckComponent* c = report.find(name);
    ASSERT_NE(c, nullptr) << name;
    EXPECT_LT(c->max_rel_error, 1e-4) << name;
    EXPECT_GT(c->checks, 0u);
  }
}

TEST(GradCheckSuite, WrongKlBackwardIsReported) {
  const KdLossFn broken = [](Var z, const ProbBatch& target, double T) {
    Var kl = kd_kl(z, target, T);
    return sub(scale(kl, 2.0), detach(kl));  // right value, doubled gradient
  };
  const GradCheckReport report = run_grad_check_suite(GradCheckSettings{}, broken);
  EXPECT_FALSE(report.passed());
  EXPECT_FALSE(report.find("kd_kl")->passed);
  EXPECT_TRUE(report.find("cross_entropy")->passed);
  EXPECT_NE(render_grad_check(report).find("FAIL"), std::string::npos);
}

TEST(GradCheckSuite, OversizedShapeIsParameterError) {
  GradCheckSettings s;
  s.batch = 9;
  s.classes = 8;  // 72 logits
  EXPECT_THROW(run_grad_check_suite(s), ParameterError);
}
