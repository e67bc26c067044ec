// akd: command-line front end for the distillation experiments.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "akd/checkpoint.hpp"
#include "akd/compare.hpp"
#include "akd/config.hpp"
#include "akd/error.hpp"
#include "akd/gradcheck_suite.hpp"
#include "akd/plots.hpp"
#include "akd/trainer.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitVerification = 4;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_seed = true) {
  cmd->add_option("--config", opts.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  if (with_seed) cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--out", opts.out, "override the output directory");
}

akd::ExperimentConfig resolve(const CommonOptions& opts) {
  akd::ExperimentConfig cfg = opts.config.empty() ? akd::ExperimentConfig{} : akd::load_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.out.empty()) cfg.out_dir = opts.out;
  akd::validate(cfg);
  return cfg;
}

int train_teacher_command(const CommonOptions& opts) {
  const akd::ExperimentConfig cfg = resolve(opts);
  const akd::Dataset data = akd::build_dataset(cfg);
  const akd::SupervisedResult teacher = akd::train_teacher(cfg, data);
  const auto path = akd::teacher_checkpoint_path(cfg);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  akd::save_checkpoint(teacher.model, path);
  std::printf("teacher %s val_accuracy=%.4f\n", path.string().c_str(), teacher.val_accuracy);
  return 0;
}

int run_command(const CommonOptions& opts) {
  const akd::ExperimentConfig cfg = resolve(opts);
  const akd::RunResult result = akd::run_experiment(cfg);
  std::printf("metrics %s\nstudent %s\nfinal val_accuracy=%.4f\n",
              result.metrics_path.string().c_str(), result.student_checkpoint.string().c_str(),
              result.final_val_accuracy);
  return 0;
}

int compare_command(const CommonOptions& opts, std::size_t jobs) {
  const akd::ExperimentConfig cfg = resolve(opts);
  const akd::ComparisonReport report = akd::compare_methods(cfg, jobs);
  std::fputs(akd::render_report_text(report).c_str(), stdout);
  return 0;
}

int plot_command(const std::vector<std::string>& files, const std::string& out) {
  std::vector<std::filesystem::path> paths(files.begin(), files.end());
  const akd::PlotFiles written = akd::emit_plots(paths, out.empty() ? "." : out);
  std::printf("%s\n%s\n%s\n", written.loss.string().c_str(), written.accuracy.string().c_str(),
              written.alpha.string().c_str());
  return 0;
}

int grad_check_command(const CommonOptions& opts) {
  akd::ExperimentConfig cfg = opts.config.empty() ? akd::ExperimentConfig{} : akd::load_config(opts.config);
  if (opts.seed) cfg.gradcheck.seed = *opts.seed;
  akd::validate(cfg);
  const akd::GradCheckReport report = akd::run_grad_check_suite(cfg.gradcheck);
  std::fputs(akd::render_grad_check(report).c_str(), stdout);
  return report.passed() ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive knowledge distillation experiments"};
  app.require_subcommand(1);

  CommonOptions teacher_opts, run_opts, compare_opts, grad_opts;
  std::size_t jobs = 1;
  std::vector<std::string> plot_files;
  std::string plot_out;

  auto* teacher_cmd = app.add_subcommand("train-teacher", "train and save the teacher");
  add_common(teacher_cmd, teacher_opts);
  auto* run_cmd = app.add_subcommand("run", "distill one student and write its metrics CSV");
  add_common(run_cmd, run_opts);
  auto* compare_cmd = app.add_subcommand("compare", "run every (method, seed) pair and report");
  add_common(compare_cmd, compare_opts, false);
  compare_cmd->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  auto* plot_cmd = app.add_subcommand("plot", "render loss, accuracy and alpha SVGs");
  plot_cmd->add_option("csv", plot_files, "metrics CSV files")->required();
  plot_cmd->add_option("--out", plot_out, "output directory");
  auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference gradient verification");
  add_common(grad_cmd, grad_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*teacher_cmd) return train_teacher_command(teacher_opts);
    if (*run_cmd) return run_command(run_opts);
    if (*compare_cmd) return compare_command(compare_opts, jobs);
    if (*plot_cmd) return plot_command(plot_files, plot_out);
    if (*grad_cmd) return grad_check_command(grad_opts);
  } catch (const akd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const akd::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const akd::ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const akd::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const akd::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const akd::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
