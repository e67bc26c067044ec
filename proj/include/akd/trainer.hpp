#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "akd/alpha.hpp"
#include "akd/cam.hpp"
#include "akd/config.hpp"
#include "akd/data.hpp"
#include "akd/metrics.hpp"
#include "akd/mlp.hpp"
#include "akd/optim.hpp"

namespace akd {

// Rows whose arg-max logit equals the label (first max wins).
std::size_t count_correct(const Matrix& logits, std::span<const int> labels);
double accuracy(const Matrix& logits, std::span<const int> labels);

// Shuffled mini-batches covering `indices` once; the last batch may be short.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices,
                                                   std::size_t batch_size, std::mt19937_64& rng);

struct SupervisedResult {
  MlpModel model;
  double val_accuracy = 0.0;
};

// Cross-entropy training only. epochs == 0 returns the initialized model.
SupervisedResult train_supervised(const std::vector<std::size_t>& widths, const Dataset& data,
                                  const OptimizerOptions& options, std::size_t epochs,
                                  std::size_t batch_size, std::uint64_t init_seed,
                                  std::uint64_t shuffle_seed);

// Teacher for cfg.seed: cfg.teacher_widths trained for cfg.teacher_epochs.
SupervisedResult train_teacher(const ExperimentConfig& cfg, const Dataset& data);

// Dataset described by cfg, generated from cfg.seed and standardized when
// configured. ConfigError if the model widths do not fit the loaded data.
Dataset build_dataset(const ExperimentConfig& cfg);

std::filesystem::path teacher_checkpoint_path(const ExperimentConfig& cfg);

// Loads the teacher checkpoint, or trains and saves one when it is missing
// and cfg.teacher_train_if_missing is set. IoError otherwise.
MlpModel ensure_teacher(const ExperimentConfig& cfg, const Dataset& data);

// Values produced by one optimizer step, all per sample in batch order.
struct StepOutcome {
  std::vector<double> ce;
  std::vector<double> kd;     // raw KL against the (possibly CAM-reweighted) target
  std::vector<double> total;  // alpha ce + (1 - alpha) T^2 kd
  std::vector<double> alpha;
  std::vector<double> dist;
  double loss = 0.0;          // batch mean that was differentiated
  std::size_t correct = 0;
};

// Student distillation under one method. Holds the student, optional learnable
// alpha logit and CAM parameters, and the optimizer over all of them.
// Not movable: the optimizer keeps addresses of the owned tensors.
class DistillationRun {
 public:
  DistillationRun(const ExperimentConfig& cfg, const Dataset& data, const MlpModel& teacher);
  DistillationRun(const DistillationRun&) = delete;
  DistillationRun& operator=(const DistillationRun&) = delete;

  // zero grads -> forward -> loss -> backward -> optimizer step on the rows.
  StepOutcome step(std::span<const std::size_t> rows);
  // Full shuffled pass over the train split.
  MetricsRow train_epoch(std::size_t epoch);
  // Validation pass, no updates. Losses are measured against the unmodified
  // teacher distribution for every method.
  MetricsRow evaluate(std::size_t epoch) const;

  const MlpModel& student() const { return student_; }
  const AlphaTrace& trace() const { return trace_; }
  const std::optional<CamParams>& cam() const { return cam_; }
  // sigmoid(theta) for the learnable policy.
  std::optional<double> learned_alpha() const;
  std::size_t steps_taken() const { return steps_; }

 private:
  std::vector<double> alpha_values(const Matrix& student_probs, const Matrix& teacher_probs,
                                   std::vector<double>& dist) const;

  ExperimentConfig cfg_;
  AlphaPolicy policy_;
  const Dataset& data_;
  Matrix teacher_logits_;  // all rows
  MlpModel student_;
  std::optional<Tensor> theta_;
  std::optional<CamParams> cam_;
  Optimizer optimizer_;
  std::mt19937_64 shuffle_rng_;
  AlphaTrace trace_;
  std::size_t steps_ = 0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  std::filesystem::path metrics_path;
  std::filesystem::path student_checkpoint;
  double final_val_accuracy = 0.0;
};

std::filesystem::path metrics_path(const ExperimentConfig& cfg);
std::filesystem::path student_checkpoint_path(const ExperimentConfig& cfg);

// Trains the student for cfg.epochs, appending a train and a val row per
// epoch to metrics_<method>_<seed>.csv, then writes the student checkpoint.
RunResult run_experiment(const ExperimentConfig& cfg);

}  // namespace akd
