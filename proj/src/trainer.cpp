#include "akd/trainer.hpp"

#include <algorithm>
#include <string>

#include "akd/checkpoint.hpp"
#include "akd/error.hpp"
#include "akd/losses.hpp"
#include "akd/stats.hpp"

namespace akd {

namespace {

double per_sample_total(double alpha, double ce, double kd, double temperature) {
  // Same operation order as combine().
  return alpha * ce + (temperature * temperature) * ((1.0 - alpha) * kd);
}

void check_model_fits(const char* name, const std::vector<std::size_t>& widths,
                      const Dataset& data) {
  if (widths.front() != data.dim() || widths.back() != data.classes) {
    throw ConfigError(std::string(name) + " widths " + std::to_string(widths.front()) + "->" +
                      std::to_string(widths.back()) + " do not fit data with " +
                      std::to_string(data.dim()) + " features and " +
                      std::to_string(data.classes) + " classes");
  }
}

}  // namespace

std::size_t count_correct(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) {
    throw ContractError("accuracy: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(logits.rows()) + " rows");
  }
  std::size_t hits = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == labels[r]) ++hits;
  }
  return hits;
}

double accuracy(const Matrix& logits, std::span<const int> labels) {
  const std::size_t hits = count_correct(logits, labels);
  if (labels.empty()) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices,
                                                   std::size_t batch_size, std::mt19937_64& rng) {
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

SupervisedResult train_supervised(const std::vector<std::size_t>& widths, const Dataset& data,
                                  const OptimizerOptions& options, std::size_t epochs,
                                  std::size_t batch_size, std::uint64_t init_seed,
                                  std::uint64_t shuffle_seed) {
  check_model_fits("model", widths, data);
  SupervisedResult result{MlpModel::random(widths, init_seed), 0.0};
  Optimizer optimizer(options);
  const auto params = result.model.parameters();
  optimizer.add_parameters(params);
  std::mt19937_64 rng(shuffle_seed);

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (const auto& batch : make_batches(data.train_indices, batch_size, rng)) {
      optimizer.zero_grad();
      Graph g;
      Var logits = mlp_forward(g, result.model, g.constant(data.gather_features(batch)));
      const std::vector<int> labels = data.gather_labels(batch);
      Var loss = mean_all(cross_entropy(logits, labels));
      g.backward(loss);
      optimizer.step();
    }
  }
  const Matrix val_logits = mlp_predict(result.model, data.gather_features(data.val_indices));
  result.val_accuracy = accuracy(val_logits, data.gather_labels(data.val_indices));
  return result;
}

SupervisedResult train_teacher(const ExperimentConfig& cfg, const Dataset& data) {
  return train_supervised(cfg.teacher_widths, data, cfg.optimizer, cfg.teacher_epochs,
                          cfg.batch_size, derive_seed(cfg.seed, SeedStream::kTeacherInit),
                          derive_seed(cfg.seed, SeedStream::kTeacherShuffle));
}

Dataset build_dataset(const ExperimentConfig& cfg) {
  const DatasetSpec& spec = cfg.dataset;
  const std::uint64_t seed = derive_seed(cfg.seed, SeedStream::kDataset);
  Dataset data;
  switch (spec.kind) {
    case DatasetKind::kRings:
      data = make_rings(spec.n, spec.classes, spec.noise, seed);
      break;
    case DatasetKind::kBlobs:
      data = make_blobs(spec.n, spec.classes, spec.dim, spec.spread, seed);
      break;
    case DatasetKind::kDelimited:
      data = load_delimited(spec.path, {spec.label_column, spec.delimiter, spec.header, seed});
      break;
  }
  if (spec.standardize) standardize(data);
  check_model_fits("teacher", cfg.teacher_widths, data);
  check_model_fits("student", cfg.student_widths, data);
  return data;
}

std::filesystem::path teacher_checkpoint_path(const ExperimentConfig& cfg) {
  if (!cfg.teacher_checkpoint.empty()) return cfg.teacher_checkpoint;
  return std::filesystem::path(cfg.out_dir) / ("teacher_" + std::to_string(cfg.seed) + ".akd");
}

MlpModel ensure_teacher(const ExperimentConfig& cfg, const Dataset& data) {
  const auto path = teacher_checkpoint_path(cfg);
  if (std::filesystem::exists(path)) {
    MlpModel teacher = load_checkpoint(path);
    if (teacher.widths() != cfg.teacher_widths) {
      throw ConfigError("teacher checkpoint " + path.string() +
                        " does not match the configured teacher widths");
    }
    return teacher;
  }
  if (!cfg.teacher_train_if_missing) {
    throw IoError("teacher checkpoint " + path.string() + " not found");
  }
  SupervisedResult trained = train_teacher(cfg, data);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_checkpoint(trained.model, path);
  return std::move(trained.model);
}

DistillationRun::DistillationRun(const ExperimentConfig& cfg, const Dataset& data,
                                 const MlpModel& teacher)
    : cfg_(cfg),
      policy_(cfg.alpha_policy()),
      data_(data),
      optimizer_(cfg.optimizer),
      shuffle_rng_(derive_seed(cfg.seed, SeedStream::kStudentShuffle)) {
  validate(cfg_);
  check_model_fits("teacher", teacher.widths(), data);
  check_model_fits("student", cfg.student_widths, data);
  teacher_logits_ = mlp_predict(teacher, data.features);
  if (cfg.student_init_from_teacher) {
    student_ = teacher;
  } else {
    student_ = MlpModel::random(cfg.student_widths, derive_seed(cfg.seed, SeedStream::kStudentInit));
  }
  optimizer_.add_parameters(student_.parameters());
  if (std::holds_alternative<LearnableAlpha>(policy_)) {
    theta_.emplace(Matrix(1, 1, std::get<LearnableAlpha>(policy_).theta0));
    optimizer_.add_parameter(*theta_);
  }
  if (cfg.method == Method::kDynamicCam) {
    cam_.emplace(make_cam_params(data.classes, cfg.cam.hidden_multiplier,
                                 cfg.cam.zero_init_output,
                                 derive_seed(cfg.seed, SeedStream::kCamInit)));
    optimizer_.add_parameters(cam_->tensors());
  }
}

std::optional<double> DistillationRun::learned_alpha() const {
  if (!theta_) return std::nullopt;
  return sigmoid_value(theta_->value[0]);
}

std::vector<double> DistillationRun::alpha_values(const Matrix& student_probs,
                                                  const Matrix& teacher_probs,
                                                  std::vector<double>& dist) const {
  dist = prob_discrepancy(student_probs, teacher_probs);
  const std::size_t b = dist.size();
  if (const auto* f = std::get_if<FixedAlpha>(&policy_)) return fixed_alpha(f->alpha0, b);
  if (const auto* d = std::get_if<DynamicAlpha>(&policy_)) {
    return dynamic_alpha(dist, d->k, d->sign_flip);
  }
  return std::vector<double>(b, sigmoid_value(theta_->value[0]));
}

StepOutcome DistillationRun::step(std::span<const std::size_t> rows) {
  const double T = cfg_.temperature;
  const std::size_t b = rows.size();
  if (b == 0) throw ContractError("step on an empty batch");

  optimizer_.zero_grad();
  Graph g;
  Var logits = mlp_forward(g, student_, g.constant(data_.gather_features(rows)));
  const std::vector<int> labels = data_.gather_labels(rows);

  Matrix teacher_logits(b, data_.classes);
  for (std::size_t i = 0; i < b; ++i) {
    const auto src = teacher_logits_.row(rows[i]);
    std::copy(src.begin(), src.end(), teacher_logits.row(i).begin());
  }
  const Matrix student_probs = softmax_values(logits.value(), T);
  const Matrix teacher_probs = softmax_values(teacher_logits, T);

  StepOutcome out;
  Var alpha;
  if (theta_) {
    prob_discrepancy(student_probs, teacher_probs).swap(out.dist);
    alpha = learnable_alpha(g.parameter(*theta_), b);
  } else {
    alpha = g.constant(Matrix::column(alpha_values(student_probs, teacher_probs, out.dist)));
  }

  Var ce = cross_entropy(logits, labels);
  Var kd;
  if (cam_) {
    kd = cam_kd_terms(g, *cam_, logits, student_probs, teacher_logits, T).kd;
  } else {
    kd = kd_kl(logits, ProbBatch{g.constant(teacher_probs), T}, T);
  }
  const LossBreakdown loss = combine(ce, kd, alpha, T);
  g.backward(loss.total);
  optimizer_.step();
  ++steps_;

  out.alpha = loss.alpha_used;
  out.ce.assign(ce.value().data().begin(), ce.value().data().end());
  out.kd.assign(kd.value().data().begin(), kd.value().data().end());
  out.total.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    out.total[i] = per_sample_total(out.alpha[i], out.ce[i], out.kd[i], T);
  }
  out.loss = loss.total.scalar();
  out.correct = count_correct(logits.value(), labels);
  trace_.record(steps_, out.alpha, out.dist);
  return out;
}

MetricsRow DistillationRun::train_epoch(std::size_t epoch) {
  std::vector<double> ce, kd, total, alpha, dist;
  std::size_t correct = 0;
  for (const auto& batch : make_batches(data_.train_indices, cfg_.batch_size, shuffle_rng_)) {
    StepOutcome s = step(batch);
    ce.insert(ce.end(), s.ce.begin(), s.ce.end());
    kd.insert(kd.end(), s.kd.begin(), s.kd.end());
    total.insert(total.end(), s.total.begin(), s.total.end());
    alpha.insert(alpha.end(), s.alpha.begin(), s.alpha.end());
    dist.insert(dist.end(), s.dist.begin(), s.dist.end());
    correct += s.correct;
  }
  MetricsRow row;
  row.epoch = epoch;
  row.split = Split::kTrain;
  row.ce_loss = mean(ce);
  row.kd_loss = mean(kd);
  row.total_loss = mean(total);
  row.accuracy = static_cast<double>(correct) / static_cast<double>(ce.size());
  row.alpha_mean = mean(alpha);
  row.alpha_std = population_std(alpha);
  row.dist_mean = mean(dist);
  return row;
}

MetricsRow DistillationRun::evaluate(std::size_t epoch) const {
  const double T = cfg_.temperature;
  const auto& rows = data_.val_indices;
  const Matrix logits = mlp_predict(student_, data_.gather_features(rows));
  const std::vector<int> labels = data_.gather_labels(rows);
  Matrix teacher_logits(rows.size(), data_.classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = teacher_logits_.row(rows[i]);
    std::copy(src.begin(), src.end(), teacher_logits.row(i).begin());
  }
  const Matrix student_probs = softmax_values(logits, T);
  const Matrix teacher_probs = softmax_values(teacher_logits, T);
  std::vector<double> dist;
  const std::vector<double> alpha = alpha_values(student_probs, teacher_probs, dist);

  Graph g;
  Var z = g.constant(logits);
  Var ce = cross_entropy(z, labels);
  Var kd = kd_kl(z, ProbBatch{g.constant(teacher_probs), T}, T);
  std::vector<double> total(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    total[i] = per_sample_total(alpha[i], ce.value()[i], kd.value()[i], T);
  }
  MetricsRow row;
  row.epoch = epoch;
  row.split = Split::kVal;
  row.ce_loss = mean(ce.value().data());
  row.kd_loss = mean(kd.value().data());
  row.total_loss = mean(total);
  row.accuracy = accuracy(logits, labels);
  row.alpha_mean = mean(alpha);
  row.alpha_std = population_std(alpha);
  row.dist_mean = mean(dist);
  return row;
}

std::filesystem::path metrics_path(const ExperimentConfig& cfg) {
  return std::filesystem::path(cfg.out_dir) /
         ("metrics_" + std::string(method_name(cfg.method)) + "_" + std::to_string(cfg.seed) +
          ".csv");
}

std::filesystem::path student_checkpoint_path(const ExperimentConfig& cfg) {
  return std::filesystem::path(cfg.out_dir) /
         ("student_" + std::string(method_name(cfg.method)) + "_" + std::to_string(cfg.seed) +
          ".akd");
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir + ": " + ec.message());

  const Dataset data = build_dataset(cfg);
  const MlpModel teacher = ensure_teacher(cfg, data);
  DistillationRun run(cfg, data, teacher);

  RunResult result;
  result.metrics_path = metrics_path(cfg);
  MetricsCsvWriter writer(result.metrics_path);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const MetricsRow train = run.train_epoch(epoch);
    writer.write(train);
    result.rows.push_back(train);
    const MetricsRow val = run.evaluate(epoch);
    writer.write(val);
    result.rows.push_back(val);
  }
  result.final_val_accuracy = result.rows.back().accuracy;
  result.student_checkpoint = student_checkpoint_path(cfg);
  save_checkpoint(run.student(), result.student_checkpoint);
  return result;
}

}  // namespace akd
