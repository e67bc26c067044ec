#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "akd/checkpoint.hpp"
#include "akd/config.hpp"
#include "akd/data.hpp"
#include "akd/error.hpp"
#include "akd/grad_check.hpp"
#include "akd/losses.hpp"
#include "akd/mlp.hpp"
#include "akd/optim.hpp"
#include "akd/trainer.hpp"

using namespace akd;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("akd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

double run_sgd(double lr, double momentum, double grad, int steps, double p0 = 1.0) {
  Tensor p(Matrix(1, 1, p0));
  Optimizer opt(OptimizerOptions{OptimizerKind::kSgd, lr, momentum});
  opt.add_parameter(p);
  for (int i = 0; i < steps; ++i) {
    p.grad[0] = grad;
    opt.step();
  }
  return p.value[0];
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveZeroLogits) {
  MlpModel m({3, 5, 2});
  Graph g;
  Var out = mlp_forward(g, m, g.constant(Matrix::from_rows({{1, 2, 3}, {-4, 5, 6}})));
  EXPECT_EQ(out.value(), Matrix(2, 2, 0.0));
}

TEST(Mlp, SingleIdentityLayer) {
  DenseLayer layer{Tensor(Matrix::from_rows({{1, 0}, {0, 1}})), Tensor(Matrix(1, 2, 0.0))};
  MlpModel m(std::vector<DenseLayer>{layer});
  Graph g;
  EXPECT_EQ(mlp_forward(g, m, g.constant(Matrix::from_rows({{1, 2}}))).value(),
            Matrix::from_rows({{1, 2}}));
  EXPECT_EQ(mlp_predict(m, Matrix::from_rows({{1, 2}})), Matrix::from_rows({{1, 2}}));
}

TEST(Mlp, WidthMismatchIsShapeError) {
  MlpModel m = MlpModel::random({3, 4, 2}, 1);
  Graph g;
  EXPECT_THROW(mlp_forward(g, m, g.constant(Matrix(2, 2))), ShapeError);
}

TEST(Mlp, ParameterCountsAndCapacityGap) {
  const ExperimentConfig cfg;
  MlpModel teacher(cfg.teacher_widths);
  MlpModel student(cfg.student_widths);
  EXPECT_EQ(MlpModel({2, 16, 4}).parameter_count(), 2u * 16 + 16 + 16 * 4 + 4);
  EXPECT_GE(teacher.parameter_count(), 4 * student.parameter_count());
  EXPECT_EQ(teacher.parameters().size(), 6u);
}

TEST(Mlp, RandomInitIsSeededAndBounded) {
  const MlpModel a = MlpModel::random({4, 8, 3}, 42);
  EXPECT_TRUE(a == MlpModel::random({4, 8, 3}, 42));
  EXPECT_FALSE(a == MlpModel::random({4, 8, 3}, 43));
  for (double v : a.layers()[0].weight.value.data()) EXPECT_LE(std::fabs(v), 0.5);
}

TEST(Mlp, CrossEntropyGradientMatchesFiniteDifferences) {
  MlpModel m = MlpModel::random({2, 5, 3}, 3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(4, 2);
  for (double& v : x.data()) v = n(rng);
  const std::vector<int> y{0, 2, 1, 1};
  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto r = grad_check(
        [&, i](Graph& g, Var probe) {
          // Forward pass with the probe in place of parameter i.
          Var h = g.constant(x);
          for (std::size_t l = 0; l < m.layers().size(); ++l) {
            Var w = 2 * l == i ? probe : g.parameter(*params[2 * l]);
            Var b = 2 * l + 1 == i ? probe : g.parameter(*params[2 * l + 1]);
            h = add_bias(matmul(h, w), b);
            if (l + 1 < m.layers().size()) h = relu(h);
          }
          return mean_all(cross_entropy(h, y));
        },
        *params[i]);
    EXPECT_LT(r.max_rel_error, 1e-4) << "parameter " << i;
  }
}

TEST(Sgd, SingleStep) { EXPECT_DOUBLE_EQ(run_sgd(0.1, 0.0, 1.0, 1), 0.9); }

TEST(Sgd, ZeroGradientIsFixedPoint) { EXPECT_EQ(run_sgd(0.1, 0.9, 0.0, 5, 0.37), 0.37); }

TEST(Sgd, MomentumRecursion) { EXPECT_NEAR(run_sgd(0.1, 0.9, 1.0, 2), 0.71, 1e-15); }

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {1e-3, 0.5, -2.0, 1e4}) {
    Tensor p(Matrix(1, 1, 1.0));
    Optimizer opt(OptimizerOptions{OptimizerKind::kAdam, 0.01});
    opt.add_parameter(p);
    p.grad[0] = g;
    opt.step();
    EXPECT_NEAR(std::fabs(p.value[0] - 1.0), 0.01, 1e-6) << "grad " << g;
    EXPECT_EQ(std::signbit(p.value[0] - 1.0), !std::signbit(g));
  }
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  Tensor p(Matrix::from_rows({{0.25, -3}}));
  Optimizer opt(OptimizerOptions{OptimizerKind::kAdam, 0.1});
  opt.add_parameter(p);
  for (int i = 0; i < 10; ++i) opt.step();
  EXPECT_EQ(p.value, Matrix::from_rows({{0.25, -3}}));
  EXPECT_EQ(opt.step_count(), 10u);
}

TEST(Adam, MomentShapesTrackParameters) {
  Tensor p(Matrix(2, 3, 1.0));
  Optimizer opt(OptimizerOptions{});
  opt.add_parameter(p);
  EXPECT_EQ(opt.first_moment(0).shape_string(), "2x3");
  EXPECT_EQ(opt.second_moment(0).shape_string(), "2x3");
  p.value = Matrix(3, 3, 1.0);
  p.grad = Matrix(3, 3, 1.0);
  EXPECT_THROW(opt.step(), ContractError);
}

TEST(Optimizer, RegistrationContracts) {
  Tensor a(Matrix(1, 1, 1.0)), b(Matrix(1, 1, 1.0));
  Optimizer opt(OptimizerOptions{OptimizerKind::kSgd, 0.1});
  opt.add_parameter(a);
  EXPECT_THROW(opt.add_parameter(a), ContractError);
  Tensor* unregistered[] = {&b};
  EXPECT_THROW(opt.step(unregistered), ContractError);
  EXPECT_EQ(opt.step_count(), 0u);
  a.grad[0] = 1.0;
  opt.step();
  EXPECT_EQ(opt.step_count(), 1u);
  opt.zero_grad();
  EXPECT_EQ(a.grad[0], 0.0);
}

TEST(Optimizer, SmallStepDecreasesFrozenBatchLoss) {
  const Dataset data = make_rings(400, 3, 0.1, 5);
  for (OptimizerKind kind : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    int violations = 0;
    for (int batch = 0; batch < 20; ++batch) {
      MlpModel m = MlpModel::random({2, 8, 3}, 100 + batch);
      std::vector<std::size_t> rows(16);
      for (auto& r : rows) r = pick(rng);
      const Matrix x = data.gather_features(rows);
      const std::vector<int> y = data.gather_labels(rows);
      auto loss_of = [&](MlpModel& model) {
        Graph g;
        return mean_all(cross_entropy(mlp_forward(g, model, g.constant(x)), y)).scalar();
      };
      Optimizer opt(OptimizerOptions{kind, 1e-4});
      opt.add_parameters(m.parameters());
      const double before = loss_of(m);
      {
        Graph g;
        g.backward(mean_all(cross_entropy(mlp_forward(g, m, g.constant(x)), y)));
      }
      opt.step();
      if (!(loss_of(m) < before)) ++violations;
    }
    EXPECT_LE(violations, kind == OptimizerKind::kAdam ? 1 : 0) << optimizer_name(kind);
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  const MlpModel m = MlpModel::random({3, 7, 2}, 9);
  EXPECT_TRUE(decode_checkpoint(encode_checkpoint(m)) == m);
  const auto dir = scratch_dir("ckpt");
  save_checkpoint(m, dir / "m.akd");
  EXPECT_TRUE(load_checkpoint(dir / "m.akd") == m);
}

TEST(Checkpoint, LayoutIsLittleEndian) {
  DenseLayer layer{Tensor(Matrix::from_rows({{1.0}})), Tensor(Matrix::from_rows({{-2.0}}))};
  const auto bytes = encode_checkpoint(MlpModel(std::vector<DenseLayer>{layer}));
  ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 4 + 8 + 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "AKD1");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[8], 1);   // rows
  EXPECT_EQ(bytes[12], 1);  // cols
  // 1.0 = 0x3FF0000000000000, stored low byte first.
  EXPECT_EQ(bytes[16 + 7], 0x3F);
  EXPECT_EQ(bytes[16 + 6], 0xF0);
  EXPECT_EQ(bytes[24 + 7], 0xC0);
}

TEST(Checkpoint, MalformedInput) {
  auto bytes = encode_checkpoint(MlpModel::random({2, 3, 2}, 1));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), ParseError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_checkpoint(truncated), ParseError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), ParseError);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/model.akd"), IoError);
  EXPECT_THROW(save_checkpoint(MlpModel({2, 2}), "/nonexistent/dir/model.akd"), IoError);
}

// Equal-variance blobs have linear Bayes boundaries, so any student with
// enough hidden units ties the teacher. The gap shows once the student's
// hidden width is smaller than the number of classes.
TEST(TrainTeacher, BeatsStudentFromScratchOnBlobs) {
  ExperimentConfig cfg;
  cfg.dataset.kind = DatasetKind::kBlobs;
  cfg.dataset.classes = 10;
  cfg.dataset.dim = 10;
  cfg.dataset.spread = 0.3;
  cfg.teacher_widths = {10, 256, 256, 10};
  cfg.student_widths = {10, 4, 10};
  const Dataset data = build_dataset(cfg);
  const SupervisedResult teacher = train_teacher(cfg, data);
  const SupervisedResult student =
      train_supervised(cfg.student_widths, data, cfg.optimizer, cfg.epochs, cfg.batch_size,
                       derive_seed(cfg.seed, SeedStream::kStudentInit),
                       derive_seed(cfg.seed, SeedStream::kStudentShuffle));
  EXPECT_GT(teacher.val_accuracy, student.val_accuracy);
}

TEST(TrainTeacher, ZeroEpochsIsNearChance) {
  ExperimentConfig cfg;
  cfg.teacher_epochs = 0;
  const Dataset data = build_dataset(cfg);
  const SupervisedResult teacher = train_teacher(cfg, data);
  EXPECT_NEAR(teacher.val_accuracy, 1.0 / static_cast<double>(data.classes), 0.05);
  EXPECT_TRUE(teacher.model == MlpModel::random(cfg.teacher_widths, derive_seed(cfg.seed, SeedStream::kTeacherInit)));
}

TEST(TrainTeacher, SameSeedSameWeights) {
  ExperimentConfig cfg;
  cfg.dataset.n = 400;
  cfg.teacher_widths = {2, 32, 4};
  cfg.teacher_epochs = 3;
  const Dataset data = build_dataset(cfg);
  EXPECT_EQ(encode_checkpoint(train_teacher(cfg, data).model),
            encode_checkpoint(train_teacher(cfg, data).model));
}
