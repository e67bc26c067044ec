#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "akd/tensor.hpp"

namespace akd {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

std::string_view optimizer_name(OptimizerKind kind);

// SGD with heavy-ball momentum or Adam with bias correction over a fixed set
// of registered tensors. Registered tensors must outlive the optimizer and
// keep stable addresses.
class Optimizer {
 public:
  explicit Optimizer(OptimizerOptions options);

  void add_parameter(Tensor& tensor);
  void add_parameters(std::span<Tensor* const> tensors);

  // Updates every registered tensor from its accumulated gradient.
  void step();
  // Updates the given tensors only. ContractError for a tensor that was never
  // registered or whose shape no longer matches its moment slots.
  void step(std::span<Tensor* const> tensors);
  void zero_grad();

  const OptimizerOptions& options() const { return options_; }
  std::size_t step_count() const { return steps_; }
  std::size_t parameter_count() const { return slots_.size(); }

  // Velocity (SGD) or first moment (Adam). second_moment is empty for SGD.
  const Matrix& first_moment(std::size_t index) const { return slots_.at(index).m; }
  const Matrix& second_moment(std::size_t index) const { return slots_.at(index).v; }

 private:
  struct Slot {
    Tensor* tensor;
    Matrix m;
    Matrix v;
  };

  void apply(Slot& slot);

  OptimizerOptions options_;
  std::vector<Slot> slots_;
  std::size_t steps_ = 0;
};

}  // namespace akd
