#include "akd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "akd/error.hpp"

namespace akd {

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

Optimizer::Optimizer(OptimizerOptions options) : options_(options) {
  if (!(options_.lr > 0.0)) throw ParameterError("learning rate must be positive");
  if (options_.momentum < 0.0 || options_.momentum >= 1.0) {
    throw ParameterError("momentum must lie in [0, 1)");
  }
  if (!(options_.beta1 >= 0.0 && options_.beta1 < 1.0) ||
      !(options_.beta2 >= 0.0 && options_.beta2 < 1.0)) {
    throw ParameterError("Adam betas must lie in [0, 1)");
  }
  if (!(options_.eps > 0.0)) throw ParameterError("Adam eps must be positive");
}

void Optimizer::add_parameter(Tensor& tensor) {
  for (const Slot& s : slots_) {
    if (s.tensor == &tensor) throw ContractError("parameter registered twice");
  }
  if (!tensor.grad.same_shape(tensor.value)) {
    tensor.grad = Matrix(tensor.rows(), tensor.cols(), 0.0);
  }
  Matrix zeros(tensor.rows(), tensor.cols(), 0.0);
  slots_.push_back({&tensor, zeros, options_.kind == OptimizerKind::kAdam ? zeros : Matrix{}});
}

void Optimizer::add_parameters(std::span<Tensor* const> tensors) {
  for (Tensor* t : tensors) add_parameter(*t);
}

void Optimizer::step() {
  ++steps_;
  for (Slot& s : slots_) apply(s);
}

void Optimizer::step(std::span<Tensor* const> tensors) {
  std::vector<Slot*> selected;
  for (Tensor* t : tensors) {
    auto it = std::find_if(slots_.begin(), slots_.end(),
                           [t](const Slot& s) { return s.tensor == t; });
    if (it == slots_.end()) throw ContractError("optimizer step on an unregistered parameter");
    selected.push_back(&*it);
  }
  ++steps_;
  for (Slot* s : selected) apply(*s);
}

void Optimizer::zero_grad() {
  for (Slot& s : slots_) s.tensor->zero_grad();
}

void Optimizer::apply(Slot& slot) {
  Tensor& t = *slot.tensor;
  const bool adam = options_.kind == OptimizerKind::kAdam;
  if (!slot.m.same_shape(t.value) || !t.grad.same_shape(t.value) ||
      (adam && !slot.v.same_shape(t.value))) {
    throw ContractError("optimizer moment slots " + slot.m.shape_string() +
                        " do not match parameter " + t.value.shape_string());
  }
  if (!t.requires_grad) return;

  if (!adam) {
    // v <- g + mu * v;  p <- p - lr * v
    for (std::size_t i = 0; i < t.value.size(); ++i) {
      const double velocity = t.grad[i] + options_.momentum * slot.m[i];
      slot.m[i] = velocity;
      t.value[i] -= options_.lr * velocity;
    }
    return;
  }

  const double step = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(options_.beta1, step);
  const double correction2 = 1.0 - std::pow(options_.beta2, step);
  for (std::size_t i = 0; i < t.value.size(); ++i) {
    const double g = t.grad[i];
    slot.m[i] = options_.beta1 * slot.m[i] + (1.0 - options_.beta1) * g;
    slot.v[i] = options_.beta2 * slot.v[i] + (1.0 - options_.beta2) * g * g;
    const double m_hat = slot.m[i] / correction1;
    const double v_hat = slot.v[i] / correction2;
    t.value[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
  }
}

}  // namespace akd
