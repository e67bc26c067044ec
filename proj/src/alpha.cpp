#include "akd/alpha.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "akd/error.hpp"
#include "akd/stats.hpp"

namespace akd {

std::string_view policy_name(const AlphaPolicy& policy) {
  struct Visitor {
    std::string_view operator()(const FixedAlpha&) const { return "fixed"; }
    std::string_view operator()(const LearnableAlpha&) const { return "learnable"; }
    std::string_view operator()(const DynamicAlpha&) const { return "dynamic"; }
  };
  return std::visit(Visitor{}, policy);
}

std::vector<double> fixed_alpha(double alpha0, std::size_t batch) {
  if (!(alpha0 >= 0.0 && alpha0 <= 1.0)) {
    throw ParameterError("fixed alpha must lie in [0, 1], got " + std::to_string(alpha0));
  }
  return std::vector<double>(batch, alpha0);
}

Var learnable_alpha(Var theta, std::size_t batch) {
  if (theta.rows() != 1 || theta.cols() != 1) {
    throw ShapeError("learnable_alpha: theta must be 1x1, got " + theta.value().shape_string());
  }
  return matmul(theta.graph->ones(batch, 1), sigmoid(theta));
}

std::vector<double> prob_discrepancy(const Matrix& student_probs, const Matrix& teacher_probs) {
  if (!student_probs.same_shape(teacher_probs)) {
    throw ContractError("prob_discrepancy: shape mismatch " + student_probs.shape_string() +
                        " vs " + teacher_probs.shape_string());
  }
  std::vector<double> dist(student_probs.rows(), 0.0);
  const double c = static_cast<double>(student_probs.cols());
  for (std::size_t r = 0; r < student_probs.rows(); ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < student_probs.cols(); ++j) {
      const double d = student_probs(r, j) - teacher_probs(r, j);
      s += d * d;
    }
    dist[r] = s / c;
  }
  return dist;
}

std::vector<double> dynamic_alpha(std::span<const double> dist, double k, bool sign_flip) {
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw ParameterError("dynamic alpha steepness k must be positive, got " + std::to_string(k));
  }
  std::vector<double> alpha(dist.size());
  const double direction = sign_flip ? 1.0 : -1.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (!(dist[i] >= 0.0)) {
      throw ParameterError("dynamic alpha: negative distance at row " + std::to_string(i));
    }
    alpha[i] = std::max(sigmoid_value(direction * k * dist[i]), kAlphaFloor);
  }
  return alpha;
}

void AlphaTrace::record(std::size_t step, std::span<const double> alpha,
                        std::span<const double> dist) {
  if (!records_.empty() && step <= records_.back().step) {
    throw ContractError("alpha trace steps must increase, got " + std::to_string(step) +
                        " after " + std::to_string(records_.back().step));
  }
  records_.push_back({step, mean(alpha), population_std(alpha), mean(dist)});
}

}  // namespace akd
