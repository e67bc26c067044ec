#include "akd/losses.hpp"

#include <cmath>
#include <string>

#include "akd/error.hpp"

namespace akd {

ProbBatch soften(Var logits, double temperature) {
  return ProbBatch{softmax_t(logits, temperature), temperature};
}

Var cross_entropy(Var student_logits, std::span<const int> labels) {
  const std::size_t b = student_logits.rows();
  const std::size_t c = student_logits.cols();
  if (b == 0) throw ContractError("cross_entropy: empty batch");
  if (labels.size() != b) {
    throw ContractError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(b) + " rows");
  }
  Matrix one_hot(b, c, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw DataError("cross_entropy: label " + std::to_string(labels[i]) + " at row " +
                      std::to_string(i) + " outside [0, " + std::to_string(c) + ")");
    }
    one_hot(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  Graph& g = *student_logits.graph;
  Var log_p = log_softmax_t(student_logits, 1.0);
  return scale(row_sum(hadamard(g.constant(std::move(one_hot)), log_p)), -1.0);
}

Var kd_kl(Var student_logits, const ProbBatch& teacher_target, double temperature) {
  const Matrix& q = teacher_target.probs.value();
  if (!q.same_shape(student_logits.value())) {
    throw ShapeError("kd_kl: target " + q.shape_string() + " vs logits " +
                     student_logits.value().shape_string());
  }
  for (std::size_t r = 0; r < q.rows(); ++r) {
    double s = 0.0;
    for (double v : q.row(r)) {
      if (v < 0.0) throw DataError("kd_kl: negative target entry in row " + std::to_string(r));
      s += v;
    }
    if (std::fabs(s - 1.0) > 1e-6) {
      throw DataError("kd_kl: target row " + std::to_string(r) + " sums to " + std::to_string(s));
    }
  }
  // sum_j q log q - sum_j q log p_s. Cancellation can leave a few ulps below
  // zero when q == p_s; the relu clamps those, and the true gradient there is
  // zero anyway.
  Var log_ps = log_softmax_t(student_logits, temperature);
  Var neg_entropy = row_sum(xlogx(teacher_target.probs));
  Var cross = row_sum(hadamard(teacher_target.probs, log_ps));
  return relu(sub(neg_entropy, cross));
}

LossBreakdown combine(Var ce, Var kd, Var alpha, double temperature) {
  if (!(temperature > 0.0)) {
    throw ParameterError("combine: temperature must be positive");
  }
  const std::size_t b = ce.rows();
  if (ce.cols() != 1 || kd.cols() != 1 || alpha.cols() != 1 || kd.rows() != b ||
      alpha.rows() != b) {
    throw ContractError("combine: expected matching b x 1 columns, got ce " +
                        ce.value().shape_string() + ", kd " + kd.value().shape_string() +
                        ", alpha " + alpha.value().shape_string());
  }
  std::vector<double> alpha_used(alpha.value().data().begin(), alpha.value().data().end());
  for (std::size_t i = 0; i < b; ++i) {
    if (!(alpha_used[i] >= 0.0 && alpha_used[i] <= 1.0)) {
      throw ParameterError("combine: alpha " + std::to_string(alpha_used[i]) + " at row " +
                           std::to_string(i) + " outside [0, 1]");
    }
  }
  Graph& g = *ce.graph;
  Var hard = hadamard(alpha, ce);
  Var soft_weight = sub(g.ones(b, 1), alpha);
  Var soft = scale(hadamard(soft_weight, kd), temperature * temperature);
  Var total = mean_all(add(hard, soft));
  return LossBreakdown{ce, kd, mean_all(ce), mean_all(kd), total, std::move(alpha_used)};
}

}  // namespace akd
