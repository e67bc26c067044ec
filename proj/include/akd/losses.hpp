#pragma once

#include <span>
#include <vector>

#include "akd/graph.hpp"

namespace akd {

// Row-stochastic batch x classes node tagged with the temperature it was
// produced at.
struct ProbBatch {
  Var probs;
  double temperature = 1.0;
};

// Softmax of logits at temperature T wrapped as a ProbBatch.
ProbBatch soften(Var logits, double temperature);

// Per-sample -log softmax(z)[y] at T = 1, computed through log-sum-exp.
// Returns a b x 1 node. DataError when a label lies outside [0, c).
Var cross_entropy(Var student_logits, std::span<const int> labels);

// Per-sample KL(target || softmax_t(student_logits, T)) as a b x 1 node.
// Zero-probability target entries contribute nothing; the result is never
// negative. The T^2 factor is not applied here (see combine). The target is
// expected to carry no gradient unless it comes from a trainable reweighting
// such as the CAM.
// DataError if a target row sum differs from 1 by more than 1e-6.
Var kd_kl(Var student_logits, const ProbBatch& teacher_target, double temperature);

struct LossBreakdown {
  Var ce_per_sample;   // b x 1
  Var kd_per_sample;   // b x 1, raw KL
  Var ce;              // 1 x 1 batch mean
  Var kd;              // 1 x 1 batch mean, raw KL
  Var total;           // 1 x 1: mean_i(alpha_i ce_i + (1 - alpha_i) T^2 kd_i)
  std::vector<double> alpha_used;
};

// Mixes hard- and soft-label terms with per-sample weights. `alpha` is a
// b x 1 node: a constant for fixed and dynamic policies, a function of the
// learnable logit otherwise (in which case gradient reaches it).
// ContractError on length mismatch, ParameterError on alpha outside [0, 1].
LossBreakdown combine(Var ce, Var kd, Var alpha, double temperature);

}  // namespace akd
