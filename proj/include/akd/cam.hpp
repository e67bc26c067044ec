#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "akd/graph.hpp"
#include "akd/losses.hpp"

namespace akd {

// Two-layer attention MLP: 3c -> hidden (relu) -> c (sigmoid). The input is
// the row-wise concatenation [p_s, p_t, |p_s - p_t|].
struct CamParams {
  Tensor w1;  // 3c x h
  Tensor b1;  // 1 x h
  Tensor w2;  // h x c
  Tensor b2;  // 1 x c

  std::size_t classes() const { return w2.cols(); }
  std::size_t hidden() const { return w2.rows(); }
  std::vector<Tensor*> tensors() { return {&w1, &b1, &w2, &b2}; }
};

// The CAM parameters as nodes of one graph.
struct CamVars {
  Var w1, b1, w2, b2;
};

CamVars cam_vars(Graph& g, CamParams& params);

// Hidden layer uses U(-1/sqrt(fan_in), 1/sqrt(fan_in)). With zero_init_output
// the second layer starts at zero, so every attention entry is exactly 0.5 and
// the reweighting is an identity on the first step.
CamParams make_cam_params(std::size_t classes, std::size_t hidden_multiplier,
                          bool zero_init_output, std::uint64_t seed);

// a = sigmoid(relu([p_s, p_t, |p_s - p_t|] W1 + b1) W2 + b2). Both inputs
// enter as constants; gradient reaches only the CAM parameters.
Var cam_attention(Graph& g, CamParams& params, const Matrix& student_probs,
                  const Matrix& teacher_probs);
Var cam_attention(Graph& g, const CamVars& params, const Matrix& student_probs,
                  const Matrix& teacher_probs);

// (a .* p_t) / row_sum(a .* p_t). Differentiable in a. NumericError naming the
// row when a row's normalizer falls below 1e-30.
ProbBatch cam_reweight(Var attention, const ProbBatch& teacher);

// KL(p_t^CAM || softmax_t(student_logits, T)) per sample. The student
// probabilities feeding the attention MLP are taken from the current logits
// and detached.
Var cam_kd_loss(Graph& g, CamParams& params, Var student_logits, const Matrix& teacher_logits,
                double temperature);

struct CamKdTerms {
  Var attention;
  ProbBatch target;
  Var kd;
};

// Same as cam_kd_loss with the detached student context supplied explicitly,
// which lets a finite-difference check hold it fixed.
CamKdTerms cam_kd_terms(Graph& g, CamParams& params, Var student_logits,
                        const Matrix& student_context_probs, const Matrix& teacher_logits,
                        double temperature);
CamKdTerms cam_kd_terms(Graph& g, const CamVars& params, Var student_logits,
                        const Matrix& student_context_probs, const Matrix& teacher_logits,
                        double temperature);

}  // namespace akd
