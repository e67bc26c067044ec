#include "akd/cam.hpp"

#include <cmath>
#include <random>
#include <string>

#include "akd/error.hpp"

namespace akd {

namespace {

constexpr double kMinNormalizer = 1e-30;

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

void check_normalizers(const Matrix& weights, const Matrix& scale_rows) {
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    double s = 0.0;
    for (double v : weights.row(r)) s += v;
    double denom = 1.0;
    if (scale_rows.size() != 0) {
      denom = 0.0;
      for (double v : scale_rows.row(r)) denom += v;
    }
    if (!(s / denom >= kMinNormalizer)) {
      throw NumericError("cam_reweight: attention-weighted teacher row " + std::to_string(r) +
                         " has a vanishing normalizer");
    }
  }
}

}  // namespace

CamParams make_cam_params(std::size_t classes, std::size_t hidden_multiplier,
                          bool zero_init_output, std::uint64_t seed) {
  if (classes < 2) throw ParameterError("CAM needs at least 2 classes");
  if (hidden_multiplier == 0) throw ParameterError("CAM hidden multiplier must be positive");
  const std::size_t in = 3 * classes;
  const std::size_t hidden = hidden_multiplier * classes;
  std::mt19937_64 rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  CamParams p;
  p.w1 = Tensor(uniform_matrix(in, hidden, bound1, rng));
  p.b1 = Tensor(uniform_matrix(1, hidden, bound1, rng));
  if (zero_init_output) {
    p.w2 = Tensor(Matrix(hidden, classes, 0.0));
    p.b2 = Tensor(Matrix(1, classes, 0.0));
  } else {
    p.w2 = Tensor(uniform_matrix(hidden, classes, bound2, rng));
    p.b2 = Tensor(uniform_matrix(1, classes, bound2, rng));
  }
  return p;
}

CamVars cam_vars(Graph& g, CamParams& params) {
  return CamVars{g.parameter(params.w1), g.parameter(params.b1), g.parameter(params.w2),
                 g.parameter(params.b2)};
}

Var cam_attention(Graph& g, CamParams& params, const Matrix& student_probs,
                  const Matrix& teacher_probs) {
  return cam_attention(g, cam_vars(g, params), student_probs, teacher_probs);
}

Var cam_attention(Graph& g, const CamVars& params, const Matrix& student_probs,
                  const Matrix& teacher_probs) {
  const std::size_t classes = params.w2.cols();
  if (!student_probs.same_shape(teacher_probs)) {
    throw ContractError("cam_attention: student " + student_probs.shape_string() +
                        " vs teacher " + teacher_probs.shape_string());
  }
  if (student_probs.cols() != classes || params.w1.rows() != 3 * classes) {
    throw ContractError("cam_attention: inputs " + student_probs.shape_string() +
                        " do not fit CAM with " + std::to_string(classes) + " classes");
  }
  Var ps = g.constant(student_probs);
  Var pt = g.constant(teacher_probs);
  Var gap = abs(sub(ps, pt));
  Var input = concat_cols({ps, pt, gap});
  Var hidden = relu(add_bias(matmul(input, params.w1), params.b1));
  Var out = add_bias(matmul(hidden, params.w2), params.b2);
  return sigmoid(out);
}

ProbBatch cam_reweight(Var attention, const ProbBatch& teacher) {
  if (!attention.value().same_shape(teacher.probs.value())) {
    throw ShapeError("cam_reweight: attention " + attention.value().shape_string() +
                     " vs teacher " + teacher.probs.value().shape_string());
  }
  Var weighted = hadamard(attention, teacher.probs);
  check_normalizers(weighted.value(), {});
  return ProbBatch{normalize_rows(weighted), teacher.temperature};
}

CamKdTerms cam_kd_terms(Graph& g, CamParams& params, Var student_logits,
                        const Matrix& student_context_probs, const Matrix& teacher_logits,
                        double temperature) {
  return cam_kd_terms(g, cam_vars(g, params), student_logits, student_context_probs,
                      teacher_logits, temperature);
}

CamKdTerms cam_kd_terms(Graph& g, const CamVars& params, Var student_logits,
                        const Matrix& student_context_probs, const Matrix& teacher_logits,
                        double temperature) {
  const Matrix teacher_probs = softmax_values(teacher_logits, temperature);
  Var attention = cam_attention(g, params, student_context_probs, teacher_probs);
  // Reweighting the unnormalized exponentials is the same distribution as
  // reweighting p_t, and with constant attention reproduces softmax_t's rows
  // bit for bit.
  const Matrix teacher_exp = shifted_exp(teacher_logits, temperature);
  Var weighted = hadamard(attention, g.constant(teacher_exp));
  check_normalizers(weighted.value(), teacher_exp);
  ProbBatch target{normalize_rows(weighted), temperature};
  Var kd = kd_kl(student_logits, target, temperature);
  return CamKdTerms{attention, target, kd};
}

Var cam_kd_loss(Graph& g, CamParams& params, Var student_logits, const Matrix& teacher_logits,
                double temperature) {
  const Matrix context = softmax_values(student_logits.value(), temperature);
  return cam_kd_terms(g, params, student_logits, context, teacher_logits, temperature).kd;
}

}  // namespace akd
