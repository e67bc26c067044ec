#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "akd/graph.hpp"

namespace akd {

struct FixedAlpha {
  double alpha0 = 0.5;
};

// alpha = sigmoid(theta); theta0 is the starting logit. The trainer owns the
// theta tensor and registers it with its optimizer.
struct LearnableAlpha {
  double theta0 = 0.0;
};

// alpha_i = sigmoid(-k * dist_i), or sigmoid(+k * dist_i) with sign_flip.
// Treated as a constant for differentiation.
struct DynamicAlpha {
  double k = 10.0;
  bool sign_flip = false;
};

using AlphaPolicy = std::variant<FixedAlpha, LearnableAlpha, DynamicAlpha>;

std::string_view policy_name(const AlphaPolicy& policy);

// Lower bound applied to every sigmoid-produced alpha.
inline constexpr double kAlphaFloor = 1e-300;

// ParameterError unless alpha0 lies in [0, 1].
std::vector<double> fixed_alpha(double alpha0, std::size_t batch);

// sigmoid(theta) broadcast to a batch x 1 node; differentiable in theta.
Var learnable_alpha(Var theta, std::size_t batch);

// Per row: mean over classes of (p_s - p_t)^2. Inputs are plain values, so
// the result never carries gradient. ContractError on shape mismatch.
std::vector<double> prob_discrepancy(const Matrix& student_probs, const Matrix& teacher_probs);

// ParameterError for k <= 0 or a negative distance.
std::vector<double> dynamic_alpha(std::span<const double> dist, double k, bool sign_flip = false);

struct AlphaTraceRecord {
  std::size_t step = 0;
  double alpha_mean = 0.0;
  double alpha_std = 0.0;
  double dist_mean = 0.0;
};

// Per-step alpha statistics, appended in strictly increasing step order.
class AlphaTrace {
 public:
  void record(std::size_t step, std::span<const double> alpha, std::span<const double> dist);
  const std::vector<AlphaTraceRecord>& records() const { return records_; }

 private:
  std::vector<AlphaTraceRecord> records_;
};

}  // namespace akd
