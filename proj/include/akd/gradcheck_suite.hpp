#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "akd/config.hpp"
#include "akd/losses.hpp"

namespace akd {

// Largest tensor a single finite-difference check will perturb.
inline constexpr std::size_t kMaxGradCheckEntries = 64;

using KdLossFn = std::function<Var(Var student_logits, const ProbBatch& target, double T)>;

struct GradCheckComponent {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checks = 0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckComponent> components;
  double tolerance = 0.0;

  bool passed() const;
  const GradCheckComponent* find(const std::string& name) const;
};

// Finite-difference verification of every differentiable path at small
// shapes: cross_entropy, kd_kl, combined_fixed, combined_learnable,
// combined_dynamic, cam_pipeline, mlp. Quantities that training treats as
// detached (dynamic alpha, the student context fed to the CAM) are frozen at
// the base point. `kd` replaces kd_kl in the non-CAM paths.
// ParameterError if any checked tensor exceeds kMaxGradCheckEntries.
GradCheckReport run_grad_check_suite(const GradCheckSettings& settings, const KdLossFn& kd = kd_kl);

std::string render_grad_check(const GradCheckReport& report);

}  // namespace akd
