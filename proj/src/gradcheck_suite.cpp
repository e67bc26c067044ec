#include "akd/gradcheck_suite.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "akd/alpha.hpp"
#include "akd/cam.hpp"
#include "akd/grad_check.hpp"
#include "akd/mlp.hpp"

namespace akd {

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

class ComponentCheck {
 public:
  ComponentCheck(std::string name, const GradCheckSettings& s) : settings_(s) {
    result_.name = std::move(name);
  }

  void check(const ScalarFn& f, const Tensor& x) {
    const GradCheckResult r = grad_check(f, x, settings_.eps, kMaxGradCheckEntries);
    result_.max_rel_error = std::max(result_.max_rel_error, r.max_rel_error);
    ++result_.checks;
  }

  GradCheckComponent finish() {
    result_.passed = result_.max_rel_error < settings_.tolerance;
    return result_;
  }

 private:
  const GradCheckSettings& settings_;
  GradCheckComponent result_;
};

// mlp_forward with one parameter tensor swapped for a caller-provided node.
Var forward_with(Graph& g, MlpModel& model, Var x, std::size_t replaced, Var replacement) {
  Var h = x;
  auto params = model.parameters();
  auto param = [&](std::size_t i) { return i == replaced ? replacement : g.parameter(*params[i]); };
  const std::size_t layers = model.layers().size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = add_bias(matmul(h, param(2 * l)), param(2 * l + 1));
    if (l + 1 < layers) h = relu(h);
  }
  return h;
}

}  // namespace

bool GradCheckReport::passed() const {
  return std::all_of(components.begin(), components.end(),
                     [](const GradCheckComponent& c) { return c.passed; });
}

const GradCheckComponent* GradCheckReport::find(const std::string& name) const {
  for (const auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

GradCheckReport run_grad_check_suite(const GradCheckSettings& s, const KdLossFn& kd) {
  std::mt19937_64 rng(s.seed);
  const std::size_t b = s.batch;
  const std::size_t c = s.classes;
  const double T = s.temperature;

  Tensor logits(random_matrix(b, c, 2.0, rng));
  const Matrix teacher_logits = random_matrix(b, c, 2.0, rng);
  const Matrix teacher_probs = softmax_values(teacher_logits, T);
  std::vector<int> labels(b);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(c) - 1);
  for (int& y : labels) y = pick(rng);

  const Matrix student_probs = softmax_values(logits.value, T);
  const std::vector<double> dyn_alpha =
      dynamic_alpha(prob_discrepancy(student_probs, teacher_probs), 10.0);

  auto soft_target = [&](Graph& g) { return ProbBatch{g.constant(teacher_probs), T}; };

  GradCheckReport report;
  report.tolerance = s.tolerance;

  {
    ComponentCheck cc("cross_entropy", s);
    cc.check([&](Graph&, Var z) { return mean_all(cross_entropy(z, labels)); }, logits);
    report.components.push_back(cc.finish());
  }
  {
    ComponentCheck cc("kd_kl", s);
    cc.check([&](Graph& g, Var z) { return mean_all(kd(z, soft_target(g), T)); }, logits);
    report.components.push_back(cc.finish());
  }
  {
    ComponentCheck cc("combined_fixed", s);
    cc.check(
        [&](Graph& g, Var z) {
          Var alpha = g.constant(Matrix::column(fixed_alpha(0.3, b)));
          return combine(cross_entropy(z, labels), kd(z, soft_target(g), T), alpha, T).total;
        },
        logits);
    report.components.push_back(cc.finish());
  }
  {
    ComponentCheck cc("combined_learnable", s);
    Tensor theta(Matrix(1, 1, 0.4));
    Tensor frozen_logits(logits.value, false);
    auto total = [&](Graph& g, Var z, Var th) {
      return combine(cross_entropy(z, labels), kd(z, soft_target(g), T), learnable_alpha(th, b), T)
          .total;
    };
    cc.check([&](Graph& g, Var z) { return total(g, z, g.parameter(theta)); }, logits);
    cc.check([&](Graph& g, Var th) { return total(g, g.parameter(frozen_logits), th); }, theta);
    report.components.push_back(cc.finish());
  }
  {
    ComponentCheck cc("combined_dynamic", s);
    cc.check(
        [&](Graph& g, Var z) {
          Var alpha = g.constant(Matrix::column(dyn_alpha));
          return combine(cross_entropy(z, labels), kd(z, soft_target(g), T), alpha, T).total;
        },
        logits);
    report.components.push_back(cc.finish());
  }
  {
    ComponentCheck cc("cam_pipeline", s);
    CamParams cam = make_cam_params(c, s.cam_hidden_multiplier, false, s.seed + 1);
    Tensor frozen_logits(logits.value, false);
    auto total = [&](Graph& g, Var z, CamParams& p) {
      Var cam_kd = cam_kd_terms(g, p, z, student_probs, teacher_logits, T).kd;
      Var alpha = g.constant(Matrix::column(dyn_alpha));
      return combine(cross_entropy(z, labels), cam_kd, alpha, T).total;
    };
    cc.check([&](Graph& g, Var z) { return total(g, z, cam); }, logits);
    const auto tensors = cam.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      cc.check(
          [&, i](Graph& g, Var probe) {
            CamVars vars = cam_vars(g, cam);
            Var* slots[] = {&vars.w1, &vars.b1, &vars.w2, &vars.b2};
            *slots[i] = probe;
            Var z = g.parameter(frozen_logits);
            Var cam_kd = cam_kd_terms(g, vars, z, student_probs, teacher_logits, T).kd;
            Var alpha = g.constant(Matrix::column(dyn_alpha));
            return combine(cross_entropy(z, labels), cam_kd, alpha, T).total;
          },
          *tensors[i]);
    }
    report.components.push_back(cc.finish());
  }
  {
    ComponentCheck cc("mlp", s);
    MlpModel model = MlpModel::random({s.features, s.hidden, c}, s.seed + 2);
    const Matrix x = random_matrix(b, s.features, 1.0, rng);
    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      cc.check(
          [&, i](Graph& g, Var probe) {
            Var z = forward_with(g, model, g.constant(x), i, probe);
            Var alpha = g.constant(Matrix::column(fixed_alpha(0.5, b)));
            return combine(cross_entropy(z, labels), kd(z, soft_target(g), T), alpha, T).total;
          },
          *params[i]);
    }
    report.components.push_back(cc.finish());
  }
  return report;
}

std::string render_grad_check(const GradCheckReport& report) {
  std::string out;
  char line[160];
  for (const auto& c : report.components) {
    std::snprintf(line, sizeof line, "%-20s max_rel_error=%.3e checks=%zu %s\n", c.name.c_str(),
                  c.max_rel_error, c.checks, c.passed ? "PASS" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof line, "tolerance %.1e: %s\n", report.tolerance,
                report.passed() ? "all components pass" : "FAILURES");
  out += line;
  return out;
}

}  // namespace akd
