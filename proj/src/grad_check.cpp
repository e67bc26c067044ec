#include "akd/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "akd/error.hpp"

namespace akd {

namespace {

Var eval_scalar(const ScalarFn& f, Graph& g, Tensor& x) {
  Var out = f(g, g.parameter(x));
  if (out.rows() != 1 || out.cols() != 1) {
    throw ContractError("grad_check: function returned " + out.value().shape_string() +
                        ", expected 1x1");
  }
  return out;
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, const Tensor& x, double eps,
                           std::size_t max_entries) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ParameterError("grad_check: eps must lie in [1e-7, 1e-3], got " + std::to_string(eps));
  }
  if (x.value.size() > max_entries) {
    throw ParameterError("grad_check: " + std::to_string(x.value.size()) +
                         " entries exceed the limit of " + std::to_string(max_entries));
  }

  Tensor probe(x.value, true);
  {
    Graph g;
    Var out = eval_scalar(f, g, probe);
    g.backward(out);
  }
  const Matrix analytic = probe.grad;

  GradCheckResult result;
  result.entries = probe.value.size();
  for (std::size_t i = 0; i < probe.value.size(); ++i) {
    const double original = probe.value[i];
    probe.value[i] = original + eps;
    double plus = 0.0;
    {
      Graph g;
      plus = eval_scalar(f, g, probe).scalar();
    }
    probe.value[i] = original - eps;
    double minus = 0.0;
    {
      Graph g;
      minus = eval_scalar(f, g, probe).scalar();
    }
    probe.value[i] = original;

    const double numeric = (plus - minus) / (2.0 * eps);
    const double err = std::fabs(analytic[i] - numeric) / std::max(1.0, std::fabs(analytic[i]));
    if (err > result.max_rel_error || std::isnan(err)) {
      result.max_rel_error = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace akd
