#include "akd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "akd/error.hpp"

namespace akd {

namespace {

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ParameterError("temperature must be positive and finite, got " +
                         std::to_string(temperature));
  }
}

void check_logits(const Matrix& logits) {
  if (logits.cols() < 2) {
    throw ParameterError("softmax needs at least 2 classes, got " + logits.shape_string());
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw NumericError("non-finite logit at row " + std::to_string(i / logits.cols()));
    }
  }
}

// out += a * b  (a: m x k, b: k x n)
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* out_row = out.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      const double* b_row = b.row(p).data();
      for (std::size_t j = 0; j < n; ++j) out_row[j] += av * b_row[j];
    }
  }
}

// out += a * b^T  (a: m x n, b: k x n)
void gemm_abt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t m = a.rows(), n = a.cols(), k = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double* b_row = b.row(p).data();
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a_row[j] * b_row[j];
      out(i, p) += s;
    }
  }
}

// out += a^T * b  (a: m x k, b: m x n)
void gemm_atb_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* b_row = b.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      double* out_row = out.row(p).data();
      for (std::size_t j = 0; j < n; ++j) out_row[j] += av * b_row[j];
    }
  }
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix shifted_exp(const Matrix& logits, double temperature) {
  check_temperature(temperature);
  check_logits(logits);
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    const double m = *std::max_element(z.begin(), z.end());
    auto e = out.row(i);
    for (std::size_t j = 0; j < z.size(); ++j) e[j] = std::exp((z[j] - m) / temperature);
  }
  return out;
}

Matrix softmax_values(const Matrix& logits, double temperature) {
  Matrix out = shifted_exp(logits, temperature);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    double s = 0.0;
    for (double v : r) s += v;
    for (double& v : r) v = v / s;
  }
  return out;
}

const Matrix& Var::value() const { return graph->value(*this); }
const Matrix& Var::grad() const { return graph->grad(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ContractError("scalar() on a " + v.shape_string() + " node");
  return v[0];
}

void Graph::check_owned(Var v) const {
  if (v.graph != this || v.id >= nodes_.size()) {
    throw ContractError("variable does not belong to this graph");
  }
}

const Matrix& Graph::value(Var v) const {
  check_owned(v);
  return nodes_[v.id].value;
}

const Matrix& Graph::grad(Var v) const {
  check_owned(v);
  return nodes_[v.id].grad;
}

OpKind Graph::kind(Var v) const {
  check_owned(v);
  return nodes_[v.id].op;
}

Var Graph::parameter(Tensor& tensor) {
  if (!tensor.grad.same_shape(tensor.value)) {
    tensor.grad = Matrix(tensor.rows(), tensor.cols(), 0.0);
  }
  Node node{OpKind::kParameter, {}, tensor.value, {}, {}, &tensor, 0.0, tensor.requires_grad};
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Matrix value) {
  nodes_.push_back(Node{OpKind::kConstant, {}, std::move(value), {}, {}, nullptr, 0.0, false});
  return Var{this, nodes_.size() - 1};
}

Var Graph::push(OpKind op, std::initializer_list<Var> parents, Matrix value, double scalar,
                Matrix saved) {
  return push(op, std::vector<Var>(parents), std::move(value), scalar, std::move(saved));
}

Var Graph::push(OpKind op, const std::vector<Var>& parents, Matrix value, double scalar,
                Matrix saved) {
  Node node{op, {}, std::move(value), {}, std::move(saved), nullptr, scalar, false};
  node.parents.reserve(parents.size());
  for (Var p : parents) {
    check_owned(p);
    node.parents.push_back(p.id);
    node.needs_grad = node.needs_grad || nodes_[p.id].needs_grad;
  }
  if (op == OpKind::kDetach) node.needs_grad = false;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Graph::backward(Var loss) {
  check_owned(loss);
  if (nodes_[loss.id].value.rows() != 1 || nodes_[loss.id].value.cols() != 1) {
    throw ContractError("backward needs a 1x1 loss, got " +
                        nodes_[loss.id].value.shape_string());
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    n.grad = Matrix(n.value.rows(), n.value.cols(), 0.0);
  }
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad) continue;
    propagate(n);
  }
}

void Graph::propagate(Node& n) {
  const Matrix& g = n.grad;
  auto parent = [&](std::size_t k) -> Node& { return nodes_[n.parents[k]]; };

  switch (n.op) {
    case OpKind::kParameter: {
      if (n.leaf != nullptr && n.leaf->requires_grad) {
        for (std::size_t i = 0; i < g.size(); ++i) n.leaf->grad[i] += g[i];
      }
      break;
    }
    case OpKind::kConstant:
    case OpKind::kDetach:
      break;
    case OpKind::kMatMul: {
      Node& a = parent(0);
      Node& b = parent(1);
      if (a.needs_grad) gemm_abt_acc(g, b.value, a.grad);
      if (b.needs_grad) gemm_atb_acc(a.value, g, b.grad);
      break;
    }
    case OpKind::kAdd:
    case OpKind::kSub: {
      const double sign = n.op == OpKind::kAdd ? 1.0 : -1.0;
      Node& a = parent(0);
      Node& b = parent(1);
      if (a.needs_grad)
        for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i];
      if (b.needs_grad)
        for (std::size_t i = 0; i < g.size(); ++i) b.grad[i] += sign * g[i];
      break;
    }
    case OpKind::kScale: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += n.scalar * g[i];
      break;
    }
    case OpKind::kHadamard: {
      Node& a = parent(0);
      Node& b = parent(1);
      if (a.needs_grad)
        for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i] * b.value[i];
      if (b.needs_grad)
        for (std::size_t i = 0; i < g.size(); ++i) b.grad[i] += g[i] * a.value[i];
      break;
    }
    case OpKind::kDiv: {
      Node& a = parent(0);
      Node& b = parent(1);
      if (a.needs_grad)
        for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i] / b.value[i];
      if (b.needs_grad)
        for (std::size_t i = 0; i < g.size(); ++i)
          b.grad[i] -= g[i] * n.value[i] / b.value[i];
      break;
    }
    case OpKind::kRelu: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a.value[i] > 0.0) a.grad[i] += g[i];
      break;
    }
    case OpKind::kLog: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i] / a.value[i];
      break;
    }
    case OpKind::kExp: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i] * n.value[i];
      break;
    }
    case OpKind::kAbs: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = a.value[i];
        if (x > 0.0)
          a.grad[i] += g[i];
        else if (x < 0.0)
          a.grad[i] -= g[i];
      }
      break;
    }
    case OpKind::kSigmoid: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        a.grad[i] += g[i] * y * (1.0 - y);
      }
      break;
    }
    case OpKind::kXLogX: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = a.value[i];
        if (x > 0.0) a.grad[i] += g[i] * (std::log(x) + 1.0);
      }
      break;
    }
    case OpKind::kRowSum: {
      Node& a = parent(0);
      for (std::size_t r = 0; r < a.value.rows(); ++r)
        for (std::size_t c = 0; c < a.value.cols(); ++c) a.grad(r, c) += g[r];
      break;
    }
    case OpKind::kMeanAll: {
      Node& a = parent(0);
      const double share = g[0] / static_cast<double>(a.value.size());
      for (std::size_t i = 0; i < a.value.size(); ++i) a.grad[i] += share;
      break;
    }
    case OpKind::kConcatCols: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        Node& p = parent(k);
        const std::size_t w = p.value.cols();
        if (p.needs_grad) {
          for (std::size_t r = 0; r < p.value.rows(); ++r)
            for (std::size_t c = 0; c < w; ++c) p.grad(r, c) += g(r, offset + c);
        }
        offset += w;
      }
      break;
    }
    case OpKind::kSoftmax: {
      // dz = (g - <g, y>) * y / T, row by row.
      Node& a = parent(0);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * n.value(r, c);
        for (std::size_t c = 0; c < g.cols(); ++c)
          a.grad(r, c) += (g(r, c) - dot) * n.value(r, c) / n.scalar;
      }
      break;
    }
    case OpKind::kLogSoftmax: {
      // dz = (g - p * sum(g)) / T with p the saved softmax rows.
      Node& a = parent(0);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < g.cols(); ++c) total += g(r, c);
        for (std::size_t c = 0; c < g.cols(); ++c)
          a.grad(r, c) += (g(r, c) - n.saved(r, c) * total) / n.scalar;
      }
      break;
    }
  }
}

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + av.shape_string() + " x " +
                     bv.shape_string());
  }
  Matrix out(av.rows(), bv.cols(), 0.0);
  gemm_acc(av, bv, out);
  return a.graph->push(OpKind::kMatMul, {a, b}, std::move(out));
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.graph->push(OpKind::kAdd, {a, b}, std::move(out));
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.graph->push(OpKind::kSub, {a, b}, std::move(out));
}

Var scale(Var a, double s) {
  return a.graph->push(OpKind::kScale, {a}, map(a.value(), [s](double x) { return s * x; }), s);
}

Var hadamard(Var a, Var b) {
  require_same_shape("hadamard", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.graph->push(OpKind::kHadamard, {a, b}, std::move(out));
}

Var div(Var a, Var b) {
  require_same_shape("div", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (b.value()[i] == 0.0) throw NumericError("div: zero denominator at entry " + std::to_string(i));
    out[i] = out[i] / b.value()[i];
  }
  return a.graph->push(OpKind::kDiv, {a, b}, std::move(out));
}

Var relu(Var a) {
  return a.graph->push(OpKind::kRelu, {a},
                       map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }));
}

Var log(Var a) {
  for (double x : a.value().data()) {
    if (!(x > 0.0)) throw NumericError("log of non-positive value " + std::to_string(x));
  }
  return a.graph->push(OpKind::kLog, {a}, map(a.value(), [](double x) { return std::log(x); }));
}

Var exp(Var a) {
  return a.graph->push(OpKind::kExp, {a}, map(a.value(), [](double x) { return std::exp(x); }));
}

Var abs(Var a) {
  return a.graph->push(OpKind::kAbs, {a}, map(a.value(), [](double x) { return std::fabs(x); }));
}

Var sigmoid(Var a) {
  return a.graph->push(OpKind::kSigmoid, {a}, map(a.value(), sigmoid_value));
}

Var xlogx(Var a) {
  for (double x : a.value().data()) {
    if (x < 0.0) throw NumericError("xlogx of negative value " + std::to_string(x));
  }
  return a.graph->push(OpKind::kXLogX, {a},
                       map(a.value(), [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; }));
}

Var row_sum(Var a) {
  const Matrix& av = a.value();
  Matrix out(av.rows(), 1, 0.0);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (double v : av.row(r)) s += v;
    out[r] = s;
  }
  return a.graph->push(OpKind::kRowSum, {a}, std::move(out));
}

Var mean_all(Var a) {
  const Matrix& av = a.value();
  if (av.size() == 0) throw ShapeError("mean_all of an empty matrix");
  double s = 0.0;
  for (double v : av.data()) s += v;
  return a.graph->push(OpKind::kMeanAll, {a}, Matrix(1, 1, s / static_cast<double>(av.size())));
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols needs at least one part");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + parts.front().value().shape_string() +
                       " vs " + p.value().shape_string());
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols();
  }
  return parts.front().graph->push(OpKind::kConcatCols, parts, std::move(out));
}

Var softmax_t(Var logits, double temperature) {
  return logits.graph->push(OpKind::kSoftmax, {logits},
                            softmax_values(logits.value(), temperature), temperature);
}

Var log_softmax_t(Var logits, double temperature) {
  const Matrix e = shifted_exp(logits.value(), temperature);
  const Matrix& z = logits.value();
  Matrix out(z.rows(), z.cols());
  Matrix probs(z.rows(), z.cols());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const auto zr = z.row(r);
    const double m = *std::max_element(zr.begin(), zr.end());
    double s = 0.0;
    for (double v : e.row(r)) s += v;
    const double log_s = std::log(s);
    for (std::size_t c = 0; c < z.cols(); ++c) {
      out(r, c) = (zr[c] - m) / temperature - log_s;
      probs(r, c) = e(r, c) / s;
    }
  }
  return logits.graph->push(OpKind::kLogSoftmax, {logits}, std::move(out), temperature,
                            std::move(probs));
}

Var detach(Var a) { return a.graph->push(OpKind::kDetach, {a}, a.value()); }

Var add_bias(Var x, Var bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError("add_bias: bias " + bias.value().shape_string() + " does not fit " +
                     x.value().shape_string());
  }
  return add(x, matmul(x.graph->ones(x.rows(), 1), bias));
}

Var broadcast_cols(Var col, std::size_t cols) {
  if (col.cols() != 1) throw ShapeError("broadcast_cols: expected a column, got " +
                                        col.value().shape_string());
  return matmul(col, col.graph->ones(1, cols));
}

Var normalize_rows(Var w) { return div(w, broadcast_cols(row_sum(w), w.cols())); }

}  // namespace akd
