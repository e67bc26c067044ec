#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "akd/tensor.hpp"

namespace akd {

class Graph;

enum class OpKind {
  kParameter,
  kConstant,
  kMatMul,
  kAdd,
  kSub,
  kScale,
  kHadamard,
  kDiv,
  kRelu,
  kLog,
  kExp,
  kAbs,
  kSigmoid,
  kXLogX,
  kRowSum,
  kMeanAll,
  kConcatCols,
  kSoftmax,
  kLogSoftmax,
  kDetach,
};

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;
};

// Append-only tape. Node i only ever references nodes with index < i, so the
// reverse insertion order is a valid topological order for backward().
//
// Single-threaded per instance; separate graphs share nothing.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Registers a persistent leaf. The tensor must outlive the graph; backward()
  // accumulates into tensor.grad when tensor.requires_grad is set.
  Var parameter(Tensor& tensor);
  Var constant(Matrix value);
  Var ones(std::size_t rows, std::size_t cols) { return constant(Matrix(rows, cols, 1.0)); }

  const Matrix& value(Var v) const;
  const Matrix& grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  OpKind kind(Var v) const;

  // Reverse sweep from a 1x1 loss. Intermediate gradients are recomputed from
  // scratch on each call; parameter tensors accumulate across calls.
  void backward(Var loss);

 private:
  struct Node {
    OpKind op;
    std::vector<std::size_t> parents;
    Matrix value;
    Matrix grad;
    Matrix saved;
    Tensor* leaf = nullptr;
    double scalar = 0.0;
    bool needs_grad = false;
  };

  Var push(OpKind op, std::initializer_list<Var> parents, Matrix value, double scalar = 0.0,
           Matrix saved = {});
  Var push(OpKind op, const std::vector<Var>& parents, Matrix value, double scalar = 0.0,
           Matrix saved = {});
  void check_owned(Var v) const;
  void propagate(Node& node);

  std::vector<Node> nodes_;

  friend Var matmul(Var, Var);
  friend Var add(Var, Var);
  friend Var sub(Var, Var);
  friend Var scale(Var, double);
  friend Var hadamard(Var, Var);
  friend Var div(Var, Var);
  friend Var relu(Var);
  friend Var log(Var);
  friend Var exp(Var);
  friend Var abs(Var);
  friend Var sigmoid(Var);
  friend Var xlogx(Var);
  friend Var row_sum(Var);
  friend Var mean_all(Var);
  friend Var concat_cols(const std::vector<Var>&);
  friend Var softmax_t(Var, double);
  friend Var log_softmax_t(Var, double);
  friend Var detach(Var);
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
// Elementwise quotient a / b.
Var div(Var a, Var b);
Var relu(Var a);
// Natural log; throws NumericError on non-positive entries.
Var log(Var a);
Var exp(Var a);
Var abs(Var a);
Var sigmoid(Var a);
// x * log(x) with the 0 * log 0 = 0 convention; entries must be >= 0.
Var xlogx(Var a);
Var row_sum(Var a);
Var mean_all(Var a);
Var concat_cols(const std::vector<Var>& parts);
// Row-wise softmax of logits / temperature with max subtraction.
Var softmax_t(Var logits, double temperature);
// Row-wise log of softmax_t, via log-sum-exp.
Var log_softmax_t(Var logits, double temperature);
// Same value, no gradient path.
Var detach(Var a);

// Explicit-shape helpers built from the primitives above.
Var add_bias(Var x, Var bias);        // x[b x n] + ones[b x 1] * bias[1 x n]
Var broadcast_cols(Var col, std::size_t cols);  // col[b x 1] * ones[1 x cols]
Var normalize_rows(Var w);            // w / row_sum(w), each row summing to 1

// Stable logistic function on a plain double.
double sigmoid_value(double x);

// exp((z - rowmax) / T) and the row sums of that matrix, computed exactly as
// the softmax_t forward pass does, so callers can reproduce its rows bitwise.
Matrix shifted_exp(const Matrix& logits, double temperature);
Matrix softmax_values(const Matrix& logits, double temperature);

}  // namespace akd
