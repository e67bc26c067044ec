#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "akd/graph.hpp"

namespace akd {

struct DenseLayer {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

// Fully-connected relu network. widths = {input, hidden..., classes}.
class MlpModel {
 public:
  MlpModel() = default;
  // Zero-initialized layers.
  explicit MlpModel(std::vector<std::size_t> widths);
  explicit MlpModel(std::vector<DenseLayer> layers);

  // Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static MlpModel random(std::vector<std::size_t> widths, std::uint64_t seed);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<Tensor*> parameters();

  bool operator==(const MlpModel& other) const;

 private:
  std::vector<std::size_t> widths_;
  std::vector<DenseLayer> layers_;
};

// Affine-relu stack ending in an affine layer; returns b x classes logits.
// ShapeError when x does not have input_width columns.
Var mlp_forward(Graph& g, MlpModel& model, Var x);

// Logits without building a differentiable graph for the parameters.
Matrix mlp_predict(const MlpModel& model, const Matrix& x);

}  // namespace akd
