#include "akd/mlp.hpp"

#include <cmath>
#include <random>
#include <string>

#include "akd/error.hpp"

namespace akd {

namespace {

void check_widths(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) throw ParameterError("an MLP needs at least input and output widths");
  for (std::size_t w : widths) {
    if (w == 0) throw ParameterError("MLP layer widths must be positive");
  }
}

}  // namespace

MlpModel::MlpModel(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  check_widths(widths_);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    layers_.push_back({Tensor(Matrix(widths_[l], widths_[l + 1], 0.0)),
                       Tensor(Matrix(1, widths_[l + 1], 0.0))});
  }
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ParameterError("an MLP needs at least one layer");
  widths_.push_back(layers_.front().weight.rows());
  for (const DenseLayer& l : layers_) {
    if (l.weight.rows() != widths_.back() || l.bias.rows() != 1 ||
        l.bias.cols() != l.weight.cols()) {
      throw ShapeError("inconsistent layer shapes: weight " + l.weight.value.shape_string() +
                       ", bias " + l.bias.value.shape_string());
    }
    widths_.push_back(l.weight.cols());
  }
}

MlpModel MlpModel::random(std::vector<std::size_t> widths, std::uint64_t seed) {
  MlpModel model(std::move(widths));
  std::mt19937_64 rng(seed);
  for (DenseLayer& layer : model.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : layer.weight.value.data()) v = dist(rng);
    for (double& v : layer.bias.value.data()) v = dist(rng);
  }
  return model;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += l.weight.value.size() + l.bias.value.size();
  return n;
}

std::vector<Tensor*> MlpModel::parameters() {
  std::vector<Tensor*> out;
  for (DenseLayer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

bool MlpModel::operator==(const MlpModel& other) const {
  if (widths_ != other.widths_) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].weight.value != other.layers_[i].weight.value ||
        layers_[i].bias.value != other.layers_[i].bias.value) {
      return false;
    }
  }
  return true;
}

Var mlp_forward(Graph& g, MlpModel& model, Var x) {
  if (x.cols() != model.input_width()) {
    throw ShapeError("mlp_forward: input " + x.value().shape_string() + " but model expects " +
                     std::to_string(model.input_width()) + " columns");
  }
  Var h = x;
  auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = add_bias(matmul(h, g.parameter(layers[l].weight)), g.parameter(layers[l].bias));
    if (l + 1 < layers.size()) h = relu(h);
  }
  return h;
}

Matrix mlp_predict(const MlpModel& model, const Matrix& x) {
  if (x.cols() != model.input_width()) {
    throw ShapeError("mlp_predict: input " + x.shape_string() + " but model expects " +
                     std::to_string(model.input_width()) + " columns");
  }
  // Same forward path as training, on a frozen copy.
  MlpModel frozen = model;
  for (Tensor* t : frozen.parameters()) t->requires_grad = false;
  Graph g;
  return mlp_forward(g, frozen, g.constant(x)).value();
}

}  // namespace akd
