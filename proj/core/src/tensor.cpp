#include "mgg/tensor.hpp"

#include <cmath>
#include <sstream>

namespace mgg {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t;
  std::size_t n = shape_size(shape);
  t.shape = std::move(shape);
  t.data = std::make_shared<std::vector<double>>(n, value);
  t.requires_grad = requires_grad;
  if (requires_grad) t.grad = std::make_shared<std::vector<double>>(n, 0.0);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  if (shape_size(shape) != values.size())
    throw ShapeError("Tensor::from: " + shape_str(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::make_shared<std::vector<double>>(std::move(values));
  t.requires_grad = requires_grad;
  if (requires_grad)
    t.grad = std::make_shared<std::vector<double>>(t.data->size(), 0.0);
  return t;
}

std::vector<double>& Tensor::grad_ref() {
  if (!grad) throw std::runtime_error("tensor has no gradient buffer");
  return *grad;
}

const std::vector<double>& Tensor::grad_ref() const {
  if (!grad) throw std::runtime_error("tensor has no gradient buffer");
  return *grad;
}

void Tensor::zero_grad() {
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
}

double Tensor::item() const {
  if (size() != 1)
    throw ShapeError("item() on non-scalar tensor " + shape_str(shape));
  return (*data)[0];
}

Tensor Tensor::reshaped(Shape new_shape) const {
  if (shape_size(new_shape) != size())
    throw ShapeError("reshape " + shape_str(shape) + " -> " +
                     shape_str(new_shape));
  Tensor t = *this;
  t.shape = std::move(new_shape);
  return t;
}

void Tape::record(std::function<void()> backward_fn) {
  nodes_.push_back(std::move(backward_fn));
}

void Tape::track(std::shared_ptr<std::vector<double>> grad) {
  if (grad) output_grads_.push_back(std::move(grad));
}

void Tape::backward(Tensor& loss) {
  if (loss.size() != 1)
    throw ShapeError("backward: loss must be scalar, got " +
                     shape_str(loss.shape));
  if (!loss.grad)
    loss.grad = std::make_shared<std::vector<double>>(1, 0.0);
  for (auto& g : output_grads_) std::fill(g->begin(), g->end(), 0.0);
  (*loss.grad)[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace mgg
