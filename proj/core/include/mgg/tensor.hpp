#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgg {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major f64 tensor. Copies share storage (and gradient storage),
/// so a Tensor is a cheap handle into the graph built on a Tape.
struct Tensor {
  Shape shape;
  std::shared_ptr<std::vector<double>> data;
  std::shared_ptr<std::vector<double>> grad;  // allocated iff requires_grad
  bool requires_grad = false;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);

  std::size_t size() const { return data ? data->size() : 0; }
  double& operator[](std::size_t i) { return (*data)[i]; }
  double operator[](std::size_t i) const { return (*data)[i]; }

  std::vector<double>& values() { return *data; }
  const std::vector<double>& values() const { return *data; }

  /// Gradient buffer; throws if this tensor does not carry one.
  std::vector<double>& grad_ref();
  const std::vector<double>& grad_ref() const;

  void zero_grad();

  /// Value of a one-element tensor.
  double item() const;

  /// View with a different shape over the same storage (same element count).
  Tensor reshaped(Shape new_shape) const;
};

/// Records backward rules in execution order; rebuilt each forward pass.
/// Reverse iteration over the recorded list is reverse topological order.
class Tape {
 public:
  void record(std::function<void()> backward_fn);

  /// Registers an op output's gradient buffer. These are scratch space owned
  /// by the tape: backward() zeroes them before traversal so repeated calls
  /// propagate a fresh seed instead of compounding stale intermediate grads.
  void track(std::shared_ptr<std::vector<double>> grad);

  /// Seeds d(loss)/d(loss)=1 and runs every recorded rule once, in reverse.
  /// Leaf gradients accumulate additively across calls; call zero_grad on
  /// the leaves between passes.
  void backward(Tensor& loss);

  std::size_t node_count() const { return nodes_.size(); }
  void clear() {
    nodes_.clear();
    output_grads_.clear();
  }

 private:
  std::vector<std::function<void()>> nodes_;
  std::vector<std::shared_ptr<std::vector<double>>> output_grads_;
};

enum class Padding { Same, Valid };

// --- differentiable ops -----------------------------------------------------

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight,
              const Tensor& bias, Padding padding, int stride = 1);

Tensor batchnorm2d(Tape& tape, const Tensor& input, const Tensor& gamma,
                   const Tensor& beta, Tensor& running_mean,
                   Tensor& running_var, bool train, double eps = 1e-5,
                   double momentum = 0.1);

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);

/// [N,C,H,W] -> [N,C] spatial mean.
Tensor global_avg_pool(Tape& tape, const Tensor& x);

/// Mean over (h,w) of feature[n,c,h,w] * mask[n,0,h,w]; mask broadcasts
/// across channels. [N,C,H,W] x [N,1,H,W] -> [N,C].
Tensor masked_pool(Tape& tape, const Tensor& feature, const Tensor& mask);

/// y = x * w^T with w stored [out,in]; x is [n,in], result [n,out].
Tensor matmul_rows(Tape& tape, const Tensor& x, const Tensor& w);
Tensor add_rowvec(Tape& tape, const Tensor& x, const Tensor& b);
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

/// Row-wise softmax with max-subtraction; x is [n,m].
Tensor rows_softmax(Tape& tape, const Tensor& x);
/// Softmax over a length-m vector.
Tensor softmax_vec(Tape& tape, const Tensor& logits);

/// Row i of x scaled by s[i]; x is [n,m], s is [n].
Tensor scale_rows(Tape& tape, const Tensor& x, const Tensor& s);
/// Column col of [n,m] as a length-n tensor.
Tensor select_col(Tape& tape, const Tensor& x, std::size_t col);
/// Stack m length-n tensors into [n,m].
Tensor stack_cols(Tape& tape, const std::vector<Tensor>& cols);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(Tape& tape, const Tensor& x, double c);
Tensor sum_all(Tape& tape, const Tensor& x);  // scalar

/// Mean over the batch of the (optionally class-weighted) binary
/// cross-entropy between prob[i] and labels[i]; probabilities are clamped
/// to [eps, 1-eps] with eps=1e-12 before the logs.
Tensor bce_mean(Tape& tape, const Tensor& prob,
                const std::vector<double>& labels, double pos_weight = 1.0,
                double neg_weight = 1.0);

}  // namespace mgg
