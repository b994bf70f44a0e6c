#pragma once

// Dense 64-bit tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a cheap shared handle. Leaves are created with
// Tensor::constant / Tensor::parameter; everything else is produced by a
// Tape, which records each primitive whose inputs require gradients.
// One tape belongs to one thread; separate tapes may run concurrently while
// parameters are only read.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gsc/kernels.hpp"
#include "gsc/matrix.hpp"

namespace gsc::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor parameter(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor from_matrix(const Matrix& m, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  // Matrix view: rank-2 tensors map directly, rank-1 tensors are a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->value; }
  // Direct write access for initializers and optimizers. Never use on a
  // tensor whose value has been consumed by a live tape.
  std::span<double> mutable_values() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void ensure_grad() { node_->ensure_grad(); }
  void clear_grad() { node_->grad.clear(); }

  double item() const;
  double operator()(std::size_t i, std::size_t j) const { return node_->value[i * cols() + j]; }
  Matrix to_matrix() const;

  // Constant copy of the current value, disconnected from any tape.
  Tensor detach() const;

  const Node* node() const noexcept { return node_.get(); }
  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
  friend class Tape;
};

class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Linear algebra
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a · bᵀ
  Tensor transpose(const Tensor& a);
  Tensor spmm(const kernels::CsrMatrix& s, const Tensor& x);  // s is a constant

  // Elementwise
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  Tensor add_scalar(const Tensor& a, double c);
  Tensor add_broadcast(const Tensor& a, const Tensor& s);  // s is 1×1
  Tensor add_row(const Tensor& a, const Tensor& row);      // row is 1×cols
  Tensor exp(const Tensor& a);
  Tensor log(const Tensor& a);
  Tensor leaky_relu(const Tensor& a, double negative_slope = 0.2);
  Tensor prelu(const Tensor& a, const Tensor& slope);  // slope is a learnable 1×1
  Tensor clamp_max(const Tensor& a, double upper);
  Tensor clamp(const Tensor& a, double lower, double upper);

  // Structure
  Tensor concat_cols(const Tensor& a, const Tensor& b);
  Tensor concat_rows(std::span<const Tensor> parts);
  Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
  Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);

  // Normalizations and reductions
  Tensor softmax(const Tensor& a);  // over all elements of a vector-shaped tensor
  Tensor row_norms(const Tensor& a);
  // Rows divided by their L2 norm. Zero rows stay zero and are counted in *zero_rows.
  Tensor normalize_rows(const Tensor& a, std::size_t* zero_rows = nullptr);
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  Tensor dot(const Tensor& a, const Tensor& b);  // Σ a∘b, 1×1
  // Mean over rows of −log softmax(logits_i)[labels_i].
  Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

  // Seeds the root with 1 and runs every recorded backward function in
  // reverse order. Gradients accumulate into leaves additively.
  void backward(const Tensor& root);

  std::size_t size() const noexcept { return entries_.size(); }

  // Extension point for fused primitives defined outside this file. Output
  // tensors must come from make_output. The backward function reads the
  // outputs' grads and accumulates into the inputs' grads.
  static Tensor make_output(Shape shape, std::vector<double> value, bool requires_grad);
  void record(std::span<const Tensor> inputs, std::span<const Tensor> outputs, BackwardFn fn);
  static bool any_requires_grad(std::span<const Tensor> inputs);
  static Node& node_of(const Tensor& t) { return *t.node_; }

  // Position of each output node in the record, for order checks.
  struct EntryView {
    std::vector<const Node*> inputs;
    std::vector<const Node*> outputs;
  };
  std::vector<EntryView> entries() const;

 private:
  struct Entry {
    std::vector<std::shared_ptr<Node>> inputs;
    std::vector<std::shared_ptr<Node>> outputs;
    BackwardFn fn;
  };
  Tensor emit(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
              std::function<void(const Node& out)> fn);

  std::vector<Entry> entries_;
  bool consumed_ = false;
};

// Pairwise cosine similarity of the rows of a (n×F) and b (m×F), clamped to
// [-1, 1]. A zero-norm row has similarity 0 with everything; such rows are
// added to *zero_rows.
Tensor cosine_matrix(Tape& tape, const Tensor& a, const Tensor& b, std::size_t* zero_rows = nullptr);

}  // namespace gsc::ad
