#include "gsc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "gsc/errors.hpp"

namespace gsc::ad {

namespace {

using NodePtr = std::shared_ptr<Node>;

// Gradient buffer of an input, or nullptr when the input is not differentiable.
double* grad_target(Node& n) {
  if (!n.requires_grad) return nullptr;
  n.ensure_grad();
  return n.grad.data();
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2) throw DimensionError(op, "expected a matrix, got shape " + shape_str(t.shape()));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError(op, "shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void require_scalar(const char* op, const Tensor& t) {
  if (t.numel() != 1) throw DimensionError(op, "expected a 1×1 tensor, got " + shape_str(t.shape()));
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (shape.empty() || std::find(shape.begin(), shape.end(), 0u) != shape.end())
    throw DimensionError("tensor", "shape entries must be positive, got " + shape_str(shape));
  if (shape_numel(shape) != values.size())
    throw DimensionError("tensor", "shape " + shape_str(shape) + " does not hold " + std::to_string(values.size()) +
                                       " values");
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  Tensor t = constant(std::move(shape), std::vector<double>(n, 0.0));
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double v) { return constant({1, 1}, {v}); }

Tensor Tensor::from_matrix(const Matrix& m, bool requires_grad) {
  Tensor t = constant({m.rows, m.cols}, m.data);
  t.node_->requires_grad = requires_grad;
  return t;
}

std::size_t Tensor::rows() const { return rank() == 2 ? node_->shape[0] : 1; }

std::size_t Tensor::cols() const { return rank() == 2 ? node_->shape[1] : numel(); }

double Tensor::item() const {
  if (numel() != 1) throw ContractViolation("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

Matrix Tensor::to_matrix() const { return Matrix(rows(), cols(), node_->value); }

Tensor Tensor::detach() const { return constant(node_->shape, node_->value); }

// ---------------------------------------------------------------------------
// Tape plumbing

Tensor Tape::make_output(Shape shape, std::vector<double> value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

bool Tape::any_requires_grad(std::span<const Tensor> inputs) {
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void Tape::record(std::span<const Tensor> inputs, std::span<const Tensor> outputs, BackwardFn fn) {
  if (consumed_) throw ContractViolation("tape already ran backward; record on a fresh tape");
  Entry e;
  for (const auto& t : inputs) e.inputs.push_back(t.node_);
  for (const auto& t : outputs) e.outputs.push_back(t.node_);
  e.fn = std::move(fn);
  entries_.push_back(std::move(e));
}

Tensor Tape::emit(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
                  std::function<void(const Node& out)> fn) {
  const bool needs = any_requires_grad(std::span<const Tensor>(inputs.begin(), inputs.size()));
  Tensor out = make_output(std::move(shape), std::move(value), needs);
  if (needs) {
    NodePtr on = out.node_;
    const Tensor outs[] = {out};
    record(std::span<const Tensor>(inputs.begin(), inputs.size()), outs,
           [on, fn = std::move(fn)] { fn(*on); });
  }
  return out;
}

std::vector<Tape::EntryView> Tape::entries() const {
  std::vector<EntryView> v;
  v.reserve(entries_.size());
  for (const auto& e : entries_) {
    EntryView ev;
    for (const auto& n : e.inputs) ev.inputs.push_back(n.get());
    for (const auto& n : e.outputs) ev.outputs.push_back(n.get());
    v.push_back(std::move(ev));
  }
  return v;
}

void Tape::backward(const Tensor& root) {
  if (!root.defined() || root.numel() != 1)
    throw ContractViolation("backward root must be a scalar, got " +
                            (root.defined() ? shape_str(root.shape()) : std::string("undefined")));
  if (consumed_) throw ContractViolation("backward already ran on this tape");
  consumed_ = true;
  if (!root.requires_grad()) return;
  root.node_->ensure_grad();
  root.node_->grad[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    const bool reached = std::any_of(it->outputs.begin(), it->outputs.end(),
                                     [](const NodePtr& n) { return !n->grad.empty(); });
    if (reached) it->fn();
  }
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) throw DimensionError("matmul", shape_str(a.shape()) + " · " + shape_str(b.shape()));
  std::vector<double> out(m * n);
  kernels::matmul(kernels::default_exec(), m, k, n, a.values(), b.values(), out, false);
  NodePtr an = a.node_, bn = b.node_;
  return emit({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](const Node& o) {
    const auto exec = kernels::default_exec();
    if (double* ga = grad_target(*an)) {
      kernels::matmul_nt(exec, m, n, k, o.grad, bn->value, std::span<double>(ga, m * k), true);
    }
    if (double* gb = grad_target(*bn)) {
      kernels::matmul_tn(exec, k, m, n, an->value, o.grad, std::span<double>(gb, k * n), true);
    }
  });
}

Tensor Tape::matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2("matmul_nt", a);
  require_rank2("matmul_nt", b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) throw DimensionError("matmul_nt", shape_str(a.shape()) + " · " + shape_str(b.shape()) + "ᵀ");
  std::vector<double> out(m * n);
  kernels::matmul_nt(kernels::default_exec(), m, k, n, a.values(), b.values(), out, false);
  NodePtr an = a.node_, bn = b.node_;
  return emit({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](const Node& o) {
    const auto exec = kernels::default_exec();
    // dA = dC · B, dB = dCᵀ · A
    if (double* ga = grad_target(*an)) {
      kernels::matmul(exec, m, n, k, o.grad, bn->value, std::span<double>(ga, m * k), true);
    }
    if (double* gb = grad_target(*bn)) {
      kernels::matmul_tn(exec, n, m, k, o.grad, an->value, std::span<double>(gb, n * k), true);
    }
  });
}

Tensor Tape::transpose(const Tensor& a) {
  require_rank2("transpose", a);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.values()[i * c + j];
  NodePtr an = a.node_;
  return emit({c, r}, std::move(out), {a}, [an, r, c](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += o.grad[j * r + i];
  });
}

Tensor Tape::spmm(const kernels::CsrMatrix& s, const Tensor& x) {
  require_rank2("spmm", x);
  if (x.rows() != s.cols)
    throw DimensionError("spmm", std::to_string(s.rows) + "x" + std::to_string(s.cols) + " sparse · " +
                                     shape_str(x.shape()));
  const std::size_t n = x.cols();
  std::vector<double> out(s.rows * n);
  kernels::spmm(kernels::default_exec(), s, n, x.values(), out, false);
  NodePtr xn = x.node_;
  const kernels::CsrMatrix* sp = &s;
  return emit({s.rows, n}, std::move(out), {x}, [xn, sp, n](const Node& o) {
    if (double* gx = grad_target(*xn)) kernels::spmm_t(*sp, n, o.grad, std::span<double>(gx, xn->value.size()));
  });
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  NodePtr an = a.node_, bn = b.node_;
  return emit(a.shape(), std::move(out), {a, b}, [an, bn](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
    if (double* gb = grad_target(*bn))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gb[i] += o.grad[i];
  });
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  NodePtr an = a.node_, bn = b.node_;
  return emit(a.shape(), std::move(out), {a, b}, [an, bn](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
    if (double* gb = grad_target(*bn))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gb[i] -= o.grad[i];
  });
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  NodePtr an = a.node_, bn = b.node_;
  return emit(a.shape(), std::move(out), {a, b}, [an, bn](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * bn->value[i];
    if (double* gb = grad_target(*bn))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gb[i] += o.grad[i] * an->value[i];
  });
}

Tensor Tape::scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a.values()[i];
  NodePtr an = a.node_;
  return emit(a.shape(), std::move(out), {a}, [an, c](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += c * o.grad[i];
  });
}

Tensor Tape::add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + c;
  NodePtr an = a.node_;
  return emit(a.shape(), std::move(out), {a}, [an](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
  });
}

Tensor Tape::add_broadcast(const Tensor& a, const Tensor& s) {
  require_scalar("add_broadcast", s);
  const double sv = s.values()[0];
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + sv;
  NodePtr an = a.node_, sn = s.node_;
  return emit(a.shape(), std::move(out), {a, s}, [an, sn](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
    if (double* gs = grad_target(*sn)) {
      double acc = 0.0;
      for (double g : o.grad) acc += g;
      gs[0] += acc;
    }
  });
}

Tensor Tape::add_row(const Tensor& a, const Tensor& row) {
  require_rank2("add_row", a);
  if (row.numel() != a.cols())
    throw DimensionError("add_row", shape_str(a.shape()) + " + row " + shape_str(row.shape()));
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = a.values()[i * c + j] + row.values()[j];
  NodePtr an = a.node_, rn = row.node_;
  return emit(a.shape(), std::move(out), {a, row}, [an, rn, r, c](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
    if (double* gr = grad_target(*rn))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gr[j] += o.grad[i * c + j];
  });
}

Tensor Tape::exp(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.values()[i]);
  NodePtr an = a.node_;
  return emit(a.shape(), std::move(out), {a}, [an](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * o.value[i];
  });
}

Tensor Tape::log(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(a.values()[i]);
  NodePtr an = a.node_;
  return emit(a.shape(), std::move(out), {a}, [an](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] / an->value[i];
  });
}

Tensor Tape::leaky_relu(const Tensor& a, double negative_slope) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.values()[i];
    out[i] = x > 0.0 ? x : negative_slope * x;
  }
  NodePtr an = a.node_;
  return emit(a.shape(), std::move(out), {a}, [an, negative_slope](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        ga[i] += o.grad[i] * (an->value[i] > 0.0 ? 1.0 : negative_slope);
  });
}

Tensor Tape::prelu(const Tensor& a, const Tensor& slope) {
  require_scalar("prelu", slope);
  const double s = slope.values()[0];
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.values()[i];
    out[i] = x > 0.0 ? x : s * x;
  }
  NodePtr an = a.node_, sn = slope.node_;
  return emit(a.shape(), std::move(out), {a, slope}, [an, sn](const Node& o) {
    const double s = sn->value[0];
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * (an->value[i] > 0.0 ? 1.0 : s);
    if (double* gs = grad_target(*sn)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        if (an->value[i] <= 0.0) acc += o.grad[i] * an->value[i];
      gs[0] += acc;
    }
  });
}

Tensor Tape::clamp_max(const Tensor& a, double upper) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(a.values()[i], upper);
  NodePtr an = a.node_;
  return emit(a.shape(), std::move(out), {a}, [an, upper](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        if (an->value[i] < upper) ga[i] += o.grad[i];
  });
}

Tensor Tape::clamp(const Tensor& a, double lower, double upper) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(a.values()[i], lower, upper);
  NodePtr an = a.node_;
  return emit(a.shape(), std::move(out), {a}, [an, lower, upper](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        if (an->value[i] > lower && an->value[i] < upper) ga[i] += o.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Structure

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
  require_rank2("concat_cols", a);
  require_rank2("concat_cols", b);
  if (a.rows() != b.rows())
    throw DimensionError("concat_cols", shape_str(a.shape()) + " ‖ " + shape_str(b.shape()));
  const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols(), c = ca + cb;
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(a.values().begin() + static_cast<std::ptrdiff_t>(i * ca), ca, out.begin() + static_cast<std::ptrdiff_t>(i * c));
    std::copy_n(b.values().begin() + static_cast<std::ptrdiff_t>(i * cb), cb,
                out.begin() + static_cast<std::ptrdiff_t>(i * c + ca));
  }
  NodePtr an = a.node_, bn = b.node_;
  return emit({r, c}, std::move(out), {a, b}, [an, bn, r, ca, cb, c](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += o.grad[i * c + j];
    if (double* gb = grad_target(*bn))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += o.grad[i * c + ca + j];
  });
}

Tensor Tape::concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows", "no inputs");
  const std::size_t c = parts.front().cols();
  std::size_t r = 0;
  for (const auto& p : parts) {
    require_rank2("concat_rows", p);
    if (p.cols() != c) throw DimensionError("concat_rows", "column mismatch " + shape_str(p.shape()));
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  const bool needs = any_requires_grad(parts);
  Tensor result = make_output({r, c}, std::move(out), needs);
  if (needs) {
    std::vector<NodePtr> ins;
    for (const auto& p : parts) ins.push_back(p.node_);
    NodePtr on = result.node_;
    const Tensor outs[] = {result};
    record(parts, outs, [ins, on] {
      std::size_t offset = 0;
      for (const auto& in : ins) {
        const std::size_t n = in->value.size();
        if (double* g = grad_target(*in))
          for (std::size_t i = 0; i < n; ++i) g[i] += on->grad[offset + i];
        offset += n;
      }
    });
  }
  return result;
}

Tensor Tape::slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2("slice_cols", a);
  if (begin >= end || end > a.cols())
    throw DimensionError("slice_cols", "range [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                                           shape_str(a.shape()));
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a.values()[i * c + begin + j];
  NodePtr an = a.node_;
  return emit({r, w}, std::move(out), {a}, [an, r, c, w, begin](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) ga[i * c + begin + j] += o.grad[i * w + j];
  });
}

Tensor Tape::gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require_rank2("gather_rows", a);
  if (rows.empty()) throw DimensionError("gather_rows", "empty row list");
  const std::size_t c = a.cols();
  std::vector<double> out(rows.size() * c);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= a.rows())
      throw DimensionError("gather_rows", "row " + std::to_string(rows[r]) + " out of " + shape_str(a.shape()));
    std::copy_n(a.values().begin() + static_cast<std::ptrdiff_t>(rows[r] * c), c,
                out.begin() + static_cast<std::ptrdiff_t>(r * c));
  }
  NodePtr an = a.node_;
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return emit({rows.size(), c}, std::move(out), {a}, [an, idx = std::move(idx), c](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < c; ++j) ga[idx[r] * c + j] += o.grad[r * c + j];
  });
}

// ---------------------------------------------------------------------------
// Normalizations and reductions

Tensor Tape::softmax(const Tensor& a) {
  if (a.rows() != 1 && a.cols() != 1) throw DimensionError("softmax", "expected a vector, got " + shape_str(a.shape()));
  const auto x = a.values();
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (out[i] = std::exp(x[i] - mx));
  for (double& v : out) v /= z;
  NodePtr an = a.node_;
  return emit(a.shape(), std::move(out), {a}, [an](const Node& o) {
    if (double* ga = grad_target(*an)) {
      double s = 0.0;
      for (std::size_t i = 0; i < o.grad.size(); ++i) s += o.grad[i] * o.value[i];
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.value[i] * (o.grad[i] - s);
    }
  });
}

Tensor Tape::row_norms(const Tensor& a) {
  require_rank2("row_norms", a);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += a.values()[i * c + j] * a.values()[i * c + j];
    out[i] = std::sqrt(s);
  }
  NodePtr an = a.node_;
  return emit({r, 1}, std::move(out), {a}, [an, r, c](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < r; ++i) {
        if (o.value[i] == 0.0) continue;
        const double f = o.grad[i] / o.value[i];
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += f * an->value[i * c + j];
      }
  });
}

Tensor Tape::normalize_rows(const Tensor& a, std::size_t* zero_rows) {
  require_rank2("normalize_rows", a);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c, 0.0);
  std::vector<double> norms(r);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += a.values()[i * c + j] * a.values()[i * c + j];
    norms[i] = std::sqrt(s);
    if (norms[i] == 0.0) {
      ++zeros;
      continue;
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = a.values()[i * c + j] / norms[i];
  }
  if (zero_rows) *zero_rows += zeros;
  NodePtr an = a.node_;
  return emit(a.shape(), std::move(out), {a}, [an, r, c, norms = std::move(norms)](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < r; ++i) {
        if (norms[i] == 0.0) continue;
        double proj = 0.0;
        for (std::size_t j = 0; j < c; ++j) proj += o.grad[i * c + j] * o.value[i * c + j];
        for (std::size_t j = 0; j < c; ++j)
          ga[i * c + j] += (o.grad[i * c + j] - proj * o.value[i * c + j]) / norms[i];
      }
  });
}

Tensor Tape::sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  NodePtr an = a.node_;
  return emit({1, 1}, {s}, {a}, [an](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < an->value.size(); ++i) ga[i] += o.grad[0];
  });
}

Tensor Tape::mean(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  const double n = static_cast<double>(a.numel());
  NodePtr an = a.node_;
  return emit({1, 1}, {s / n}, {a}, [an, n](const Node& o) {
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < an->value.size(); ++i) ga[i] += o.grad[0] / n;
  });
}

Tensor Tape::dot(const Tensor& a, const Tensor& b) {
  require_same_shape("dot", a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a.values()[i] * b.values()[i];
  NodePtr an = a.node_, bn = b.node_;
  return emit({1, 1}, {s}, {a, b}, [an, bn](const Node& o) {
    const double g = o.grad[0];
    if (double* ga = grad_target(*an))
      for (std::size_t i = 0; i < an->value.size(); ++i) ga[i] += g * bn->value[i];
    if (double* gb = grad_target(*bn))
      for (std::size_t i = 0; i < bn->value.size(); ++i) gb[i] += g * an->value[i];
  });
}

Tensor Tape::cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank2("cross_entropy", logits);
  const std::size_t r = logits.rows(), c = logits.cols();
  if (labels.size() != r)
    throw DimensionError("cross_entropy", std::to_string(labels.size()) + " labels for " + std::to_string(r) + " rows");
  std::vector<double> probs(r * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw DimensionError("cross_entropy", "label " + std::to_string(y) + " outside [0," + std::to_string(c) + ")");
    const double* z = logits.values().data() + i * c;
    const double mx = *std::max_element(z, z + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (probs[i * c + j] = std::exp(z[j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= s;
    loss -= (z[y] - mx) - std::log(s);
  }
  loss /= static_cast<double>(r);
  NodePtr ln = logits.node_;
  std::vector<int> ys(labels.begin(), labels.end());
  return emit({1, 1}, {loss}, {logits}, [ln, probs = std::move(probs), ys = std::move(ys), r, c](const Node& o) {
    if (double* gl = grad_target(*ln)) {
      const double g = o.grad[0] / static_cast<double>(r);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
          gl[i * c + j] += g * (probs[i * c + j] - (static_cast<int>(j) == ys[i] ? 1.0 : 0.0));
    }
  });
}

Tensor cosine_matrix(Tape& tape, const Tensor& a, const Tensor& b, std::size_t* zero_rows) {
  if (a.same_node(b)) {
    const Tensor na = tape.normalize_rows(a, zero_rows);
    return tape.clamp(tape.matmul_nt(na, na), -1.0, 1.0);
  }
  const Tensor na = tape.normalize_rows(a, zero_rows);
  const Tensor nb = tape.normalize_rows(b, zero_rows);
  return tape.clamp(tape.matmul_nt(na, nb), -1.0, 1.0);
}

}  // namespace gsc::ad
