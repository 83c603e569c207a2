#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "skim/rng.hpp"

namespace skim {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  std::string name;  // set for parameters, used in diagnostics
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backward;  // accumulates this->grad into parents

  void ensure_grad();
};

// Value-semantics handle to a node in the computation graph. Operations on
// tensors record how to propagate gradients; Tensor::backward() runs the tape
// in reverse topological order. All data is double precision and row-major.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor randn(Shape shape, Rng& rng, double stddev, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t numel() const { return static_cast<int64_t>(node_->value.size()); }
  int64_t dim(size_t i) const { return node_->shape[i]; }
  int64_t rows() const { return node_->shape[node_->shape.size() - 2]; }
  int64_t cols() const { return node_->shape.back(); }

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& grad() { return node_->grad; }
  const std::vector<double>& grad() const { return node_->grad; }

  double item() const;
  double at(int64_t r, int64_t c) const { return node_->value[static_cast<size_t>(r * cols() + c)]; }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool b) { node_->requires_grad = b; return *this; }
  const std::string& name() const { return node_->name; }
  Tensor& set_name(std::string n) { node_->name = std::move(n); return *this; }

  // Runs reverse-mode accumulation from this scalar. Parameter gradients are
  // accumulated (+=); callers zero them between steps.
  void backward() const;
  void zero_grad();

  // A copy that shares no graph history.
  Tensor detached() const;

  std::shared_ptr<TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

// --- primitive operations ---

// Matrix product. 2-D inputs multiply directly; with extra leading dimensions
// the batch dims must match, or one operand may omit them (broadcast).
Tensor matmul(const Tensor& a, const Tensor& b);

// Row-wise softmax over the last dimension of a 2-D tensor, computed with
// max-subtraction. `allow`, when given, holds rows*cols flags; disallowed
// entries come out exactly 0 and a row with no allowed entry is an error.
Tensor softmax_rows(const Tensor& x, const std::vector<uint8_t>* allow = nullptr);

// Mean negative log-likelihood of `targets` under row-wise softmax of logits.
// Positions whose target equals ignore_index are skipped.
Tensor cross_entropy(const Tensor& logits, std::span<const int64_t> targets, int64_t ignore_index);

Tensor add(const Tensor& a, const Tensor& b);  // same shape, or b broadcast as a row vector
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor transpose(const Tensor& a);             // 2-D
Tensor sum(const Tensor& a);                   // -> scalar
Tensor mean_all(const Tensor& a);              // -> scalar
Tensor gelu(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
Tensor embedding_lookup(const Tensor& table, std::span<const int64_t> ids);
Tensor slice_cols(const Tensor& a, int64_t c0, int64_t c1);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor dropout(const Tensor& a, double p, Rng* rng);

// x @ w + b with b broadcast over rows.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Central finite-difference check of the analytic gradient of f with respect
// to every component of every tensor in `params`. Returns the max over
// components of |analytic - numeric| / max(1, |numeric|).
double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                  double step = 1e-5);

}  // namespace skim
