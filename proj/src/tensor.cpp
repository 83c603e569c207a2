#include "skim/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace skim {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

void TensorNode::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

namespace {

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<double> data) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  return n;
}

bool any_requires(std::initializer_list<const Tensor*> ts) {
  for (const Tensor* t : ts)
    if (t->requires_grad()) return true;
  return false;
}

// Plain row-major gemm: C(mxn) += A(mxk) * B(kxn), with optional transposes.
void gemm_acc(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k,
              bool trans_a, bool trans_b) {
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      double av = trans_a ? a[p * m + i] : a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = trans_b ? nullptr : b + p * n;
      if (trans_b) {
        for (int64_t j = 0; j < n; ++j) crow[j] += av * b[j * k + p];
      } else {
        for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = make_node(shape, std::vector<double>(static_cast<size_t>(shape_numel(shape)), 0.0));
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  auto n = make_node(shape, std::vector<double>(static_cast<size_t>(shape_numel(shape)), v));
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  auto n = make_node(std::move(shape), std::move(data));
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from_data({1}, {v}); }

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  std::vector<double> d(static_cast<size_t>(shape_numel(shape)));
  for (double& x : d) x = rng.normal(0.0, stddev);
  return from_data(std::move(shape), std::move(d), requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) throw std::logic_error("item() on non-scalar tensor " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detached() const {
  auto n = make_node(node_->shape, node_->value);
  return Tensor(std::move(n));
}

void Tensor::backward() const {
  if (numel() != 1) throw std::logic_error("backward() requires a scalar loss");
  // Iterative topological sort over the DAG.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      TensorNode* p = node->parents[idx++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward();
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2)
    throw std::invalid_argument("matmul requires >=2-d tensors, got " + shape_str(sa) + " x " +
                                shape_str(sb));
  int64_t m = sa[sa.size() - 2], k = sa.back();
  int64_t kb = sb[sb.size() - 2], n = sb.back();
  Shape batch_a(sa.begin(), sa.end() - 2), batch_b(sb.begin(), sb.end() - 2);
  if (k != kb || (!batch_a.empty() && !batch_b.empty() && batch_a != batch_b))
    throw std::invalid_argument("matmul shape mismatch: " + shape_str(sa) + " x " + shape_str(sb));
  Shape batch = batch_a.empty() ? batch_b : batch_a;
  int64_t nbatch = shape_numel(batch);
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);

  Tensor out = Tensor::zeros(out_shape);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = out.data().data();
  int64_t stride_a = batch_a.empty() ? 0 : m * k;
  int64_t stride_b = batch_b.empty() ? 0 : k * n;
  for (int64_t t = 0; t < nbatch; ++t)
    gemm_acc(pc + t * m * n, pa + t * stride_a, pb + t * stride_b, m, n, k, false, false);

  if (any_requires({&a, &b})) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {a.node(), b.node()};
    TensorNode* self = node.get();
    auto an = a.node();
    auto bn = b.node();
    node->backward = [self, an, bn, m, n, k, nbatch, stride_a, stride_b]() {
      const double* g = self->grad.data();
      if (an->requires_grad) {
        an->ensure_grad();
        for (int64_t t = 0; t < nbatch; ++t)
          gemm_acc(an->grad.data() + t * stride_a, g + t * m * n,
                   bn->value.data() + t * stride_b, m, k, n, false, true);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int64_t t = 0; t < nbatch; ++t)
          gemm_acc(bn->grad.data() + t * stride_b, an->value.data() + t * stride_a, g + t * m * n,
                   k, n, m, true, false);
      }
    };
  }
  return out;
}

Tensor softmax_rows(const Tensor& x, const std::vector<uint8_t>* allow) {
  if (x.shape().size() != 2) throw std::invalid_argument("softmax_rows expects a 2-d tensor");
  int64_t rows = x.rows(), cols = x.cols();
  if (cols < 1) throw std::invalid_argument("softmax_rows requires >=1 column");
  if (allow && static_cast<int64_t>(allow->size()) != rows * cols)
    throw std::invalid_argument("softmax_rows mask size mismatch");

  Tensor out = Tensor::zeros({rows, cols});
  const double* px = x.data().data();
  double* py = out.data().data();
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = px + r * cols;
    double* yr = py + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t c = 0; c < cols; ++c) {
      if (allow && !(*allow)[static_cast<size_t>(r * cols + c)]) continue;
      mx = std::max(mx, xr[c]);
    }
    if (mx == -std::numeric_limits<double>::infinity())
      throw std::runtime_error("softmax_rows: row " + std::to_string(r) + " has no allowed entries");
    double denom = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      if (allow && !(*allow)[static_cast<size_t>(r * cols + c)]) continue;
      yr[c] = std::exp(xr[c] - mx);
      denom += yr[c];
    }
    for (int64_t c = 0; c < cols; ++c) {
      if (allow && !(*allow)[static_cast<size_t>(r * cols + c)]) {
        yr[c] = 0.0;
      } else {
        yr[c] /= denom;
      }
    }
  }

  if (x.requires_grad()) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {x.node()};
    TensorNode* self = node.get();
    auto xn = x.node();
    std::vector<uint8_t> mask = allow ? *allow : std::vector<uint8_t>();
    node->backward = [self, xn, rows, cols, mask = std::move(mask)]() {
      xn->ensure_grad();
      const double* y = self->value.data();
      const double* gy = self->grad.data();
      for (int64_t r = 0; r < rows; ++r) {
        const double* yr = y + r * cols;
        const double* gr = gy + r * cols;
        double dot = 0.0;
        for (int64_t c = 0; c < cols; ++c) dot += yr[c] * gr[c];
        double* gx = xn->grad.data() + r * cols;
        for (int64_t c = 0; c < cols; ++c) {
          if (!mask.empty() && !mask[static_cast<size_t>(r * cols + c)]) continue;
          gx[c] += yr[c] * (gr[c] - dot);
        }
      }
    };
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int64_t> targets, int64_t ignore_index) {
  if (logits.shape().size() != 2) throw std::invalid_argument("cross_entropy expects 2-d logits");
  int64_t rows = logits.rows(), cols = logits.cols();
  if (static_cast<int64_t>(targets.size()) != rows)
    throw std::invalid_argument("cross_entropy: got " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(rows) + " rows");
  int64_t count = 0;
  double total = 0.0;
  // keep per-row log-probabilities for the backward pass
  std::vector<double> probs(static_cast<size_t>(rows * cols), 0.0);
  const double* px = logits.data().data();
  for (int64_t r = 0; r < rows; ++r) {
    int64_t t = targets[static_cast<size_t>(r)];
    if (t == ignore_index) continue;
    if (t < 0 || t >= cols)
      throw std::out_of_range("cross_entropy: target " + std::to_string(t) + " outside [0," +
                              std::to_string(cols) + ") at row " + std::to_string(r));
    const double* xr = px + r * cols;
    double mx = *std::max_element(xr, xr + cols);
    double denom = 0.0;
    double* pr = probs.data() + r * cols;
    for (int64_t c = 0; c < cols; ++c) {
      pr[c] = std::exp(xr[c] - mx);
      denom += pr[c];
    }
    for (int64_t c = 0; c < cols; ++c) pr[c] /= denom;
    total += -(xr[t] - mx - std::log(denom));
    ++count;
  }
  if (count == 0) throw std::runtime_error("cross_entropy: every position is ignored, loss undefined");
  Tensor out = Tensor::from_data({1}, {total / static_cast<double>(count)});

  if (logits.requires_grad()) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {logits.node()};
    TensorNode* self = node.get();
    auto xn = logits.node();
    std::vector<int64_t> tgt(targets.begin(), targets.end());
    node->backward = [self, xn, rows, cols, count, ignore_index, tgt = std::move(tgt),
                      probs = std::move(probs)]() {
      xn->ensure_grad();
      double g = self->grad[0] / static_cast<double>(count);
      for (int64_t r = 0; r < rows; ++r) {
        int64_t t = tgt[static_cast<size_t>(r)];
        if (t == ignore_index) continue;
        const double* pr = probs.data() + r * cols;
        double* gx = xn->grad.data() + r * cols;
        for (int64_t c = 0; c < cols; ++c) gx[c] += g * (pr[c] - (c == t ? 1.0 : 0.0));
      }
    };
  }
  return out;
}

namespace {

// b is either the same shape as a, a row vector {cols}/{1,cols}, or a scalar.
enum class BroadcastKind { Same, Row, Scalar };

BroadcastKind broadcast_kind(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return BroadcastKind::Same;
  if (b.numel() == 1) return BroadcastKind::Scalar;
  if (b.numel() == a.cols() && a.numel() % a.cols() == 0) return BroadcastKind::Row;
  throw std::invalid_argument("cannot broadcast " + shape_str(b.shape()) + " onto " +
                              shape_str(a.shape()));
}

Tensor add_impl(const Tensor& a, const Tensor& b, double sign) {
  BroadcastKind kind = broadcast_kind(a, b);
  Tensor out = Tensor::zeros(a.shape());
  int64_t n = a.numel();
  int64_t cols = a.shape().empty() ? 1 : a.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (int64_t i = 0; i < n; ++i) {
    double bv = kind == BroadcastKind::Same ? pb[i]
                : kind == BroadcastKind::Scalar ? pb[0]
                                                : pb[i % cols];
    po[i] = pa[i] + sign * bv;
  }
  if (any_requires({&a, &b})) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {a.node(), b.node()};
    TensorNode* self = node.get();
    auto an = a.node();
    auto bn = b.node();
    node->backward = [self, an, bn, kind, n, cols, sign]() {
      const double* g = self->grad.data();
      if (an->requires_grad) {
        an->ensure_grad();
        for (int64_t i = 0; i < n; ++i) an->grad[static_cast<size_t>(i)] += g[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
          size_t j = kind == BroadcastKind::Same ? static_cast<size_t>(i)
                     : kind == BroadcastKind::Scalar ? 0
                                                     : static_cast<size_t>(i % cols);
          bn->grad[j] += sign * g[i];
        }
      }
    };
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_impl(a, b, 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_impl(a, b, -1.0); }

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("mul shape mismatch: " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  Tensor out = Tensor::zeros(a.shape());
  int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (any_requires({&a, &b})) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {a.node(), b.node()};
    TensorNode* self = node.get();
    auto an = a.node();
    auto bn = b.node();
    node->backward = [self, an, bn, n]() {
      const double* g = self->grad.data();
      if (an->requires_grad) {
        an->ensure_grad();
        for (int64_t i = 0; i < n; ++i) an->grad[i] += g[i] * bn->value[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int64_t i = 0; i < n; ++i) bn->grad[i] += g[i] * an->value[i];
      }
    };
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = Tensor::zeros(a.shape());
  int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * s;
  if (a.requires_grad()) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {a.node()};
    TensorNode* self = node.get();
    auto an = a.node();
    node->backward = [self, an, n, s]() {
      an->ensure_grad();
      for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i] * s;
    };
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.shape().size() != 2) throw std::invalid_argument("transpose expects a 2-d tensor");
  int64_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros({c, r});
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.data()[j * r + i] = a.data()[i * c + j];
  if (a.requires_grad()) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {a.node()};
    TensorNode* self = node.get();
    auto an = a.node();
    node->backward = [self, an, r, c]() {
      an->ensure_grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) an->grad[i * c + j] += self->grad[j * r + i];
    };
  }
  return out;
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  Tensor out = Tensor::from_data({1}, {total});
  if (a.requires_grad()) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {a.node()};
    TensorNode* self = node.get();
    auto an = a.node();
    node->backward = [self, an]() {
      an->ensure_grad();
      double g = self->grad[0];
      for (double& gv : an->grad) gv += g;
    };
  }
  return out;
}

Tensor mean_all(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor gelu(const Tensor& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  Tensor out = Tensor::zeros(a.shape());
  int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) {
    double x = a.data()[i];
    out.data()[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  if (a.requires_grad()) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {a.node()};
    TensorNode* self = node.get();
    auto an = a.node();
    node->backward = [self, an, n]() {
      an->ensure_grad();
      for (int64_t i = 0; i < n; ++i) {
        double x = an->value[i];
        double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        an->grad[i] += self->grad[i] * (cdf + x * pdf);
      }
    };
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.shape().size() != 2) throw std::invalid_argument("layer_norm expects a 2-d tensor");
  int64_t rows = x.rows(), cols = x.cols();
  if (gamma.numel() != cols || beta.numel() != cols)
    throw std::invalid_argument("layer_norm affine params must have length " + std::to_string(cols));
  Tensor out = Tensor::zeros({rows, cols});
  std::vector<double> mean(static_cast<size_t>(rows)), inv_std(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * cols;
    double m = 0.0;
    for (int64_t c = 0; c < cols; ++c) m += xr[c];
    m /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      double d = xr[c] - m;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    double is = 1.0 / std::sqrt(var + eps);
    mean[static_cast<size_t>(r)] = m;
    inv_std[static_cast<size_t>(r)] = is;
    double* yr = out.data().data() + r * cols;
    for (int64_t c = 0; c < cols; ++c)
      yr[c] = (xr[c] - m) * is * gamma.data()[static_cast<size_t>(c)] + beta.data()[static_cast<size_t>(c)];
  }
  if (any_requires({&x, &gamma, &beta})) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {x.node(), gamma.node(), beta.node()};
    TensorNode* self = node.get();
    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    node->backward = [self, xn, gn, bn, rows, cols, mean = std::move(mean),
                      inv_std = std::move(inv_std)]() {
      if (gn->requires_grad) gn->ensure_grad();
      if (bn->requires_grad) bn->ensure_grad();
      if (xn->requires_grad) xn->ensure_grad();
      for (int64_t r = 0; r < rows; ++r) {
        const double* xr = xn->value.data() + r * cols;
        const double* gy = self->grad.data() + r * cols;
        double m = mean[static_cast<size_t>(r)];
        double is = inv_std[static_cast<size_t>(r)];
        double sum_dyg = 0.0, sum_dyg_xhat = 0.0;
        for (int64_t c = 0; c < cols; ++c) {
          double xhat = (xr[c] - m) * is;
          double dyg = gy[c] * gn->value[static_cast<size_t>(c)];
          sum_dyg += dyg;
          sum_dyg_xhat += dyg * xhat;
          if (gn->requires_grad) gn->grad[static_cast<size_t>(c)] += gy[c] * xhat;
          if (bn->requires_grad) bn->grad[static_cast<size_t>(c)] += gy[c];
        }
        if (xn->requires_grad) {
          double* gx = xn->grad.data() + r * cols;
          double inv_n = 1.0 / static_cast<double>(cols);
          for (int64_t c = 0; c < cols; ++c) {
            double xhat = (xr[c] - m) * is;
            double dyg = gy[c] * gn->value[static_cast<size_t>(c)];
            gx[c] += is * (dyg - inv_n * sum_dyg - xhat * inv_n * sum_dyg_xhat);
          }
        }
      }
    };
  }
  return out;
}

Tensor embedding_lookup(const Tensor& table, std::span<const int64_t> ids) {
  if (table.shape().size() != 2) throw std::invalid_argument("embedding_lookup expects a 2-d table");
  int64_t rows = table.rows(), width = table.cols();
  int64_t n = static_cast<int64_t>(ids.size());
  Tensor out = Tensor::zeros({n, width});
  for (int64_t i = 0; i < n; ++i) {
    int64_t id = ids[static_cast<size_t>(i)];
    if (id < 0 || id >= rows)
      throw std::out_of_range("embedding_lookup: index " + std::to_string(id) + " outside [0," +
                              std::to_string(rows) + ")");
    std::copy_n(table.data().data() + id * width, width, out.data().data() + i * width);
  }
  if (table.requires_grad()) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {table.node()};
    TensorNode* self = node.get();
    auto tn = table.node();
    std::vector<int64_t> idv(ids.begin(), ids.end());
    node->backward = [self, tn, width, idv = std::move(idv)]() {
      tn->ensure_grad();
      for (size_t i = 0; i < idv.size(); ++i) {
        const double* g = self->grad.data() + static_cast<int64_t>(i) * width;
        double* dst = tn->grad.data() + idv[i] * width;
        for (int64_t c = 0; c < width; ++c) dst[c] += g[c];
      }
    };
  }
  return out;
}

Tensor slice_cols(const Tensor& a, int64_t c0, int64_t c1) {
  if (a.shape().size() != 2) throw std::invalid_argument("slice_cols expects a 2-d tensor");
  int64_t rows = a.rows(), cols = a.cols();
  if (c0 < 0 || c1 > cols || c0 >= c1)
    throw std::out_of_range("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                            ") outside width " + std::to_string(cols));
  int64_t w = c1 - c0;
  Tensor out = Tensor::zeros({rows, w});
  for (int64_t r = 0; r < rows; ++r)
    std::copy_n(a.data().data() + r * cols + c0, w, out.data().data() + r * w);
  if (a.requires_grad()) {
    auto node = out.node();
    node->requires_grad = true;
    node->parents = {a.node()};
    TensorNode* self = node.get();
    auto an = a.node();
    node->backward = [self, an, rows, cols, c0, w]() {
      an->ensure_grad();
      for (int64_t r = 0; r < rows; ++r) {
        const double* g = self->grad.data() + r * w;
        double* dst = an->grad.data() + r * cols + c0;
        for (int64_t c = 0; c < w; ++c) dst[c] += g[c];
      }
    };
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols on empty list");
  int64_t rows = parts[0].rows();
  int64_t total = 0;
  bool needs_grad = false;
  for (const Tensor& p : parts) {
    if (p.shape().size() != 2 || p.rows() != rows)
      throw std::invalid_argument("concat_cols row mismatch");
    total += p.cols();
    needs_grad = needs_grad || p.requires_grad();
  }
  Tensor out = Tensor::zeros({rows, total});
  int64_t off = 0;
  for (const Tensor& p : parts) {
    int64_t w = p.cols();
    for (int64_t r = 0; r < rows; ++r)
      std::copy_n(p.data().data() + r * w, w, out.data().data() + r * total + off);
    off += w;
  }
  if (needs_grad) {
    auto node = out.node();
    node->requires_grad = true;
    for (const Tensor& p : parts) node->parents.push_back(p.node());
    TensorNode* self = node.get();
    std::vector<int64_t> widths;
    for (const Tensor& p : parts) widths.push_back(p.cols());
    node->backward = [self, rows, total, widths = std::move(widths)]() {
      int64_t off = 0;
      for (size_t i = 0; i < widths.size(); ++i) {
        auto& pn = self->parents[i];
        if (pn->requires_grad) {
          pn->ensure_grad();
          for (int64_t r = 0; r < rows; ++r) {
            const double* g = self->grad.data() + r * total + off;
            double* dst = pn->grad.data() + r * widths[i];
            for (int64_t c = 0; c < widths[i]; ++c) dst[c] += g[c];
          }
        }
        off += widths[i];
      }
    };
  }
  return out;
}

Tensor dropout(const Tensor& a, double p, Rng* rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout rate must be in [0,1)");
  if (p == 0.0) return a;
  if (!rng) throw std::invalid_argument("dropout with p>0 needs a random source");
  int64_t n = a.numel();
  std::vector<double> keep(static_cast<size_t>(n));
  double inv = 1.0 / (1.0 - p);
  for (int64_t i = 0; i < n; ++i) keep[static_cast<size_t>(i)] = rng->uniform() < p ? 0.0 : inv;
  Tensor mask = Tensor::from_data(a.shape(), std::move(keep));
  return mul(a, mask);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params, double step) {
  for (const Tensor& p : params) {
    Tensor t = p;
    t.zero_grad();
  }
  Tensor loss = f();
  loss.backward();
  std::vector<std::vector<double>> analytic;
  for (const Tensor& p : params) {
    Tensor t = p;
    t.node()->ensure_grad();
    analytic.push_back(t.grad());
  }
  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    for (size_t i = 0; i < p.data().size(); ++i) {
      double orig = p.data()[i];
      p.data()[i] = orig + step;
      double up = f().item();
      p.data()[i] = orig - step;
      double down = f().item();
      p.data()[i] = orig;
      double numeric = (up - down) / (2.0 * step);
      double err = std::abs(analytic[pi][i] - numeric) / std::max(1.0, std::abs(numeric));
      if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace skim
