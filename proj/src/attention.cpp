#include "skim/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace skim {

namespace {

int64_t g_skim_invocations = 0;

Tensor proj_init(int64_t in, int64_t out, Rng& rng) { return Tensor::randn({in, out}, rng, 0.02, true); }
Tensor bias_init(int64_t out) { return Tensor::zeros({1, out}, true); }

void name_pair(NamedTensors& out, const std::string& prefix, const char* wname, const Tensor& w,
               const char* bname, const Tensor& b) {
  Tensor wt = w;
  Tensor bt = b;
  wt.set_name(prefix + wname);
  bt.set_name(prefix + bname);
  out.emplace_back(prefix + wname, wt);
  out.emplace_back(prefix + bname, bt);
}

// Shared multi-head core. Q and K may come from a different sequence than V.
std::vector<Tensor> attention_heads(const Tensor& q, const Tensor& k, int64_t num_heads,
                                    int64_t head_dim, const std::vector<uint8_t>* allow) {
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Tensor> heads;
  heads.reserve(static_cast<size_t>(num_heads));
  for (int64_t h = 0; h < num_heads; ++h) {
    Tensor qh = slice_cols(q, h * head_dim, (h + 1) * head_dim);
    Tensor kh = slice_cols(k, h * head_dim, (h + 1) * head_dim);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    heads.push_back(softmax_rows(scores, allow));
  }
  return heads;
}

std::vector<uint8_t> key_validity_allow(const std::vector<uint8_t>& valid) {
  int64_t n = static_cast<int64_t>(valid.size());
  std::vector<uint8_t> allow(static_cast<size_t>(n * n), 1);
  for (int64_t r = 0; r < n; ++r)
    for (int64_t c = 0; c < n; ++c) allow[static_cast<size_t>(r * n + c)] = valid[static_cast<size_t>(c)];
  return allow;
}

}  // namespace

std::vector<uint8_t> mask_to_allow(const AttentionMask& mask) {
  std::vector<uint8_t> allow(static_cast<size_t>(mask.n * mask.n), 0);
  for (int64_t r = 0; r < static_cast<int64_t>(mask.rows.size()); ++r)
    for (int64_t c : mask.rows[static_cast<size_t>(r)])
      allow[static_cast<size_t>(r * mask.n + c)] = 1;
  return allow;
}

StandardAttentionParams StandardAttentionParams::init(int64_t d_model, int64_t num_heads, Rng& rng) {
  if (d_model % num_heads != 0)
    throw std::invalid_argument("hidden size " + std::to_string(d_model) +
                                " not divisible by head count " + std::to_string(num_heads));
  StandardAttentionParams p;
  p.num_heads = num_heads;
  p.head_dim = d_model / num_heads;
  p.w_q = proj_init(d_model, d_model, rng);
  p.b_q = bias_init(d_model);
  p.w_k = proj_init(d_model, d_model, rng);
  p.b_k = bias_init(d_model);
  p.w_v = proj_init(d_model, d_model, rng);
  p.b_v = bias_init(d_model);
  p.w_o = proj_init(d_model, d_model, rng);
  p.b_o = bias_init(d_model);
  return p;
}

void StandardAttentionParams::collect(NamedTensors& out, const std::string& prefix) const {
  name_pair(out, prefix, "q.w", w_q, "q.b", b_q);
  name_pair(out, prefix, "k.w", w_k, "k.b", b_k);
  name_pair(out, prefix, "v.w", w_v, "v.b", b_v);
  name_pair(out, prefix, "o.w", w_o, "o.b", b_o);
}

SkimAttentionParams SkimAttentionParams::init(int64_t d_layout, int64_t num_heads, Rng& rng) {
  if (d_layout % num_heads != 0)
    throw std::invalid_argument("layout size " + std::to_string(d_layout) +
                                " not divisible by head count " + std::to_string(num_heads));
  SkimAttentionParams p;
  p.num_heads = num_heads;
  p.head_dim = d_layout / num_heads;
  p.w_q = proj_init(d_layout, d_layout, rng);
  p.b_q = bias_init(d_layout);
  p.w_k = proj_init(d_layout, d_layout, rng);
  p.b_k = bias_init(d_layout);
  return p;
}

void SkimAttentionParams::collect(NamedTensors& out, const std::string& prefix) const {
  name_pair(out, prefix, "q.w", w_q, "q.b", b_q);
  name_pair(out, prefix, "k.w", w_k, "k.b", b_k);
}

SkimValueParams SkimValueParams::init(int64_t d_model, int64_t num_heads, Rng& rng) {
  SkimValueParams p;
  p.num_heads = num_heads;
  p.head_dim = d_model / num_heads;
  p.w_v = proj_init(d_model, d_model, rng);
  p.b_v = bias_init(d_model);
  p.w_o = proj_init(d_model, d_model, rng);
  p.b_o = bias_init(d_model);
  return p;
}

void SkimValueParams::collect(NamedTensors& out, const std::string& prefix) const {
  name_pair(out, prefix, "v.w", w_v, "v.b", b_v);
  name_pair(out, prefix, "o.w", w_o, "o.b", b_o);
}

Tensor SkimAttentionMatrix::head_average() const {
  if (heads.empty()) throw std::logic_error("head_average on empty skim matrix");
  int64_t nn = heads[0].numel();
  std::vector<double> avg(static_cast<size_t>(nn), 0.0);
  for (const Tensor& h : heads)
    for (int64_t i = 0; i < nn; ++i) avg[static_cast<size_t>(i)] += h.data()[static_cast<size_t>(i)];
  double inv = 1.0 / static_cast<double>(heads.size());
  for (double& v : avg) v *= inv;
  return Tensor::from_data(heads[0].shape(), std::move(avg));
}

Tensor standard_attention_allow(const Tensor& x, const StandardAttentionParams& p,
                                const std::vector<uint8_t>* allow) {
  Tensor q = linear(x, p.w_q, p.b_q);
  Tensor k = linear(x, p.w_k, p.b_k);
  Tensor v = linear(x, p.w_v, p.b_v);
  std::vector<Tensor> weights = attention_heads(q, k, p.num_heads, p.head_dim, allow);
  std::vector<Tensor> mixed;
  mixed.reserve(weights.size());
  for (int64_t h = 0; h < p.num_heads; ++h) {
    Tensor vh = slice_cols(v, h * p.head_dim, (h + 1) * p.head_dim);
    mixed.push_back(matmul(weights[static_cast<size_t>(h)], vh));
  }
  return linear(concat_cols(mixed), p.w_o, p.b_o);
}

std::vector<Tensor> standard_attention_weights(const Tensor& x, const StandardAttentionParams& p,
                                               const std::vector<uint8_t>* allow) {
  Tensor q = linear(x, p.w_q, p.b_q);
  Tensor k = linear(x, p.w_k, p.b_k);
  return attention_heads(q, k, p.num_heads, p.head_dim, allow);
}

Tensor standard_attention(const Tensor& x, const StandardAttentionParams& p,
                          const AttentionMask* mask) {
  if (!mask) return standard_attention_allow(x, p, nullptr);
  if (mask->n != x.rows())
    throw std::invalid_argument("attention mask is for length " + std::to_string(mask->n) +
                                ", input has " + std::to_string(x.rows()));
  std::vector<uint8_t> allow = mask_to_allow(*mask);
  return standard_attention_allow(x, p, &allow);
}

SkimAttentionMatrix skim_attention(const Tensor& layout_repr, const SkimAttentionParams& p,
                                   const std::vector<uint8_t>* valid) {
  int64_t n = layout_repr.rows();
  if (n == 0) throw std::invalid_argument("skim attention over an empty sequence");
  ++g_skim_invocations;
  SkimAttentionMatrix A;
  A.valid = valid ? *valid : std::vector<uint8_t>(static_cast<size_t>(n), 1);
  Tensor q = linear(layout_repr, p.w_q, p.b_q);
  Tensor k = linear(layout_repr, p.w_k, p.b_k);
  std::vector<uint8_t> allow;
  const std::vector<uint8_t>* allow_ptr = nullptr;
  if (valid) {
    allow = key_validity_allow(*valid);
    allow_ptr = &allow;
  }
  A.heads = attention_heads(q, k, p.num_heads, p.head_dim, allow_ptr);
  return A;
}

SkimAttentionMatrix windowed_skim_attention(const Tensor& layout_repr,
                                            const SkimAttentionParams& p, int64_t window_w,
                                            const std::vector<uint8_t>* valid) {
  if (window_w < 1 || window_w % 2 == 0)
    throw std::invalid_argument("window width must be odd and >= 1, got " +
                                std::to_string(window_w));
  int64_t n = layout_repr.rows();
  if (n == 0) throw std::invalid_argument("skim attention over an empty sequence");
  ++g_skim_invocations;
  SkimAttentionMatrix A;
  A.valid = valid ? *valid : std::vector<uint8_t>(static_cast<size_t>(n), 1);
  int64_t half = window_w / 2;
  std::vector<uint8_t> allow(static_cast<size_t>(n * n), 0);
  for (int64_t r = 0; r < n; ++r)
    for (int64_t c = std::max<int64_t>(0, r - half); c <= std::min(n - 1, r + half); ++c)
      allow[static_cast<size_t>(r * n + c)] = A.valid[static_cast<size_t>(c)];
  Tensor q = linear(layout_repr, p.w_q, p.b_q);
  Tensor k = linear(layout_repr, p.w_k, p.b_k);
  A.heads = attention_heads(q, k, p.num_heads, p.head_dim, &allow);
  return A;
}

Tensor apply_skim(const SkimAttentionMatrix& A, const Tensor& x, const SkimValueParams& p) {
  if (A.n() != x.rows())
    throw std::invalid_argument("skim matrix is for length " + std::to_string(A.n()) +
                                ", input has " + std::to_string(x.rows()));
  if (A.num_heads() != p.num_heads)
    throw std::invalid_argument("skim matrix has " + std::to_string(A.num_heads()) +
                                " heads, value params expect " + std::to_string(p.num_heads));
  Tensor v = linear(x, p.w_v, p.b_v);
  std::vector<Tensor> mixed;
  mixed.reserve(A.heads.size());
  for (int64_t h = 0; h < p.num_heads; ++h) {
    Tensor vh = slice_cols(v, h * p.head_dim, (h + 1) * p.head_dim);
    mixed.push_back(matmul(A.heads[static_cast<size_t>(h)], vh));
  }
  return linear(concat_cols(mixed), p.w_o, p.b_o);
}

int64_t skim_attention_invocations() { return g_skim_invocations; }
void reset_skim_attention_invocations() { g_skim_invocations = 0; }

double ComputeBudget::units() const {
  return static_cast<double>(skim_seq_len) * static_cast<double>(skim_seq_len) *
             static_cast<double>(num_skim_attn) +
         static_cast<double>(standard_seq_len) * static_cast<double>(standard_seq_len) *
             static_cast<double>(num_standard_attn);
}

double compute_ratio(const ComputeBudget& model, const ComputeBudget& baseline) {
  double denom = baseline.units();
  if (denom <= 0.0) throw std::invalid_argument("baseline compute budget is zero");
  return 100.0 * model.units() / denom;
}

namespace {

Tensor feed_forward(const Tensor& x, const EncoderLayer& layer) {
  return linear(gelu(linear(x, layer.ff_w1, layer.ff_b1)), layer.ff_w2, layer.ff_b2);
}

EncoderLayer layer_common(int64_t d_model, Rng& rng) {
  EncoderLayer l;
  int64_t d_ff = 4 * d_model;
  l.ff_w1 = proj_init(d_model, d_ff, rng);
  l.ff_b1 = bias_init(d_ff);
  l.ff_w2 = proj_init(d_ff, d_model, rng);
  l.ff_b2 = bias_init(d_model);
  l.ln1_g = Tensor::full({1, d_model}, 1.0, true);
  l.ln1_b = Tensor::zeros({1, d_model}, true);
  l.ln2_g = Tensor::full({1, d_model}, 1.0, true);
  l.ln2_b = Tensor::zeros({1, d_model}, true);
  return l;
}

}  // namespace

EncoderLayer EncoderLayer::standard(int64_t d_model, int64_t num_heads, Rng& rng) {
  EncoderLayer l = layer_common(d_model, rng);
  l.attn = StandardAttentionParams::init(d_model, num_heads, rng);
  return l;
}

EncoderLayer EncoderLayer::skim(int64_t d_model, int64_t num_heads, Rng& rng) {
  EncoderLayer l = layer_common(d_model, rng);
  l.value = SkimValueParams::init(d_model, num_heads, rng);
  return l;
}

void EncoderLayer::collect(NamedTensors& out, const std::string& prefix) const {
  if (attn.w_q.defined()) attn.collect(out, prefix + "attn.");
  if (value.w_v.defined()) value.collect(out, prefix + "attn.");
  name_pair(out, prefix, "ff.w1", ff_w1, "ff.b1", ff_b1);
  name_pair(out, prefix, "ff.w2", ff_w2, "ff.b2", ff_b2);
  name_pair(out, prefix, "ln1.g", ln1_g, "ln1.b", ln1_b);
  name_pair(out, prefix, "ln2.g", ln2_g, "ln2.b", ln2_b);
}

Tensor encoder_layer_standard(const Tensor& x, const EncoderLayer& layer,
                              const std::vector<uint8_t>* allow) {
  Tensor a = add(x, standard_attention_allow(layer_norm(x, layer.ln1_g, layer.ln1_b), layer.attn, allow));
  return add(a, feed_forward(layer_norm(a, layer.ln2_g, layer.ln2_b), layer));
}

Tensor encoder_layer_skim(const Tensor& x, const SkimAttentionMatrix& A, const EncoderLayer& layer) {
  Tensor a = add(x, apply_skim(A, layer_norm(x, layer.ln1_g, layer.ln1_b), layer.value));
  return add(a, feed_forward(layer_norm(a, layer.ln2_g, layer.ln2_b), layer));
}

}  // namespace skim
