#pragma once

#include <cstdint>
#include <vector>

#include "skim/checkpoint.hpp"
#include "skim/tensor.hpp"

namespace skim {

// Top-k attention mask: per query row, the sorted key indices it may attend
// to. Every row contains its own index.
struct AttentionMask {
  int64_t n = 0;
  int64_t k = 0;
  std::vector<std::vector<int64_t>> rows;
};

// Expands a mask to n*n row-major allow flags.
std::vector<uint8_t> mask_to_allow(const AttentionMask& mask);

struct StandardAttentionParams {
  Tensor w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;
  int64_t num_heads = 1;
  int64_t head_dim = 1;

  static StandardAttentionParams init(int64_t d_model, int64_t num_heads, Rng& rng);
  void collect(NamedTensors& out, const std::string& prefix) const;
};

// Query/key projections over layout representations; no values.
struct SkimAttentionParams {
  Tensor w_q, b_q, w_k, b_k;
  int64_t num_heads = 1;
  int64_t head_dim = 1;

  static SkimAttentionParams init(int64_t d_layout, int64_t num_heads, Rng& rng);
  void collect(NamedTensors& out, const std::string& prefix) const;
};

// Per-layer value and output projections applied under a fixed skim matrix.
struct SkimValueParams {
  Tensor w_v, b_v, w_o, b_o;
  int64_t num_heads = 1;
  int64_t head_dim = 1;

  static SkimValueParams init(int64_t d_model, int64_t num_heads, Rng& rng);
  void collect(NamedTensors& out, const std::string& prefix) const;
};

// Row-stochastic attention weights per head, computed once per page from
// layout alone and shared by every encoder layer.
struct SkimAttentionMatrix {
  std::vector<Tensor> heads;   // each n x n
  std::vector<uint8_t> valid;  // per-position flags; padded keys carry weight 0

  int64_t n() const { return heads.empty() ? 0 : heads[0].rows(); }
  int64_t num_heads() const { return static_cast<int64_t>(heads.size()); }
  // Mean over heads, detached from the graph (mask building, visualization).
  Tensor head_average() const;
};

// softmax(QK^T / sqrt(head_dim)) V per head, concatenated and output-projected.
// `allow` restricts key positions per query; disallowed scores never enter the
// softmax. Raw n*n flag form of the same argument is also accepted.
Tensor standard_attention(const Tensor& x, const StandardAttentionParams& p,
                          const AttentionMask* mask = nullptr);
Tensor standard_attention_allow(const Tensor& x, const StandardAttentionParams& p,
                                const std::vector<uint8_t>* allow);
// The softmaxed per-head weight matrices the kernel mixes with.
std::vector<Tensor> standard_attention_weights(const Tensor& x, const StandardAttentionParams& p,
                                               const std::vector<uint8_t>* allow = nullptr);

// The skim scores: per head softmax over Q/K projections of the layout
// representations. Increments the invocation counter.
SkimAttentionMatrix skim_attention(const Tensor& layout_repr, const SkimAttentionParams& p,
                                   const std::vector<uint8_t>* valid = nullptr);

// Band-sparse variant: each query sees keys within floor(w/2) sequence steps.
SkimAttentionMatrix windowed_skim_attention(const Tensor& layout_repr,
                                            const SkimAttentionParams& p, int64_t window_w,
                                            const std::vector<uint8_t>* valid = nullptr);

// One layer's token mixing under a fixed skim matrix: per head A V, heads
// concatenated and output-projected.
Tensor apply_skim(const SkimAttentionMatrix& A, const Tensor& x, const SkimValueParams& p);

// How many times skim scores were computed; tests assert once per forward.
int64_t skim_attention_invocations();
void reset_skim_attention_invocations();

struct ComputeBudget {
  int64_t skim_seq_len = 0;
  int64_t standard_seq_len = 0;
  int64_t num_skim_attn = 0;
  int64_t num_standard_attn = 0;

  double units() const;
};

// 100 x model units / baseline units, where units = n^2 * skim attentions
// + seq_len^2 * standard attentions.
double compute_ratio(const ComputeBudget& model, const ComputeBudget& baseline);

// Pre-norm encoder block shared by the contextualizer and the encoders:
// x + attn(ln1(x)), then + ffn(ln2(.)) with a GELU feed-forward.
struct EncoderLayer {
  StandardAttentionParams attn;  // w_q/w_k undefined on skim layers
  SkimValueParams value;         // used when mixing under a skim matrix
  Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  Tensor ln1_g, ln1_b, ln2_g, ln2_b;

  static EncoderLayer standard(int64_t d_model, int64_t num_heads, Rng& rng);
  static EncoderLayer skim(int64_t d_model, int64_t num_heads, Rng& rng);
  void collect(NamedTensors& out, const std::string& prefix) const;
};

Tensor encoder_layer_standard(const Tensor& x, const EncoderLayer& layer,
                              const std::vector<uint8_t>* allow = nullptr);
Tensor encoder_layer_skim(const Tensor& x, const SkimAttentionMatrix& A, const EncoderLayer& layer);

}  // namespace skim
