#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skim/attention.hpp"
#include "skim/corpus.hpp"
#include "skim/layout.hpp"
#include "skim/skim_mask.hpp"

namespace skim {

enum class AttentionKind { standard, skim, windowed_skim };

AttentionKind attention_kind_from_string(const std::string& s);
std::string attention_kind_to_string(AttentionKind kind);

struct ModelConfig {
  int64_t vocab_size = 512;
  int64_t hidden_size = 32;
  int64_t num_layers = 2;
  int64_t num_heads = 2;
  int64_t layout_hidden = 32;
  int64_t contextualizer_layers = 2;
  int64_t contextualizer_heads = 2;
  int64_t max_len = 64;
  LayoutMode layout_mode = LayoutMode::contextualized;
  AttentionKind attention_kind = AttentionKind::skim;
  int64_t window_w = 5;
  // Text-host extras: > 0 builds a top-k skimming mask from the host's own
  // skim scores each forward; skim_embeddings adds projected layout
  // embeddings to the input sum.
  int64_t mask_top_k = 0;
  bool skim_embeddings = false;

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  // Total trainable parameters this config allocates, without allocating.
  int64_t param_count() const;
};

// Token ids (leading [CLS]) with their normalized boxes.
struct PageInput {
  std::vector<int64_t> token_ids;
  std::vector<NormalizedBox> boxes;
  std::vector<int64_t> label_ids;  // empty when unlabeled; parallel to tokens
};

// Vocabulary mapping plus [CLS] prepending with box (0,0,0,0).
PageInput encode_page(const DocumentPage& page, const Vocabulary& vocab, int64_t max_len);

struct Encoder {
  ModelConfig config;
  Tensor token_embedding;
  Tensor position_embedding;  // text host only; the skim path has no positions
  LayoutEmbeddingParams layout;
  SkimAttentionParams skim;
  Tensor layout_proj_w, layout_proj_b;  // skim_embeddings projection
  std::vector<EncoderLayer> layers;
  Tensor final_g, final_b;

  bool uses_skim_matrix() const { return config.attention_kind != AttentionKind::standard; }
  bool has_layout() const {
    return uses_skim_matrix() || config.skim_embeddings || config.mask_top_k > 0;
  }
};

struct ForwardResult {
  Tensor hidden;            // n x hidden_size
  SkimAttentionMatrix skim; // populated when skim scores were computed
};

// One page through the whole stack. The skim variants run the layout
// pipeline once, reuse the matrix in every layer, and never see sequence
// positions; the standard variant adds learned positions and honors `mask`
// (or builds its own from mask_top_k). `valid`, when given, flags padded
// positions: padded keys get exactly zero attention weight everywhere, so
// rows of real tokens match the unpadded forward bit for bit.
ForwardResult encoder_forward(const Encoder& enc, const PageInput& page,
                              const AttentionMask* mask = nullptr,
                              const std::vector<uint8_t>* valid = nullptr);

struct TokenClassifier {
  Tensor w, b;
  static TokenClassifier init(int64_t hidden, int64_t classes, Rng& rng);
};

Tensor classify_tokens(const TokenClassifier& head, const Tensor& hidden);

struct Model {
  Encoder encoder;
  Tensor mvlm_bias;           // decoder is tied to the token embedding
  TokenClassifier classifier;  // the 12 layout labels

  static Model init(const ModelConfig& config, Rng& rng);
  NamedTensors named_params() const;
  std::vector<Tensor> trainables() const;
  int64_t param_count() const;
};

// hidden @ token_embedding^T + bias.
Tensor mvlm_logits(const Model& model, const Tensor& hidden);

void save_model(const std::string& dir, const Model& model);
Model load_model(const std::string& dir);

}  // namespace skim
