#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skim/attention.hpp"
#include "skim/tensor.hpp"

namespace skim {

// Raw page coordinates, same units as the page dimensions.
struct BoundingBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

// Coordinates discretized to [0, 1000].
struct NormalizedBox {
  int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool operator==(const NormalizedBox&) const = default;
};

enum class LayoutMode { true_layout, one_d_position, uniform, degraded, contextualized };

LayoutMode layout_mode_from_string(const std::string& s);
std::string layout_mode_to_string(LayoutMode mode);

// Scales each coordinate by 1000/page_dimension, rounds half-up, clamps to
// [0,1000]. token_index only feeds the error message for inverted boxes.
NormalizedBox normalize_box(const BoundingBox& box, double page_width, double page_height,
                            int64_t token_index = -1);

struct LayoutConfig {
  int64_t d_layout = 32;
  int64_t max_len = 64;
  int64_t contextualizer_layers = 2;
  int64_t contextualizer_heads = 2;
};

// The four coordinate tables (x shared by x0/x1, y by y0/y1, plus width and
// height), the sequential-position table for the 1-D ablation, and the small
// Transformer that contextualizes layout embeddings.
struct LayoutEmbeddingParams {
  LayoutConfig config;
  Tensor table_x, table_y, table_w, table_h;  // 1001 x d_layout
  Tensor position_table;                      // max_len x d_layout
  std::vector<EncoderLayer> contextualizer;
  Tensor ctx_final_g, ctx_final_b;

  static LayoutEmbeddingParams init(const LayoutConfig& config, Rng& rng);
  void collect(NamedTensors& out, const std::string& prefix) const;
};

// Sum of six table rows per token: x0, y0, x1, y1, width, height.
Tensor embed_layout(const std::vector<NormalizedBox>& boxes, const LayoutEmbeddingParams& params);

// Box-level ablation transforms. true_layout/contextualized/one_d_position
// leave boxes untouched; uniform pins every box to (0,0,1000,1000); degraded
// collapses each box to its integer center point.
std::vector<NormalizedBox> apply_layout_mode_boxes(const std::vector<NormalizedBox>& boxes,
                                                   LayoutMode mode);

// Runs the 2-layer encoder over layout embeddings. No sequential position
// signal enters here, so the result depends on geometry alone. `valid`, when
// given, keeps padded positions out of the attention keys.
Tensor contextualize(const Tensor& embeddings, const LayoutEmbeddingParams& params,
                     const std::vector<uint8_t>* valid = nullptr);

// Full pipeline from normalized boxes to the representation skim scores are
// computed from: mode transform, table lookups, optional contextualizer, or
// the sequential-position lookup for the 1-D ablation.
Tensor layout_representation(const std::vector<NormalizedBox>& boxes, LayoutMode mode,
                             const LayoutEmbeddingParams& params,
                             const std::vector<uint8_t>* valid = nullptr);

}  // namespace skim
