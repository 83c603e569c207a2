#include "skim/layout.hpp"

#include <cmath>
#include <stdexcept>

namespace skim {

namespace {

int64_t scale_coord(double v, double page_dim) {
  double scaled = v * 1000.0 / page_dim;
  int64_t r = static_cast<int64_t>(std::floor(scaled + 0.5));
  return std::clamp<int64_t>(r, 0, 1000);
}

}  // namespace

LayoutMode layout_mode_from_string(const std::string& s) {
  if (s == "true_layout") return LayoutMode::true_layout;
  if (s == "one_d_position") return LayoutMode::one_d_position;
  if (s == "uniform") return LayoutMode::uniform;
  if (s == "degraded") return LayoutMode::degraded;
  if (s == "contextualized") return LayoutMode::contextualized;
  throw std::invalid_argument("unknown layout mode \"" + s + "\"");
}

std::string layout_mode_to_string(LayoutMode mode) {
  switch (mode) {
    case LayoutMode::true_layout: return "true_layout";
    case LayoutMode::one_d_position: return "one_d_position";
    case LayoutMode::uniform: return "uniform";
    case LayoutMode::degraded: return "degraded";
    case LayoutMode::contextualized: return "contextualized";
  }
  throw std::logic_error("unhandled layout mode");
}

NormalizedBox normalize_box(const BoundingBox& box, double page_width, double page_height,
                            int64_t token_index) {
  if (page_width <= 0 || page_height <= 0)
    throw std::invalid_argument("page dimensions must be positive");
  if (box.x1 < box.x0 || box.y1 < box.y0)
    throw std::invalid_argument("inverted bounding box at token " + std::to_string(token_index));
  NormalizedBox n;
  n.x0 = scale_coord(box.x0, page_width);
  n.y0 = scale_coord(box.y0, page_height);
  n.x1 = scale_coord(box.x1, page_width);
  n.y1 = scale_coord(box.y1, page_height);
  return n;
}

LayoutEmbeddingParams LayoutEmbeddingParams::init(const LayoutConfig& config, Rng& rng) {
  LayoutEmbeddingParams p;
  p.config = config;
  int64_t d = config.d_layout;
  p.table_x = Tensor::randn({1001, d}, rng, 0.02, true);
  p.table_y = Tensor::randn({1001, d}, rng, 0.02, true);
  p.table_w = Tensor::randn({1001, d}, rng, 0.02, true);
  p.table_h = Tensor::randn({1001, d}, rng, 0.02, true);
  p.position_table = Tensor::randn({config.max_len, d}, rng, 0.02, true);
  for (int64_t i = 0; i < config.contextualizer_layers; ++i)
    p.contextualizer.push_back(EncoderLayer::standard(d, config.contextualizer_heads, rng));
  p.ctx_final_g = Tensor::full({1, d}, 1.0, true);
  p.ctx_final_b = Tensor::zeros({1, d}, true);
  return p;
}

void LayoutEmbeddingParams::collect(NamedTensors& out, const std::string& prefix) const {
  auto put = [&](const char* name, const Tensor& t) {
    Tensor h = t;
    h.set_name(prefix + name);
    out.emplace_back(prefix + name, h);
  };
  put("table_x", table_x);
  put("table_y", table_y);
  put("table_w", table_w);
  put("table_h", table_h);
  put("position_table", position_table);
  for (size_t i = 0; i < contextualizer.size(); ++i)
    contextualizer[i].collect(out, prefix + "ctx." + std::to_string(i) + ".");
  put("ctx.final_ln.g", ctx_final_g);
  put("ctx.final_ln.b", ctx_final_b);
}

Tensor embed_layout(const std::vector<NormalizedBox>& boxes, const LayoutEmbeddingParams& params) {
  size_t n = boxes.size();
  std::vector<int64_t> x0(n), y0(n), x1(n), y1(n), w(n), h(n);
  for (size_t i = 0; i < n; ++i) {
    const NormalizedBox& b = boxes[i];
    if (b.x0 < 0 || b.x1 > 1000 || b.y0 < 0 || b.y1 > 1000 || b.x0 > b.x1 || b.y0 > b.y1)
      throw std::logic_error("unnormalized box reached embed_layout at token " + std::to_string(i));
    x0[i] = b.x0;
    y0[i] = b.y0;
    x1[i] = b.x1;
    y1[i] = b.y1;
    w[i] = b.x1 - b.x0;
    h[i] = b.y1 - b.y0;
  }
  Tensor e = add(embedding_lookup(params.table_x, x0), embedding_lookup(params.table_y, y0));
  e = add(e, embedding_lookup(params.table_x, x1));
  e = add(e, embedding_lookup(params.table_y, y1));
  e = add(e, embedding_lookup(params.table_w, w));
  e = add(e, embedding_lookup(params.table_h, h));
  return e;
}

std::vector<NormalizedBox> apply_layout_mode_boxes(const std::vector<NormalizedBox>& boxes,
                                                   LayoutMode mode) {
  if (mode == LayoutMode::uniform)
    return std::vector<NormalizedBox>(boxes.size(), NormalizedBox{0, 0, 1000, 1000});
  if (mode == LayoutMode::degraded) {
    std::vector<NormalizedBox> out(boxes.size());
    for (size_t i = 0; i < boxes.size(); ++i) {
      int64_t cx = static_cast<int64_t>(std::floor((boxes[i].x0 + boxes[i].x1) / 2.0 + 0.5));
      int64_t cy = static_cast<int64_t>(std::floor((boxes[i].y0 + boxes[i].y1) / 2.0 + 0.5));
      out[i] = {cx, cy, cx, cy};
    }
    return out;
  }
  return boxes;
}

Tensor contextualize(const Tensor& embeddings, const LayoutEmbeddingParams& params,
                     const std::vector<uint8_t>* valid) {
  int64_t n = embeddings.rows();
  if (n < 1) throw std::invalid_argument("contextualize on empty sequence");
  std::vector<uint8_t> allow;
  const std::vector<uint8_t>* allow_ptr = nullptr;
  if (valid) {
    allow.assign(static_cast<size_t>(n * n), 1);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < n; ++c)
        allow[static_cast<size_t>(r * n + c)] = (*valid)[static_cast<size_t>(c)];
    allow_ptr = &allow;
  }
  Tensor x = embeddings;
  for (const EncoderLayer& layer : params.contextualizer)
    x = encoder_layer_standard(x, layer, allow_ptr);
  return layer_norm(x, params.ctx_final_g, params.ctx_final_b);
}

Tensor layout_representation(const std::vector<NormalizedBox>& boxes, LayoutMode mode,
                             const LayoutEmbeddingParams& params,
                             const std::vector<uint8_t>* valid) {
  if (mode == LayoutMode::one_d_position) {
    std::vector<int64_t> positions(boxes.size());
    for (size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int64_t>(i);
    return embedding_lookup(params.position_table, positions);
  }
  Tensor e = embed_layout(apply_layout_mode_boxes(boxes, mode), params);
  if (mode == LayoutMode::contextualized) return contextualize(e, params, valid);
  return e;
}

}  // namespace skim
