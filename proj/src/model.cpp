#include "skim/model.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace skim {

AttentionKind attention_kind_from_string(const std::string& s) {
  if (s == "standard") return AttentionKind::standard;
  if (s == "skim") return AttentionKind::skim;
  if (s == "windowed_skim") return AttentionKind::windowed_skim;
  throw std::invalid_argument("unknown attention kind \"" + s + "\"");
}

std::string attention_kind_to_string(AttentionKind kind) {
  switch (kind) {
    case AttentionKind::standard: return "standard";
    case AttentionKind::skim: return "skim";
    case AttentionKind::windowed_skim: return "windowed_skim";
  }
  throw std::logic_error("unhandled attention kind");
}

void ModelConfig::validate() const {
  if (hidden_size % num_heads != 0)
    throw std::invalid_argument("hidden size " + std::to_string(hidden_size) +
                                " not divisible by " + std::to_string(num_heads) + " heads");
  if (layout_hidden % contextualizer_heads != 0)
    throw std::invalid_argument("layout size " + std::to_string(layout_hidden) +
                                " not divisible by " + std::to_string(contextualizer_heads) +
                                " contextualizer heads");
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (vocab_size <= Vocabulary::kNumSpecial)
    throw std::invalid_argument("vocabulary too small for the special tokens");
  if (attention_kind == AttentionKind::windowed_skim && (window_w < 1 || window_w % 2 == 0))
    throw std::invalid_argument("window width must be odd and >= 1");
  if (mask_top_k > 0 && attention_kind != AttentionKind::standard)
    throw std::invalid_argument("a skimming mask needs a standard-attention host");
  if (skim_embeddings && attention_kind != AttentionKind::standard)
    throw std::invalid_argument("skim embeddings feed a standard-attention host");
}

int64_t ModelConfig::param_count() const {
  validate();
  auto dense = [](int64_t in, int64_t out) { return in * out + out; };
  auto block = [&](int64_t d) { return dense(d, 4 * d) + dense(4 * d, d) + 4 * d; };
  int64_t h = hidden_size, dl = layout_hidden;
  bool standard = attention_kind == AttentionKind::standard;
  bool layout = !standard || skim_embeddings || mask_top_k > 0;
  int64_t total = vocab_size * h;
  if (standard) total += max_len * h;
  if (layout) {
    total += 4 * 1001 * dl + max_len * dl;
    total += contextualizer_layers * (block(dl) + 4 * dense(dl, dl)) + 2 * dl;
    total += 2 * dense(dl, dl);
  }
  if (skim_embeddings) total += dense(dl, h);
  total += num_layers * (block(h) + (standard ? 4 : 2) * dense(h, h));
  total += 2 * h + vocab_size;
  total += dense(h, static_cast<int64_t>(label_names().size()));
  return total;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["vocab_size"] = vocab_size;
  j["hidden_size"] = hidden_size;
  j["num_layers"] = num_layers;
  j["num_heads"] = num_heads;
  j["layout_hidden"] = layout_hidden;
  j["contextualizer_layers"] = contextualizer_layers;
  j["contextualizer_heads"] = contextualizer_heads;
  j["max_len"] = max_len;
  j["layout_mode"] = layout_mode_to_string(layout_mode);
  j["attention_kind"] = attention_kind_to_string(attention_kind);
  j["window_w"] = window_w;
  j["mask_top_k"] = mask_top_k;
  j["skim_embeddings"] = skim_embeddings;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.num_layers = j.value("num_layers", c.num_layers);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.layout_hidden = j.value("layout_hidden", c.layout_hidden);
  c.contextualizer_layers = j.value("contextualizer_layers", c.contextualizer_layers);
  c.contextualizer_heads = j.value("contextualizer_heads", c.contextualizer_heads);
  c.max_len = j.value("max_len", c.max_len);
  if (j.contains("layout_mode")) c.layout_mode = layout_mode_from_string(j["layout_mode"]);
  if (j.contains("attention_kind"))
    c.attention_kind = attention_kind_from_string(j["attention_kind"]);
  c.window_w = j.value("window_w", c.window_w);
  c.mask_top_k = j.value("mask_top_k", c.mask_top_k);
  c.skim_embeddings = j.value("skim_embeddings", c.skim_embeddings);
  c.validate();
  return c;
}

PageInput encode_page(const DocumentPage& page, const Vocabulary& vocab, int64_t max_len) {
  if (static_cast<int64_t>(page.tokens.size()) + 1 > max_len)
    throw std::invalid_argument("page " + page.doc_id + " has " +
                                std::to_string(page.tokens.size()) +
                                " tokens, over the sequence budget " + std::to_string(max_len - 1));
  PageInput input;
  input.token_ids.push_back(Vocabulary::kCls);
  input.boxes.push_back({0, 0, 0, 0});
  if (!page.labels.empty()) input.label_ids.push_back(-1);
  for (size_t i = 0; i < page.tokens.size(); ++i) {
    input.token_ids.push_back(vocab.id(page.tokens[i]));
    input.boxes.push_back(
        normalize_box(page.boxes[i], page.page_width, page.page_height, static_cast<int64_t>(i)));
    if (!page.labels.empty()) input.label_ids.push_back(page.labels[i]);
  }
  return input;
}

Model Model::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  Model m;
  Encoder& e = m.encoder;
  e.config = config;
  e.token_embedding = Tensor::randn({config.vocab_size, config.hidden_size}, rng, 0.02, true);
  if (config.attention_kind == AttentionKind::standard)
    e.position_embedding = Tensor::randn({config.max_len, config.hidden_size}, rng, 0.02, true);
  if (e.has_layout()) {
    LayoutConfig lc;
    lc.d_layout = config.layout_hidden;
    lc.max_len = config.max_len;
    lc.contextualizer_layers = config.contextualizer_layers;
    lc.contextualizer_heads = config.contextualizer_heads;
    e.layout = LayoutEmbeddingParams::init(lc, rng);
    e.skim = SkimAttentionParams::init(config.layout_hidden, config.num_heads, rng);
  }
  if (config.skim_embeddings) {
    e.layout_proj_w = Tensor::randn({config.layout_hidden, config.hidden_size}, rng, 0.02, true);
    e.layout_proj_b = Tensor::zeros({1, config.hidden_size}, true);
  }
  for (int64_t i = 0; i < config.num_layers; ++i) {
    if (config.attention_kind == AttentionKind::standard)
      e.layers.push_back(EncoderLayer::standard(config.hidden_size, config.num_heads, rng));
    else
      e.layers.push_back(EncoderLayer::skim(config.hidden_size, config.num_heads, rng));
  }
  e.final_g = Tensor::full({1, config.hidden_size}, 1.0, true);
  e.final_b = Tensor::zeros({1, config.hidden_size}, true);
  m.mvlm_bias = Tensor::zeros({1, config.vocab_size}, true);
  m.classifier = TokenClassifier::init(config.hidden_size,
                                       static_cast<int64_t>(label_names().size()), rng);
  return m;
}

ForwardResult encoder_forward(const Encoder& enc, const PageInput& page,
                              const AttentionMask* mask, const std::vector<uint8_t>* valid) {
  const ModelConfig& cfg = enc.config;
  int64_t n = static_cast<int64_t>(page.token_ids.size());
  if (n == 0) throw std::invalid_argument("empty page");
  if (n > cfg.max_len)
    throw std::invalid_argument("sequence of " + std::to_string(n) + " exceeds max_len " +
                                std::to_string(cfg.max_len));
  if (page.boxes.size() != page.token_ids.size())
    throw std::invalid_argument("page has " + std::to_string(page.token_ids.size()) +
                                " tokens but " + std::to_string(page.boxes.size()) + " boxes");
  if (valid && static_cast<int64_t>(valid->size()) != n)
    throw std::invalid_argument("validity flags cover " + std::to_string(valid->size()) +
                                " positions, page has " + std::to_string(n));

  ForwardResult result;
  Tensor x = embedding_lookup(enc.token_embedding, page.token_ids);
  if (enc.position_embedding.defined()) {
    std::vector<int64_t> positions(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) positions[static_cast<size_t>(i)] = i;
    x = add(x, embedding_lookup(enc.position_embedding, positions));
  }
  if (cfg.skim_embeddings) {
    Tensor lrep = layout_representation(page.boxes, cfg.layout_mode, enc.layout, valid);
    x = add(x, linear(lrep, enc.layout_proj_w, enc.layout_proj_b));
  }

  if (enc.uses_skim_matrix()) {
    Tensor lrep = layout_representation(page.boxes, cfg.layout_mode, enc.layout, valid);
    result.skim = cfg.attention_kind == AttentionKind::skim
                      ? skim_attention(lrep, enc.skim, valid)
                      : windowed_skim_attention(lrep, enc.skim, cfg.window_w, valid);
    for (const EncoderLayer& layer : enc.layers) x = encoder_layer_skim(x, result.skim, layer);
  } else {
    AttentionMask own;
    if (!mask && cfg.mask_top_k > 0) {
      Tensor lrep = layout_representation(page.boxes, cfg.layout_mode, enc.layout, valid);
      result.skim = skim_attention(lrep, enc.skim, valid);
      own = build_mask(result.skim, cfg.mask_top_k);
      mask = &own;
    }
    std::vector<uint8_t> allow;
    const std::vector<uint8_t>* allow_ptr = nullptr;
    if (mask) {
      if (mask->n != n)
        throw std::invalid_argument("mask is for length " + std::to_string(mask->n) +
                                    ", page has " + std::to_string(n));
      allow = mask_to_allow(*mask);
      allow_ptr = &allow;
    }
    if (valid) {
      if (!allow_ptr) allow.assign(static_cast<size_t>(n * n), 1);
      for (int64_t r = 0; r < n; ++r)
        for (int64_t c = 0; c < n; ++c)
          if (!(*valid)[static_cast<size_t>(c)] && r != c)
            allow[static_cast<size_t>(r * n + c)] = 0;
      allow_ptr = &allow;
    }
    for (const EncoderLayer& layer : enc.layers) x = encoder_layer_standard(x, layer, allow_ptr);
  }
  result.hidden = layer_norm(x, enc.final_g, enc.final_b);
  return result;
}

TokenClassifier TokenClassifier::init(int64_t hidden, int64_t classes, Rng& rng) {
  TokenClassifier head;
  head.w = Tensor::randn({hidden, classes}, rng, 0.02, true);
  head.b = Tensor::zeros({1, classes}, true);
  return head;
}

Tensor classify_tokens(const TokenClassifier& head, const Tensor& hidden) {
  return linear(hidden, head.w, head.b);
}

Tensor mvlm_logits(const Model& model, const Tensor& hidden) {
  return add(matmul(hidden, transpose(model.encoder.token_embedding)), model.mvlm_bias);
}

NamedTensors Model::named_params() const {
  NamedTensors out;
  auto put = [&](const std::string& name, const Tensor& t) {
    Tensor h = t;
    h.set_name(name);
    out.emplace_back(name, h);
  };
  const Encoder& e = encoder;
  put("tok_emb", e.token_embedding);
  if (e.position_embedding.defined()) put("pos_emb", e.position_embedding);
  if (e.has_layout()) {
    e.layout.collect(out, "layout.");
    e.skim.collect(out, "skim.");
  }
  if (e.layout_proj_w.defined()) {
    put("layout_proj.w", e.layout_proj_w);
    put("layout_proj.b", e.layout_proj_b);
  }
  for (size_t i = 0; i < e.layers.size(); ++i)
    e.layers[i].collect(out, "layer." + std::to_string(i) + ".");
  put("final_ln.g", e.final_g);
  put("final_ln.b", e.final_b);
  put("mvlm.bias", mvlm_bias);
  put("classifier.w", classifier.w);
  put("classifier.b", classifier.b);
  return out;
}

std::vector<Tensor> Model::trainables() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

int64_t Model::param_count() const {
  int64_t total = 0;
  for (const auto& [name, t] : named_params()) total += t.numel();
  return total;
}

void save_model(const std::string& dir, const Model& model) {
  std::filesystem::create_directories(dir);
  save_checkpoint((std::filesystem::path(dir) / "checkpoint.bin").string(), model.named_params());
  std::ofstream os(std::filesystem::path(dir) / "model_config.json");
  os << model.encoder.config.to_json() << "\n";
  if (!os) throw std::runtime_error("cannot write model config in " + dir);
}

Model load_model(const std::string& dir) {
  std::filesystem::path p(dir);
  std::ifstream is(p / "model_config.json");
  if (!is) throw std::runtime_error("no model_config.json in " + dir);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  ModelConfig config = ModelConfig::from_json(text);
  Rng rng(0);
  Model model = Model::init(config, rng);
  NamedTensors params = model.named_params();
  load_checkpoint_into((p / "checkpoint.bin").string(), params);
  return model;
}

}  // namespace skim
