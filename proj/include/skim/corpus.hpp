#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "skim/layout.hpp"
#include "skim/rng.hpp"

namespace skim {

struct DocumentPage {
  std::string doc_id;
  double page_width = 0;
  double page_height = 0;
  std::vector<std::string> tokens;
  std::vector<BoundingBox> boxes;
  std::vector<int64_t> labels;  // empty when unlabeled

  bool operator==(const DocumentPage&) const;
};

// The 12 layout-analysis categories in fixed order.
const std::vector<std::string>& label_names();
int64_t label_id(const std::string& name);

struct Vocabulary {
  static constexpr int64_t kPad = 0;
  static constexpr int64_t kUnk = 1;
  static constexpr int64_t kMask = 2;
  static constexpr int64_t kCls = 3;
  static constexpr int64_t kNumSpecial = 4;

  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, int64_t> token_to_id;

  int64_t size() const { return static_cast<int64_t>(id_to_token.size()); }
  int64_t id(const std::string& token) const;
  const std::string& token(int64_t id) const;

  std::string to_json() const;
  static Vocabulary from_json(const std::string& text);
};

// Most frequent tokens first, frequency ties by lexicographic order, the four
// special tokens prepended. Tokens beyond max_size fall back to [UNK].
Vocabulary build_vocab(const std::vector<DocumentPage>& pages, int64_t max_size);

struct LoadResult {
  std::vector<DocumentPage> pages;
  std::vector<std::string> errors;  // one entry per rejected line
};

// One JSON object per line: doc_id, page_width, page_height, tokens, boxes,
// optional labels. With fail_fast the first bad line throws (message names
// the line); otherwise bad lines are collected and skipped.
LoadResult load_jsonl(const std::string& path, bool fail_fast = true);
void save_jsonl(const std::string& path, const std::vector<DocumentPage>& pages);

struct GeneratorConfig {
  int64_t num_pages = 500;
  double page_width = 1000;
  double page_height = 1000;
  int64_t min_blocks = 3;
  int64_t max_blocks = 8;
  int64_t min_block_tokens = 4;
  int64_t max_block_tokens = 7;
  int64_t label_vocab_words = 24;  // per label
  int64_t common_vocab_words = 32;
  int64_t topic_words = 4;         // per block, drawn from its label's vocabulary
  double common_prob = 0.15;
  int64_t max_page_tokens = 63;
  // > 0 swaps the disjoint per-label lexicons for overlapping windows on a
  // shared ring of num_labels * stride words, so word identity alone no
  // longer pins down the label.
  int64_t label_vocab_stride = 0;
  // Anchor each label in its own grid cell instead of the overlapping
  // document-like regions, making the label a pure function of position.
  bool disjoint_regions = false;
  // Emit blocks in random order instead of reading order, so sequence
  // position carries no layout information.
  bool shuffle_blocks = false;
  // Permute every token on the page (boxes and labels travel along), leaving
  // no block structure in the sequence order at all.
  bool shuffle_tokens = false;
};

// Synthetic pages whose content correlates with geometry: each block sits in
// its label's typical page region and draws words from that label's
// sub-vocabulary, so a model that reads layout can predict text. Deterministic
// per seed; blocks never overlap.
std::vector<DocumentPage> generate_synthetic(const GeneratorConfig& cfg, uint64_t seed);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  std::vector<DocumentPage> train, valid, test;
};

// Page-level shuffle then partition: floor for train and valid, remainder to
// test.
CorpusSplit split(const std::vector<DocumentPage>& pages, const SplitRatios& ratios, uint64_t seed);

}  // namespace skim
