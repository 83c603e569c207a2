#include "skim/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace skim {

bool DocumentPage::operator==(const DocumentPage& o) const {
  if (doc_id != o.doc_id || page_width != o.page_width || page_height != o.page_height ||
      tokens != o.tokens || labels != o.labels || boxes.size() != o.boxes.size())
    return false;
  for (size_t i = 0; i < boxes.size(); ++i) {
    if (boxes[i].x0 != o.boxes[i].x0 || boxes[i].y0 != o.boxes[i].y0 ||
        boxes[i].x1 != o.boxes[i].x1 || boxes[i].y1 != o.boxes[i].y1)
      return false;
  }
  return true;
}

const std::vector<std::string>& label_names() {
  static const std::vector<std::string> names = {"abstract", "author",    "caption", "date",
                                                 "equation", "footer",    "list",    "paragraph",
                                                 "reference", "section",  "table",   "title"};
  return names;
}

int64_t label_id(const std::string& name) {
  const auto& names = label_names();
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int64_t>(i);
  throw std::invalid_argument("unknown layout label \"" + name + "\"");
}

int64_t Vocabulary::id(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int64_t id) const {
  if (id < 0 || id >= size())
    throw std::out_of_range("vocabulary id " + std::to_string(id) + " outside [0," +
                            std::to_string(size()) + ")");
  return id_to_token[static_cast<size_t>(id)];
}

std::string Vocabulary::to_json() const {
  nlohmann::json j;
  j["tokens"] = id_to_token;
  return j.dump();
}

Vocabulary Vocabulary::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Vocabulary v;
  v.id_to_token = j.at("tokens").get<std::vector<std::string>>();
  if (v.size() < kNumSpecial || v.id_to_token[0] != "[PAD]" || v.id_to_token[1] != "[UNK]" ||
      v.id_to_token[2] != "[MASK]" || v.id_to_token[3] != "[CLS]")
    throw std::runtime_error("vocabulary document lacks the special tokens");
  for (size_t i = 0; i < v.id_to_token.size(); ++i)
    v.token_to_id[v.id_to_token[i]] = static_cast<int64_t>(i);
  return v;
}

Vocabulary build_vocab(const std::vector<DocumentPage>& pages, int64_t max_size) {
  if (max_size <= Vocabulary::kNumSpecial)
    throw std::invalid_argument("vocabulary size must exceed the 4 special tokens");
  std::map<std::string, int64_t> freq;
  for (const DocumentPage& p : pages)
    for (const std::string& t : p.tokens) ++freq[t];
  std::vector<std::pair<std::string, int64_t>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  v.id_to_token = {"[PAD]", "[UNK]", "[MASK]", "[CLS]"};
  for (const auto& [token, count] : entries) {
    if (v.size() >= max_size) break;
    v.id_to_token.push_back(token);
  }
  for (size_t i = 0; i < v.id_to_token.size(); ++i)
    v.token_to_id[v.id_to_token[i]] = static_cast<int64_t>(i);
  return v;
}

namespace {

void validate_page(const DocumentPage& p) {
  if (p.page_width <= 0 || p.page_height <= 0)
    throw std::runtime_error("page dimensions must be positive");
  if (p.tokens.size() != p.boxes.size())
    throw std::runtime_error("page has " + std::to_string(p.tokens.size()) + " tokens but " +
                             std::to_string(p.boxes.size()) + " boxes");
  if (!p.labels.empty() && p.labels.size() != p.tokens.size())
    throw std::runtime_error("page has " + std::to_string(p.tokens.size()) + " tokens but " +
                             std::to_string(p.labels.size()) + " labels");
  for (size_t i = 0; i < p.boxes.size(); ++i) {
    const BoundingBox& b = p.boxes[i];
    if (b.x1 < b.x0 || b.y1 < b.y0)
      throw std::runtime_error("inverted box at token " + std::to_string(i));
  }
  for (int64_t l : p.labels) {
    if (l < 0 || l >= static_cast<int64_t>(label_names().size()))
      throw std::runtime_error("label id " + std::to_string(l) + " outside the 12-label set");
  }
}

DocumentPage page_from_json(const nlohmann::json& j) {
  DocumentPage p;
  p.doc_id = j.value("doc_id", "");
  p.page_width = j.at("page_width").get<double>();
  p.page_height = j.at("page_height").get<double>();
  p.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (const auto& b : j.at("boxes")) {
    if (!b.is_array() || b.size() != 4) throw std::runtime_error("box is not a 4-element array");
    p.boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
  }
  if (j.contains("labels")) p.labels = j["labels"].get<std::vector<int64_t>>();
  validate_page(p);
  return p;
}

nlohmann::json page_to_json(const DocumentPage& p) {
  nlohmann::json j;
  j["doc_id"] = p.doc_id;
  j["page_width"] = p.page_width;
  j["page_height"] = p.page_height;
  j["tokens"] = p.tokens;
  nlohmann::json boxes = nlohmann::json::array();
  for (const BoundingBox& b : p.boxes) boxes.push_back({b.x0, b.y0, b.x1, b.y1});
  j["boxes"] = std::move(boxes);
  if (!p.labels.empty()) j["labels"] = p.labels;
  return j;
}

}  // namespace

LoadResult load_jsonl(const std::string& path, bool fail_fast) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open corpus file " + path);
  LoadResult result;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      result.pages.push_back(page_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      std::string msg = path + ":" + std::to_string(line_no) + ": " + e.what();
      if (fail_fast) throw std::runtime_error(msg);
      result.errors.push_back(msg);
    }
  }
  return result;
}

void save_jsonl(const std::string& path, const std::vector<DocumentPage>& pages) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  for (const DocumentPage& p : pages) os << page_to_json(p).dump() << "\n";
  if (!os) throw std::runtime_error("write failed for " + path);
}

namespace {

// Typical placement region per label, as fractions of the page; blocks anchor
// their top-left corner inside it.
struct Region {
  double x_lo, x_hi, y_lo, y_hi;
};

const Region& label_region(int64_t label) {
  static const std::vector<Region> regions = {
      {0.10, 0.55, 0.18, 0.32},  // abstract
      {0.10, 0.55, 0.10, 0.16},  // author
      {0.10, 0.50, 0.58, 0.72},  // caption
      {0.62, 0.80, 0.02, 0.08},  // date
      {0.28, 0.55, 0.36, 0.52},  // equation
      {0.10, 0.55, 0.90, 0.95},  // footer
      {0.05, 0.40, 0.38, 0.66},  // list
      {0.10, 0.55, 0.30, 0.70},  // paragraph
      {0.10, 0.55, 0.72, 0.88},  // reference
      {0.05, 0.45, 0.28, 0.60},  // section
      {0.45, 0.75, 0.34, 0.64},  // table
      {0.10, 0.45, 0.02, 0.09},  // title
  };
  return regions[static_cast<size_t>(label)];
}

// 4 rows x 3 cols of well-separated anchor cells; labels map to cells in
// order, so a block's label is decidable from its position alone.
const Region& label_cell(int64_t label) {
  static const std::vector<Region> cells = [] {
    std::vector<Region> v;
    for (int64_t i = 0; i < 12; ++i) {
      double x = 0.03 + 0.33 * static_cast<double>(i / 4);
      double y = 0.03 + 0.25 * static_cast<double>(i % 4);
      v.push_back({x, x + 0.10, y, y + 0.07});
    }
    return v;
  }();
  return cells[static_cast<size_t>(label)];
}

struct Rect {
  double x0, y0, x1, y1;
};

bool rects_overlap(const Rect& a, const Rect& b, double margin) {
  return a.x0 < b.x1 + margin && b.x0 < a.x1 + margin && a.y0 < b.y1 + margin &&
         b.y0 < a.y1 + margin;
}

std::string label_word(int64_t label, int64_t i) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02lld", static_cast<long long>(i));
  return label_names()[static_cast<size_t>(label)] + buf;
}

std::string common_word(int64_t i) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02lld", static_cast<long long>(i));
  return std::string("word") + buf;
}

std::string pool_word(int64_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%03lld", static_cast<long long>(i));
  return std::string("tok") + buf;
}

constexpr double kCharW = 7;
constexpr double kCharH = 16;
constexpr double kSpaceW = 5;
constexpr double kLineGap = 4;
constexpr double kBlockMargin = 6;

struct LaidBlock {
  Rect rect;
  int64_t label;
  std::vector<std::string> tokens;
  std::vector<BoundingBox> boxes;
};

// Flows tokens left-to-right, wrapping at the block width.
LaidBlock lay_out_block(const std::vector<std::string>& tokens, int64_t label, double x0, double y0,
                        double width) {
  LaidBlock b;
  b.label = label;
  b.tokens = tokens;
  double cx = x0, cy = y0;
  for (const std::string& t : tokens) {
    double w = static_cast<double>(t.size()) * kCharW;
    if (cx + w > x0 + width && cx > x0) {
      cx = x0;
      cy += kCharH + kLineGap;
    }
    b.boxes.push_back({cx, cy, cx + w, cy + kCharH});
    cx += w + kSpaceW;
  }
  b.rect = {x0, y0, x0, y0};
  for (const BoundingBox& box : b.boxes) {
    b.rect.x1 = std::max(b.rect.x1, box.x1);
    b.rect.y1 = std::max(b.rect.y1, box.y1);
  }
  return b;
}

}  // namespace

std::vector<DocumentPage> generate_synthetic(const GeneratorConfig& cfg, uint64_t seed) {
  if (cfg.num_pages < 1) throw std::invalid_argument("generator needs at least one page");
  int64_t num_labels = static_cast<int64_t>(label_names().size());
  std::vector<DocumentPage> pages;
  pages.reserve(static_cast<size_t>(cfg.num_pages));

  for (int64_t page_idx = 0; page_idx < cfg.num_pages; ++page_idx) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(page_idx)));
    DocumentPage page;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "synth-%06lld", static_cast<long long>(page_idx));
    page.doc_id = idbuf;
    page.page_width = cfg.page_width;
    page.page_height = cfg.page_height;

    int64_t num_blocks = rng.uniform_int(cfg.min_blocks, cfg.max_blocks);
    std::vector<LaidBlock> placed;
    int64_t total_tokens = 0;

    for (int64_t bi = 0; bi < num_blocks; ++bi) {
      int64_t label = rng.uniform_int(0, num_labels - 1);
      int64_t count = rng.uniform_int(cfg.min_block_tokens, cfg.max_block_tokens);
      if (total_tokens + count > cfg.max_page_tokens) count = cfg.max_page_tokens - total_tokens;
      if (count < 1) break;

      // Pick the block's topic words from its label vocabulary, then draw
      // tokens mostly from the topic (Zipf weighted) with a slice of shared
      // vocabulary mixed in.
      std::vector<int64_t> topic(static_cast<size_t>(cfg.topic_words));
      for (int64_t& t : topic) t = rng.uniform_int(0, cfg.label_vocab_words - 1);
      double zipf_total = 0.0;
      for (int64_t r = 1; r <= cfg.topic_words; ++r) zipf_total += 1.0 / static_cast<double>(r);

      std::vector<std::string> tokens;
      tokens.reserve(static_cast<size_t>(count));
      for (int64_t ti = 0; ti < count; ++ti) {
        if (rng.uniform() < cfg.common_prob) {
          tokens.push_back(common_word(rng.uniform_int(0, cfg.common_vocab_words - 1)));
        } else {
          double u = rng.uniform() * zipf_total;
          int64_t pick = cfg.topic_words - 1;
          for (int64_t r = 1; r <= cfg.topic_words; ++r) {
            u -= 1.0 / static_cast<double>(r);
            if (u <= 0.0) {
              pick = r - 1;
              break;
            }
          }
          int64_t wi = topic[static_cast<size_t>(pick)];
          if (cfg.label_vocab_stride > 0) {
            int64_t pool = num_labels * cfg.label_vocab_stride;
            tokens.push_back(pool_word((label * cfg.label_vocab_stride + wi) % pool));
          } else {
            tokens.push_back(label_word(label, wi));
          }
        }
      }

      const Region& region = cfg.disjoint_regions ? label_cell(label) : label_region(label);
      bool done = false;
      for (int attempt = 0; attempt < 20 && !done; ++attempt) {
        double width = (cfg.disjoint_regions ? rng.uniform(0.15, 0.22) : rng.uniform(0.18, 0.38)) *
                       cfg.page_width;
        double x0 = rng.uniform(region.x_lo, region.x_hi) * cfg.page_width;
        double y0 = rng.uniform(region.y_lo, region.y_hi) * cfg.page_height;
        LaidBlock cand = lay_out_block(tokens, label, x0, y0, width);
        if (cand.rect.x1 > cfg.page_width || cand.rect.y1 > cfg.page_height) continue;
        bool clash = false;
        for (const LaidBlock& other : placed)
          if (rects_overlap(cand.rect, other.rect, kBlockMargin)) {
            clash = true;
            break;
          }
        if (!clash) {
          placed.push_back(std::move(cand));
          total_tokens += count;
          done = true;
        }
      }
      if (!done)
        std::cerr << "generator: skipped a " << label_names()[static_cast<size_t>(label)]
                  << " block on " << page.doc_id << " after 20 placement attempts\n";
    }

    // Reading order: top to bottom, then left to right — or scrambled, the
    // way a noisy extraction stream interleaves blocks.
    if (cfg.shuffle_blocks) {
      std::vector<int64_t> order(placed.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
      rng.shuffle(order);
      std::vector<LaidBlock> scrambled;
      scrambled.reserve(placed.size());
      for (int64_t i : order) scrambled.push_back(std::move(placed[static_cast<size_t>(i)]));
      placed = std::move(scrambled);
    } else {
      std::sort(placed.begin(), placed.end(), [](const LaidBlock& a, const LaidBlock& b) {
        if (a.rect.y0 != b.rect.y0) return a.rect.y0 < b.rect.y0;
        return a.rect.x0 < b.rect.x0;
      });
    }
    for (const LaidBlock& b : placed) {
      for (size_t i = 0; i < b.tokens.size(); ++i) {
        page.tokens.push_back(b.tokens[i]);
        page.boxes.push_back(b.boxes[i]);
        page.labels.push_back(b.label);
      }
    }
    if (cfg.shuffle_tokens) {
      std::vector<int64_t> perm(page.tokens.size());
      for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int64_t>(i);
      rng.shuffle(perm);
      DocumentPage mixed = page;
      for (size_t i = 0; i < perm.size(); ++i) {
        size_t j = static_cast<size_t>(perm[i]);
        mixed.tokens[i] = page.tokens[j];
        mixed.boxes[i] = page.boxes[j];
        mixed.labels[i] = page.labels[j];
      }
      page = std::move(mixed);
    }
    validate_page(page);
    pages.push_back(std::move(page));
  }
  return pages;
}

CorpusSplit split(const std::vector<DocumentPage>& pages, const SplitRatios& ratios, uint64_t seed) {
  if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");
  int64_t n = static_cast<int64_t>(pages.size());
  if (n < 3) throw std::invalid_argument("need at least 3 pages to split, got " + std::to_string(n));
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);
  int64_t n_train = static_cast<int64_t>(std::floor(ratios.train * static_cast<double>(n)));
  int64_t n_valid = static_cast<int64_t>(std::floor(ratios.valid * static_cast<double>(n)));
  CorpusSplit out;
  for (int64_t i = 0; i < n; ++i) {
    const DocumentPage& p = pages[static_cast<size_t>(order[static_cast<size_t>(i)])];
    if (i < n_train)
      out.train.push_back(p);
    else if (i < n_train + n_valid)
      out.valid.push_back(p);
    else
      out.test.push_back(p);
  }
  return out;
}

}  // namespace skim
