#include "skim/commands.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "skim/corpus.hpp"
#include "skim/model.hpp"
#include "skim/skim_mask.hpp"
#include "skim/training.hpp"

namespace skim {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr uint64_t kEvalSeed = 1000003;

// Reads config keys while recording every effective value, so the resolved
// config written next to the outputs reproduces the run exactly.
struct ConfigReader {
  json raw;
  json resolved;

  template <typename T>
  T get(const std::string& key, T fallback) {
    T v = raw.contains(key) ? raw.at(key).get<T>() : fallback;
    resolved[key] = v;
    return v;
  }

  bool has(const std::string& key) const { return raw.contains(key); }

  json section(const std::string& key) { return raw.contains(key) ? raw.at(key) : json::object(); }
};

ConfigReader read_config(const CliOptions& options) {
  ConfigReader reader;
  reader.raw = json::object();
  if (!options.config_path.empty()) {
    std::ifstream is(options.config_path);
    if (!is) throw std::invalid_argument("cannot read config " + options.config_path);
    try {
      is >> reader.raw;
    } catch (const json::exception& e) {
      throw std::invalid_argument("config " + options.config_path + ": " + e.what());
    }
    if (!reader.raw.is_object())
      throw std::invalid_argument("config " + options.config_path + " must hold a JSON object");
  }
  return reader;
}

uint64_t effective_seed(const CliOptions& options, ConfigReader& config) {
  uint64_t from_file = config.get<uint64_t>("seed", 0);
  return options.seed_set ? options.seed : from_file;
}

fs::path prepare_out_dir(const CliOptions& options) {
  if (options.out_dir.empty()) throw std::invalid_argument("--out is required");
  fs::path dir(options.out_dir);
  if (fs::exists(dir) && !options.force)
    throw std::invalid_argument("output directory " + options.out_dir +
                                " exists; pass --force to reuse it");
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

void write_resolved(const fs::path& dir, const std::string& command, uint64_t seed,
                    const CliOptions& options, ConfigReader& config) {
  json out = config.resolved;
  out["command"] = command;
  out["seed"] = seed;
  out["out"] = options.out_dir;
  write_text(dir / "resolved_config.json", out.dump(2) + "\n");
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ModelConfig model_config_from(const json& section) {
  ModelConfig base;
  json merged = json::parse(base.to_json());
  merged.update(section, true);
  return ModelConfig::from_json(merged.dump());
}

std::vector<PageInput> encode_corpus(const std::vector<DocumentPage>& pages,
                                     const Vocabulary& vocab, int64_t max_len) {
  std::vector<PageInput> out;
  out.reserve(pages.size());
  for (const DocumentPage& page : pages) out.push_back(encode_page(page, vocab, max_len));
  return out;
}

std::vector<DocumentPage> load_pages(const fs::path& path) {
  if (!fs::exists(path)) throw std::invalid_argument("missing corpus file " + path.string());
  return load_jsonl(path.string()).pages;
}

Model load_model_checked(const std::string& dir) {
  if (!fs::exists(fs::path(dir) / "checkpoint.bin"))
    throw std::invalid_argument("missing checkpoint in " + dir);
  return load_model(dir);
}

Vocabulary vocab_for(const std::string& model_dir) {
  return Vocabulary::from_json(read_text(fs::path(model_dir) / "vocab.json"));
}

std::string loss_csv(const std::vector<StepRecord>& records) {
  std::string out = "step,loss\n";
  char line[64];
  for (const StepRecord& r : records) {
    std::snprintf(line, sizeof line, "%lld,%.17g\n", static_cast<long long>(r.step), r.loss);
    out += line;
  }
  return out;
}

json metrics_json(const LabelingMetrics& m) {
  json per;
  const std::vector<std::string>& names = label_names();
  for (size_t c = 0; c < names.size(); ++c) {
    per[names[c]] = {{"precision", m.per_class[c].precision},
                     {"recall", m.per_class[c].recall},
                     {"f1", m.per_class[c].f1},
                     {"support", m.per_class[c].support}};
  }
  return json{{"per_label", per},
              {"macro",
               {{"precision", m.macro_precision},
                {"recall", m.macro_recall},
                {"f1", m.macro_f1}}},
              {"tokens", m.total}};
}

int cmd_gen_data(const CliOptions& options) {
  ConfigReader config = read_config(options);
  uint64_t seed = effective_seed(options, config);
  GeneratorConfig gen;
  gen.num_pages = config.get<int64_t>("pages", gen.num_pages);
  gen.page_width = config.get<double>("page_width", gen.page_width);
  gen.page_height = config.get<double>("page_height", gen.page_height);
  gen.min_blocks = config.get<int64_t>("min_blocks", gen.min_blocks);
  gen.max_blocks = config.get<int64_t>("max_blocks", gen.max_blocks);
  gen.min_block_tokens = config.get<int64_t>("min_block_tokens", gen.min_block_tokens);
  gen.max_block_tokens = config.get<int64_t>("max_block_tokens", gen.max_block_tokens);
  gen.label_vocab_words = config.get<int64_t>("label_vocab_words", gen.label_vocab_words);
  gen.common_vocab_words = config.get<int64_t>("common_vocab_words", gen.common_vocab_words);
  gen.topic_words = config.get<int64_t>("topic_words", gen.topic_words);
  gen.common_prob = config.get<double>("common_prob", gen.common_prob);
  gen.max_page_tokens = config.get<int64_t>("max_page_tokens", gen.max_page_tokens);
  gen.label_vocab_stride = config.get<int64_t>("label_vocab_stride", gen.label_vocab_stride);
  gen.disjoint_regions = config.get<bool>("disjoint_regions", gen.disjoint_regions);
  gen.shuffle_blocks = config.get<bool>("shuffle_blocks", gen.shuffle_blocks);
  gen.shuffle_tokens = config.get<bool>("shuffle_tokens", gen.shuffle_tokens);
  std::vector<double> ratios = config.get<std::vector<double>>("ratios", {0.8, 0.1, 0.1});
  if (ratios.size() != 3) throw std::invalid_argument("ratios must hold three fractions");

  fs::path dir = prepare_out_dir(options);
  std::vector<DocumentPage> pages = generate_synthetic(gen, seed);
  CorpusSplit parts = split(pages, {ratios[0], ratios[1], ratios[2]}, seed);

  save_jsonl((dir / "train.jsonl").string(), parts.train);
  save_jsonl((dir / "valid.jsonl").string(), parts.valid);
  save_jsonl((dir / "test.jsonl").string(), parts.test);
  json manifest{{"seed", seed},
                {"pages", pages.size()},
                {"train", parts.train.size()},
                {"valid", parts.valid.size()},
                {"test", parts.test.size()}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_resolved(dir, "gen-data", seed, options, config);
  std::cout << "wrote " << pages.size() << " pages to " << dir.string() << "\n";
  return 0;
}

int cmd_pretrain(const CliOptions& options) {
  ConfigReader config = read_config(options);
  uint64_t seed = effective_seed(options, config);
  std::string corpus_dir = config.get<std::string>("corpus_dir", "");
  if (corpus_dir.empty()) throw std::invalid_argument("corpus_dir is required");
  ModelConfig model_config = model_config_from(config.section("model"));
  config.resolved["model"] = json::parse(model_config.to_json());

  TrainConfig tc;
  tc.steps = config.get<int64_t>("steps", 500);
  tc.batch_size = config.get<int64_t>("batch_size", 8);
  tc.optim.lr = config.get<double>("lr", 1e-4);
  tc.optim.warmup_steps = config.get<int64_t>("warmup_steps", 100);
  tc.optim.weight_decay = config.get<double>("weight_decay", 0.01);
  tc.seed = seed;
  uint64_t eval_seed = config.get<uint64_t>("eval_seed", kEvalSeed);

  fs::path dir = prepare_out_dir(options);
  std::vector<DocumentPage> train_pages = load_pages(fs::path(corpus_dir) / "train.jsonl");
  Vocabulary vocab = build_vocab(train_pages, model_config.vocab_size);
  model_config.vocab_size = vocab.size();  // configured value is a cap
  config.resolved["model"]["vocab_size"] = vocab.size();
  std::vector<PageInput> train = encode_corpus(train_pages, vocab, model_config.max_len);

  Rng rng(seed);
  Model model = Model::init(model_config, rng);
  std::vector<StepRecord> records =
      pretrain_mvlm(model, train, tc, [](const StepEvent& e) {
        std::cout << "step " << e.step << " loss " << e.loss << "\n";
      });

  save_model((dir / "model").string(), model);
  write_text(dir / "model" / "vocab.json", vocab.to_json() + "\n");
  write_text(dir / "loss.csv", loss_csv(records));

  json metrics{{"initial_loss", records.front().loss}, {"final_loss", records.back().loss}};
  fs::path valid_path = fs::path(corpus_dir) / "valid.jsonl";
  if (fs::exists(valid_path)) {
    std::vector<PageInput> valid =
        encode_corpus(load_pages(valid_path), vocab, model_config.max_len);
    metrics["valid_perplexity"] = perplexity(model, valid, eval_seed);
  }
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_resolved(dir, "pretrain", seed, options, config);
  return 0;
}

int cmd_finetune(const CliOptions& options) {
  ConfigReader config = read_config(options);
  uint64_t seed = effective_seed(options, config);
  std::string corpus_dir = config.get<std::string>("corpus_dir", "");
  if (corpus_dir.empty()) throw std::invalid_argument("corpus_dir is required");
  std::string init = config.get<std::string>("init_checkpoint", "");

  TrainConfig tc;
  tc.epochs = config.get<int64_t>("epochs", 10);
  tc.batch_size = config.get<int64_t>("batch_size", 8);
  tc.optim.lr = config.get<double>("lr", 5e-5);
  tc.optim.warmup_steps = config.get<int64_t>("warmup_steps", 0);
  tc.optim.weight_decay = config.get<double>("weight_decay", 0.01);
  tc.seed = seed;

  fs::path dir = prepare_out_dir(options);
  std::vector<DocumentPage> train_pages = load_pages(fs::path(corpus_dir) / "train.jsonl");

  Model model;
  Vocabulary vocab;
  if (!init.empty()) {
    model = load_model_checked(init);
    vocab = vocab_for(init);
    config.resolved["model"] = json::parse(model.encoder.config.to_json());
  } else {
    ModelConfig model_config = model_config_from(config.section("model"));
    vocab = build_vocab(train_pages, model_config.vocab_size);
    model_config.vocab_size = vocab.size();  // configured value is a cap
    config.resolved["model"] = json::parse(model_config.to_json());
    Rng rng(seed);
    model = Model::init(model_config, rng);
  }

  int64_t max_len = model.encoder.config.max_len;
  std::vector<PageInput> train = encode_corpus(train_pages, vocab, max_len);
  std::vector<StepRecord> records =
      finetune_labels(model, train, tc, [](const StepEvent& e) {
        std::cout << "step " << e.step << " loss " << e.loss << "\n";
      });

  save_model((dir / "model").string(), model);
  write_text(dir / "model" / "vocab.json", vocab.to_json() + "\n");
  write_text(dir / "loss.csv", loss_csv(records));

  json metrics{{"initial_loss", records.front().loss}, {"final_loss", records.back().loss}};
  fs::path valid_path = fs::path(corpus_dir) / "valid.jsonl";
  if (fs::exists(valid_path)) {
    std::vector<PageInput> valid = encode_corpus(load_pages(valid_path), vocab, max_len);
    metrics["valid"] = metrics_json(evaluate_labeling(model, valid));
  }
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_resolved(dir, "finetune", seed, options, config);
  return 0;
}

int cmd_eval_ppl(const CliOptions& options) {
  ConfigReader config = read_config(options);
  uint64_t seed = effective_seed(options, config);
  std::string checkpoint = config.get<std::string>("checkpoint", "");
  std::string corpus = config.get<std::string>("corpus", "");
  if (checkpoint.empty() || corpus.empty())
    throw std::invalid_argument("checkpoint and corpus are required");
  uint64_t eval_seed = config.get<uint64_t>("eval_seed", kEvalSeed);

  fs::path dir = prepare_out_dir(options);
  Model model = load_model_checked(checkpoint);
  Vocabulary vocab = vocab_for(checkpoint);
  std::vector<PageInput> pages =
      encode_corpus(load_pages(corpus), vocab, model.encoder.config.max_len);
  double ppl = perplexity(model, pages, eval_seed);

  json metrics{{"perplexity", ppl}, {"pages", pages.size()}};
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_resolved(dir, "eval-ppl", seed, options, config);
  std::cout << "perplexity " << ppl << "\n";
  return 0;
}

int cmd_eval_la(const CliOptions& options) {
  ConfigReader config = read_config(options);
  uint64_t seed = effective_seed(options, config);
  std::string checkpoint = config.get<std::string>("checkpoint", "");
  std::string corpus = config.get<std::string>("corpus", "");
  if (checkpoint.empty() || corpus.empty())
    throw std::invalid_argument("checkpoint and corpus are required");

  fs::path dir = prepare_out_dir(options);
  Model model = load_model_checked(checkpoint);
  Vocabulary vocab = vocab_for(checkpoint);
  std::vector<PageInput> pages =
      encode_corpus(load_pages(corpus), vocab, model.encoder.config.max_len);
  LabelingMetrics m = evaluate_labeling(model, pages);

  write_text(dir / "metrics.json", metrics_json(m).dump(2) + "\n");
  write_resolved(dir, "eval-la", seed, options, config);
  std::cout << "macro f1 " << m.macro_f1 << "\n";
  return 0;
}

SkimAttentionMatrix page_skim_matrix(const Model& model, const PageInput& page) {
  if (!model.encoder.has_layout())
    throw std::invalid_argument("checkpoint carries no layout parameters");
  Tensor lrep = layout_representation(page.boxes, model.encoder.config.layout_mode,
                                      model.encoder.layout);
  return skim_attention(lrep, model.encoder.skim);
}

int cmd_mask(const CliOptions& options) {
  ConfigReader config = read_config(options);
  uint64_t seed = effective_seed(options, config);
  std::string checkpoint = config.get<std::string>("checkpoint", "");
  std::string corpus = config.get<std::string>("corpus", "");
  if (checkpoint.empty() || corpus.empty())
    throw std::invalid_argument("checkpoint and corpus are required");
  std::vector<int64_t> ks = config.get<std::vector<int64_t>>("k", {4, 8, 16, 32});
  int64_t max_pages = config.get<int64_t>("max_pages", 0);  // 0 = all

  fs::path dir = prepare_out_dir(options);
  Model model = load_model_checked(checkpoint);
  Vocabulary vocab = vocab_for(checkpoint);
  std::vector<PageInput> pages =
      encode_corpus(load_pages(corpus), vocab, model.encoder.config.max_len);
  if (max_pages > 0 && static_cast<int64_t>(pages.size()) > max_pages)
    pages.resize(static_cast<size_t>(max_pages));

  char name[64];
  for (size_t p = 0; p < pages.size(); ++p) {
    SkimAttentionMatrix A = page_skim_matrix(model, pages[p]);
    for (int64_t k : ks) {
      int64_t capped = std::min<int64_t>(k, A.n());
      AttentionMask mask = build_mask(A, capped);
      std::string text = mask_to_json(mask);
      mask_from_json(text);  // schema check before anything lands on disk
      std::snprintf(name, sizeof name, "mask_page%04zu_k%02lld.json", p,
                    static_cast<long long>(k));
      write_text(dir / name, text + "\n");
    }
  }
  write_resolved(dir, "mask", seed, options, config);
  std::cout << "wrote " << pages.size() * ks.size() << " masks\n";
  return 0;
}

int cmd_attmap(const CliOptions& options) {
  ConfigReader config = read_config(options);
  uint64_t seed = effective_seed(options, config);
  std::string checkpoint = config.get<std::string>("checkpoint", "");
  std::string corpus = config.get<std::string>("corpus", "");
  if (checkpoint.empty() || corpus.empty())
    throw std::invalid_argument("checkpoint and corpus are required");
  int64_t page_index = config.get<int64_t>("page_index", 0);

  fs::path dir = prepare_out_dir(options);
  Model model = load_model_checked(checkpoint);
  Vocabulary vocab = vocab_for(checkpoint);
  std::vector<DocumentPage> raw = load_pages(corpus);
  if (page_index < 0 || page_index >= static_cast<int64_t>(raw.size()))
    throw std::invalid_argument("page_index " + std::to_string(page_index) + " out of range");
  const DocumentPage& doc = raw[static_cast<size_t>(page_index)];
  PageInput page = encode_page(doc, vocab, model.encoder.config.max_len);
  int64_t n = static_cast<int64_t>(page.token_ids.size());

  std::vector<int64_t> unit;
  if (config.has("unit")) {
    unit = config.get<std::vector<int64_t>>("unit", {});
    if (unit.empty()) throw std::invalid_argument("unit set is empty");
    for (int64_t u : unit)
      if (u < 0 || u >= n)
        throw std::invalid_argument("unit index " + std::to_string(u) + " out of range");
  } else {
    for (int64_t i = 0; i < n; ++i) unit.push_back(i);
    config.resolved["unit"] = unit;
  }

  SkimAttentionMatrix A = page_skim_matrix(model, page);
  Tensor avg = A.head_average();
  std::vector<double> score(static_cast<size_t>(n), 0.0);
  for (int64_t key = 0; key < n; ++key) {
    double s = 0;
    for (int64_t u : unit) s += avg.at(u, key);
    score[static_cast<size_t>(key)] = s / static_cast<double>(unit.size());
  }

  std::string csv = "token,x0,y0,x1,y1,score\n";
  char line[160];
  for (int64_t i = 0; i < n; ++i) {
    const std::string& text = i == 0 ? "[CLS]" : doc.tokens[static_cast<size_t>(i - 1)];
    const NormalizedBox& b = page.boxes[static_cast<size_t>(i)];
    std::snprintf(line, sizeof line, "%s,%lld,%lld,%lld,%lld,%.17g\n", text.c_str(),
                  static_cast<long long>(b.x0), static_cast<long long>(b.y0),
                  static_cast<long long>(b.x1), static_cast<long long>(b.y1),
                  score[static_cast<size_t>(i)]);
    csv += line;
  }
  write_text(dir / "attmap.csv", csv);

  // Plain graymap on a fixed canvas: each box is filled with its
  // max-normalized score; overlapping boxes keep the brighter value.
  constexpr int64_t kSide = 250;
  double max_score = *std::max_element(score.begin(), score.end());
  std::vector<int> pixels(static_cast<size_t>(kSide * kSide), 0);
  auto to_px = [](int64_t v) {
    int64_t p = static_cast<int64_t>(std::floor(static_cast<double>(v) * (kSide - 1) / 1000.0 + 0.5));
    return std::clamp<int64_t>(p, 0, kSide - 1);
  };
  for (int64_t i = 0; i < n; ++i) {
    const NormalizedBox& b = page.boxes[static_cast<size_t>(i)];
    int level = max_score > 0
                    ? static_cast<int>(std::floor(255.0 * score[static_cast<size_t>(i)] /
                                                  max_score + 0.5))
                    : 0;
    for (int64_t y = to_px(b.y0); y <= to_px(b.y1); ++y)
      for (int64_t x = to_px(b.x0); x <= to_px(b.x1); ++x) {
        int& px = pixels[static_cast<size_t>(y * kSide + x)];
        px = std::max(px, level);
      }
  }
  std::string pgm = "P2\n" + std::to_string(kSide) + " " + std::to_string(kSide) + "\n255\n";
  for (int64_t y = 0; y < kSide; ++y) {
    for (int64_t x = 0; x < kSide; ++x) {
      pgm += std::to_string(pixels[static_cast<size_t>(y * kSide + x)]);
      pgm += x + 1 == kSide ? '\n' : ' ';
    }
  }
  write_text(dir / "attmap.pgm", pgm);
  write_resolved(dir, "attmap", seed, options, config);
  return 0;
}

int cmd_bench(const CliOptions& options) {
  ConfigReader config = read_config(options);
  uint64_t seed = effective_seed(options, config);
  std::vector<int64_t> lengths = config.get<std::vector<int64_t>>("lengths", {8, 32, 128, 512});
  int64_t reps = config.get<int64_t>("reps", 5);
  if (reps < 5) throw std::invalid_argument("reps must be at least 5");
  int64_t hidden = config.get<int64_t>("hidden_size", 64);
  int64_t heads = config.get<int64_t>("num_heads", 4);
  int64_t layers = config.get<int64_t>("num_layers", 12);

  fs::path dir = prepare_out_dir(options);
  int64_t max_len = *std::max_element(lengths.begin(), lengths.end());

  ModelConfig skim_cfg;
  skim_cfg.vocab_size = 256;
  skim_cfg.hidden_size = hidden;
  skim_cfg.layout_hidden = hidden;
  skim_cfg.num_layers = layers;
  skim_cfg.num_heads = heads;
  skim_cfg.contextualizer_heads = heads;
  skim_cfg.max_len = max_len;
  ModelConfig std_cfg = skim_cfg;
  std_cfg.attention_kind = AttentionKind::standard;

  Rng rng(seed);
  Model skim_model = Model::init(skim_cfg, rng);
  Model std_model = Model::init(std_cfg, rng);

  auto make_page = [&](int64_t n) {
    PageInput page;
    Rng prng(derive_seed(seed, static_cast<uint64_t>(n), 5));
    for (int64_t i = 0; i < n; ++i) {
      page.token_ids.push_back(prng.uniform_int(4, skim_cfg.vocab_size - 1));
      int64_t x = prng.uniform_int(0, 900);
      int64_t y = prng.uniform_int(0, 950);
      page.boxes.push_back({x, y, x + prng.uniform_int(5, 99), y + prng.uniform_int(5, 49)});
    }
    return page;
  };
  auto median_step_ms = [&](const Model& model, const PageInput& page) {
    std::vector<double> times;
    for (int64_t r = 0; r < reps; ++r) {
      auto start = std::chrono::steady_clock::now();
      Tensor hidden = encoder_forward(model.encoder, page).hidden;
      mean_all(hidden).backward();
      auto stop = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
      std::vector<Tensor> params = model.trainables();
      for (Tensor& t : params) t.zero_grad();
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };

  std::string csv =
      "seq_len,skim_desk_step_ms,standard_desk_step_ms,peak_rss_kb,compute_ratio_pct\n";
  char line[160];
  for (int64_t n : lengths) {
    PageInput page = make_page(n);
    double skim_ms = median_step_ms(skim_model, page);
    double std_ms = median_step_ms(std_model, page);
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    ComputeBudget mine{n, 0, 1 + skim_cfg.contextualizer_layers, 0};
    ComputeBudget base{0, n, 0, layers};
    std::snprintf(line, sizeof line, "%lld,%.3f,%.3f,%lld,%.2f\n", static_cast<long long>(n),
                  skim_ms, std_ms, static_cast<long long>(usage.ru_maxrss),
                  compute_ratio(mine, base));
    csv += line;
  }
  write_text(dir / "bench.csv", csv);
  write_resolved(dir, "bench", seed, options, config);
  std::cout << csv;
  return 0;
}

}  // namespace

int run_command(const std::string& name, const CliOptions& options) {
  try {
    if (name == "gen-data") return cmd_gen_data(options);
    if (name == "pretrain") return cmd_pretrain(options);
    if (name == "finetune") return cmd_finetune(options);
    if (name == "eval-ppl") return cmd_eval_ppl(options);
    if (name == "eval-la") return cmd_eval_la(options);
    if (name == "mask") return cmd_mask(options);
    if (name == "attmap") return cmd_attmap(options);
    if (name == "bench") return cmd_bench(options);
    std::cerr << "error: unknown command " << name << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace skim
