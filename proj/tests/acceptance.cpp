// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Training stages log progress to stderr.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "skim/attention.hpp"
#include "skim/corpus.hpp"
#include "skim/layout.hpp"
#include "skim/model.hpp"
#include "skim/rng.hpp"
#include "skim/skim_mask.hpp"
#include "skim/tensor.hpp"
#include "skim/training.hpp"

using namespace skim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, ...) {
  char buf[1024];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

NormalizedBox random_box(Rng& rng) {
  int64_t x0 = rng.uniform_int(0, 999);
  int64_t y0 = rng.uniform_int(0, 999);
  return {x0, y0, rng.uniform_int(x0, 1000), rng.uniform_int(y0, 1000)};
}

std::vector<NormalizedBox> random_boxes(Rng& rng, int64_t n) {
  std::vector<NormalizedBox> boxes;
  boxes.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) boxes.push_back(random_box(rng));
  return boxes;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.numel() == b.numel() &&
         std::memcmp(a.data().data(), b.data().data(),
                     a.data().size() * sizeof(double)) == 0;
}

// --- criterion 1: compute-ratio reproduction ------------------------------

Outcome check_compute_ratios() {
  ComputeBudget skimformer{.skim_seq_len = 512, .standard_seq_len = 0, .num_skim_attn = 3,
                           .num_standard_attn = 0};
  ComputeBudget bert{.skim_seq_len = 0, .standard_seq_len = 512, .num_skim_attn = 0,
                     .num_standard_attn = 12};
  ComputeBudget skimming_mask{.skim_seq_len = 512, .standard_seq_len = 128, .num_skim_attn = 3,
                              .num_standard_attn = 12};
  ComputeBudget long_skim{.skim_seq_len = 2048, .standard_seq_len = 0, .num_skim_attn = 3,
                          .num_standard_attn = 0};
  ComputeBudget longformer_dense{.skim_seq_len = 0, .standard_seq_len = 2048, .num_skim_attn = 0,
                                 .num_standard_attn = 12};
  double r1 = compute_ratio(skimformer, bert);
  double r2 = compute_ratio(skimming_mask, bert);
  double r3 = compute_ratio(long_skim, longformer_dense);
  Outcome out;
  out.pass = std::llround(r1 * 100) == 2500 && std::llround(r2 * 100) == 3125 &&
             std::llround(r3 * 100) == 2500;
  out.detail = fmt("%.2f%% / %.2f%% / %.2f%%", r1, r2, r3);
  return out;
}

// --- criterion 2: row-stochasticity under masks and padding ---------------

Outcome check_row_stochasticity() {
  Rng rng(4001);
  LayoutConfig lc;
  lc.d_layout = 32;
  lc.max_len = 64;
  lc.contextualizer_layers = 2;
  lc.contextualizer_heads = 2;
  LayoutEmbeddingParams layout = LayoutEmbeddingParams::init(lc, rng);
  SkimAttentionParams skim = SkimAttentionParams::init(32, 2, rng);
  StandardAttentionParams standard = StandardAttentionParams::init(32, 2, rng);

  double worst = 0;
  int64_t rows_checked = 0;
  for (int page = 0; page < 100; ++page) {
    Rng prng(derive_seed(4100, static_cast<uint64_t>(page)));
    int64_t n = prng.uniform_int(2, 64);
    int64_t n_valid = prng.uniform_int(1, n);
    std::vector<NormalizedBox> boxes = random_boxes(prng, n);
    std::vector<uint8_t> valid(static_cast<size_t>(n), 0);
    for (int64_t i = 0; i < n_valid; ++i) valid[static_cast<size_t>(i)] = 1;

    Tensor lrep = layout_representation(boxes, LayoutMode::true_layout, layout, &valid);
    SkimAttentionMatrix A = skim_attention(lrep, skim, &valid);
    for (const Tensor& head : A.heads)
      for (int64_t r = 0; r < n; ++r) {
        double s = 0;
        for (int64_t c = 0; c < n; ++c) {
          double v = head.at(r, c);
          if (c >= n_valid && v != 0.0)
            return {false, fmt("padded skim entry (%lld,%lld) nonzero", r, c)};
          s += v;
        }
        worst = std::max(worst, std::fabs(s - 1.0));
        ++rows_checked;
      }

    AttentionMask mask = build_mask(A, prng.uniform_int(1, 8));
    std::vector<uint8_t> allow = mask_to_allow(mask);
    Tensor x = Tensor::randn({n, 32}, prng, 1.0);
    for (const Tensor& head : standard_attention_weights(x, standard, &allow))
      for (int64_t r = 0; r < n; ++r) {
        double s = 0;
        for (int64_t c = 0; c < n; ++c) {
          double v = head.at(r, c);
          if (!allow[static_cast<size_t>(r * n + c)] && v != 0.0)
            return {false, fmt("masked standard entry (%lld,%lld) nonzero", r, c)};
          s += v;
        }
        worst = std::max(worst, std::fabs(s - 1.0));
        ++rows_checked;
      }
  }
  Outcome out;
  out.pass = worst < 1e-9;
  out.detail = fmt("%lld rows, worst |sum-1| = %.2e", rows_checked, worst);
  return out;
}

// --- criterion 3: the skim matrix ignores token identities ----------------

Outcome check_layout_only_dependence() {
  ModelConfig mc;
  mc.vocab_size = 64;
  Rng mrng(4200);
  Model model = Model::init(mc, mrng);

  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(derive_seed(4300, static_cast<uint64_t>(trial)));
    int64_t n = rng.uniform_int(2, 63);
    PageInput page;
    page.boxes = random_boxes(rng, n);
    for (int64_t i = 0; i < n; ++i) page.token_ids.push_back(rng.uniform_int(0, 63));

    PageInput permuted = page;
    rng.shuffle(permuted.token_ids);

    ForwardResult a = encoder_forward(model.encoder, page);
    ForwardResult b = encoder_forward(model.encoder, permuted);
    if (a.skim.heads.size() != b.skim.heads.size())
      return {false, fmt("trial %d: head count differs", trial)};
    for (size_t h = 0; h < a.skim.heads.size(); ++h)
      if (!bit_equal(a.skim.heads[h], b.skim.heads[h]))
        return {false, fmt("trial %d head %zu differs", trial, h)};
  }
  return {true, "50 trials bit-identical"};
}

// --- criterion 4: gradient checks ------------------------------------------

Outcome check_gradients() {
  Rng rng(4400);

  LayoutConfig lc;
  lc.d_layout = 8;
  lc.max_len = 8;
  lc.contextualizer_layers = 0;
  lc.contextualizer_heads = 2;
  LayoutEmbeddingParams layout = LayoutEmbeddingParams::init(lc, rng);
  std::vector<NormalizedBox> boxes = random_boxes(rng, 4);
  Tensor w_embed = Tensor::randn({4, 8}, rng, 1.0);
  double e_embed = grad_check(
      [&]() { return mean_all(mul(embed_layout(boxes, layout), w_embed)); },
      {layout.table_x, layout.table_y, layout.table_w, layout.table_h});

  SkimAttentionParams skim = SkimAttentionParams::init(8, 2, rng);
  Tensor lrep = Tensor::randn({4, 8}, rng, 0.5, true);
  Tensor w_h0 = Tensor::randn({4, 4}, rng, 1.0);
  Tensor w_h1 = Tensor::randn({4, 4}, rng, 1.0);
  double e_skim = grad_check(
      [&]() {
        SkimAttentionMatrix A = skim_attention(lrep, skim);
        return add(mean_all(mul(A.heads[0], w_h0)), mean_all(mul(A.heads[1], w_h1)));
      },
      {lrep, skim.w_q, skim.b_q, skim.w_k, skim.b_k});

  ModelConfig mc;
  mc.vocab_size = 16;
  mc.hidden_size = 8;
  mc.num_layers = 2;
  mc.num_heads = 2;
  mc.layout_hidden = 8;
  mc.contextualizer_layers = 2;
  mc.contextualizer_heads = 2;
  mc.max_len = 8;
  Rng mrng(4401);
  Model model = Model::init(mc, mrng);
  PageInput page;
  page.token_ids = {3, 9, 12, 5};
  page.boxes = random_boxes(mrng, 4);
  std::vector<int64_t> targets = {kIgnoreTarget, 9, kIgnoreTarget, 12};
  double e_mvlm = grad_check(
      [&]() {
        Tensor hidden = encoder_forward(model.encoder, page).hidden;
        return cross_entropy(mvlm_logits(model, hidden), targets, kIgnoreTarget);
      },
      model.trainables());

  Outcome out;
  out.pass = e_embed < 1e-4 && e_skim < 1e-4 && e_mvlm < 1e-4;
  out.detail = fmt("embed %.2e, skim %.2e, mvlm %.2e", e_embed, e_skim, e_mvlm);
  return out;
}

// --- criterion 5: full mask equals open attention; top-k rows nest --------

Outcome check_mask_equivalence() {
  Rng rng(4500);
  ModelConfig hc;
  hc.attention_kind = AttentionKind::standard;
  hc.vocab_size = 64;
  Model host = Model::init(hc, rng);

  LayoutConfig lc;
  lc.d_layout = 32;
  lc.max_len = 64;
  lc.contextualizer_layers = 2;
  lc.contextualizer_heads = 2;
  LayoutEmbeddingParams layout = LayoutEmbeddingParams::init(lc, rng);
  SkimAttentionParams skim = SkimAttentionParams::init(32, 2, rng);

  int64_t n = 48;
  PageInput page;
  page.boxes = random_boxes(rng, n);
  for (int64_t i = 0; i < n; ++i) page.token_ids.push_back(rng.uniform_int(0, 63));

  SkimAttentionMatrix A =
      skim_attention(layout_representation(page.boxes, LayoutMode::true_layout, layout), skim);
  AttentionMask full = build_mask(A, n);
  Tensor open = encoder_forward(host.encoder, page).hidden;
  Tensor masked = encoder_forward(host.encoder, page, &full).hidden;
  double diff = 0;
  for (size_t i = 0; i < open.data().size(); ++i)
    diff = std::max(diff, std::fabs(open.data()[i] - masked.data()[i]));

  bool nested = true;
  std::vector<int64_t> ks = {4, 8, 16, 32};
  std::vector<AttentionMask> masks;
  for (int64_t k : ks) masks.push_back(build_mask(A, k));
  for (size_t i = 0; i + 1 < masks.size(); ++i)
    for (int64_t r = 0; r < n; ++r)
      if (!std::includes(masks[i + 1].rows[static_cast<size_t>(r)].begin(),
                         masks[i + 1].rows[static_cast<size_t>(r)].end(),
                         masks[i].rows[static_cast<size_t>(r)].begin(),
                         masks[i].rows[static_cast<size_t>(r)].end()))
        nested = false;

  Outcome out;
  out.pass = diff < 1e-12 && nested;
  out.detail = fmt("k=n max abs diff %.2e; k {4,8,16,32} %s", diff,
                   nested ? "nested" : "NOT nested");
  return out;
}

// --- criterion 6: uniform layout gives exactly uniform rows ---------------

Outcome check_uniform_rows(const ModelConfig& base, LayoutMode mode, bool pin_boxes,
                           double* worst_out) {
  ModelConfig mc = base;
  mc.layout_mode = mode;
  Rng rng(4600);
  Model model = Model::init(mc, rng);

  Rng prng(4601);
  int64_t n = 40, n_valid = 33;
  PageInput page;
  page.boxes = random_boxes(prng, n);
  if (pin_boxes)
    for (NormalizedBox& b : page.boxes) b = {0, 0, 1000, 1000};
  for (int64_t i = 0; i < n; ++i) page.token_ids.push_back(prng.uniform_int(0, 63));
  std::vector<uint8_t> valid(static_cast<size_t>(n), 0);
  for (int64_t i = 0; i < n_valid; ++i) valid[static_cast<size_t>(i)] = 1;

  ForwardResult r = encoder_forward(model.encoder, page, nullptr, &valid);
  double expect = 1.0 / static_cast<double>(n_valid);
  for (const Tensor& head : r.skim.heads)
    for (int64_t row = 0; row < n; ++row)
      for (int64_t c = 0; c < n; ++c) {
        double v = head.at(row, c);
        if (c >= n_valid) {
          if (v != 0.0) return {false, fmt("padded entry (%lld,%lld) nonzero", row, c)};
        } else {
          *worst_out = std::max(*worst_out, std::fabs(v - expect));
        }
      }
  return {true, ""};
}

Outcome check_uniform_degeneracy() {
  ModelConfig base;
  base.vocab_size = 64;
  double worst = 0;
  Outcome pre = check_uniform_rows(base, LayoutMode::uniform, false, &worst);
  if (!pre.pass) return pre;
  Outcome post = check_uniform_rows(base, LayoutMode::contextualized, true, &worst);
  if (!post.pass) return post;
  Outcome out;
  out.pass = worst < 1e-12;
  out.detail = fmt("worst |row - 1/n_valid| = %.2e pre and post contextualizer", worst);
  return out;
}

// --- criterion 11: reference-scale parameter count ------------------------

Outcome check_param_count() {
  ModelConfig pc;
  pc.vocab_size = 30522;
  pc.hidden_size = 768;
  pc.num_layers = 12;
  pc.num_heads = 12;
  pc.layout_hidden = 768;
  pc.contextualizer_layers = 2;
  pc.contextualizer_heads = 12;
  pc.max_len = 512;
  int64_t total = pc.param_count();
  double rel = std::fabs(static_cast<double>(total) - 113e6) / 113e6;
  Outcome out;
  out.pass = rel < 0.05;
  out.detail = fmt("%lld parameters, %.1f%% from 113M", static_cast<long long>(total),
                   rel * 100);
  return out;
}

// --- criteria 7-10, 12: the desk-scale pipeline ----------------------------

constexpr uint64_t kPplEvalSeed = 424242;

struct PipelineNumbers {
  double step0 = 0, final_loss = 0;
  bool boxes_identical = true;
  bool counts_ok = true;
  int64_t batches = 0, pages_masked = 0;
  double ppl_true = 0, ppl_uniform = 0, ppl_degraded = 0;
  double f1_skim = 0, f1_text = 0;
  double t_pretrain = 0, t_ablations = 0, t_labeling = 0;

  bool operator==(const PipelineNumbers& o) const {
    return step0 == o.step0 && final_loss == o.final_loss &&
           boxes_identical == o.boxes_identical && counts_ok == o.counts_ok &&
           batches == o.batches && pages_masked == o.pages_masked && ppl_true == o.ppl_true &&
           ppl_uniform == o.ppl_uniform && ppl_degraded == o.ppl_degraded &&
           f1_skim == o.f1_skim && f1_text == o.f1_text;
  }
};

GeneratorConfig pipeline_generator(int64_t pages) {
  GeneratorConfig g;
  g.num_pages = pages;
  g.topic_words = 2;
  g.common_prob = 0.05;
  g.label_vocab_stride = 5;
  g.label_vocab_words = 10;
  g.common_vocab_words = 48;
  g.min_block_tokens = 6;
  g.max_block_tokens = 10;
  g.disjoint_regions = true;
  g.shuffle_tokens = true;
  return g;
}

std::vector<PageInput> encode_all(const std::vector<DocumentPage>& pages, const Vocabulary& vocab,
                                  int64_t max_len) {
  std::vector<PageInput> out;
  out.reserve(pages.size());
  for (const DocumentPage& p : pages) out.push_back(encode_page(p, vocab, max_len));
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << text;
}

std::string loss_curve(const std::vector<StepRecord>& records) {
  std::string csv = "step,loss\n";
  for (const StepRecord& r : records)
    csv += fmt("%lld,%.17g\n", static_cast<long long>(r.step), r.loss);
  return csv;
}

PipelineNumbers run_pipeline(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  PipelineNumbers out;

  std::fprintf(stderr, "[pipeline %s] corpus\n", root.string().c_str());
  std::vector<DocumentPage> pages_a = generate_synthetic(pipeline_generator(500), 901);
  CorpusSplit split_a = split(pages_a, {}, 901);
  Vocabulary vocab_a = build_vocab(split_a.train, 512);
  std::vector<PageInput> train_a = encode_all(split_a.train, vocab_a, 64);
  std::vector<PageInput> valid_a = encode_all(split_a.valid, vocab_a, 64);

  ModelConfig small;
  small.vocab_size = vocab_a.size();

  TrainConfig pre;
  pre.steps = 500;
  pre.batch_size = 48;
  pre.optim.lr = 3e-3;
  pre.optim.warmup_steps = 25;
  pre.seed = 921;

  // Criterion 7 pretraining, with criterion 10's contract checked per batch.
  std::fprintf(stderr, "[pipeline] pretrain 500 steps\n");
  Clock::time_point t0 = Clock::now();
  Rng init7(911);
  Model model7 = Model::init(small, init7);
  StepHook contract = [&out](const StepEvent& e) {
    ++out.batches;
    for (size_t b = 0; b < e.batch->size(); ++b) {
      const PageInput& page = (*e.batch)[b];
      const MaskedPage& masked = (*e.masked)[b];
      ++out.pages_masked;
      if (masked.boxes.size() != page.boxes.size() ||
          (masked.boxes.size() &&
           std::memcmp(masked.boxes.data(), page.boxes.data(),
                       masked.boxes.size() * sizeof(NormalizedBox)) != 0))
        out.boxes_identical = false;
      int64_t want = masked.num_maskable == 0
                         ? 0
                         : std::max<int64_t>(1, std::llround(0.15 * static_cast<double>(
                                                                 masked.num_maskable)));
      if (masked.num_masked != want) out.counts_ok = false;
    }
  };
  std::vector<StepRecord> records7 = pretrain_mvlm(model7, train_a, pre, contract);
  out.step0 = records7.front().loss;
  out.final_loss = records7.back().loss;
  out.t_pretrain = elapsed_s(t0);
  save_model((root / "pretrain" / "model").string(), model7);
  write_file(root / "pretrain" / "vocab.json", vocab_a.to_json() + "\n");
  write_file(root / "pretrain" / "loss.csv", loss_curve(records7));

  // Criterion 8 ablations: identical init and schedule, only the layout
  // input transform differs.
  t0 = Clock::now();
  TrainConfig pre_ablate = pre;
  pre_ablate.seed = 922;
  struct Ablation {
    LayoutMode mode;
    const char* name;
    double* ppl;
  };
  Ablation ablations[] = {{LayoutMode::true_layout, "true_layout", &out.ppl_true},
                          {LayoutMode::uniform, "uniform", &out.ppl_uniform},
                          {LayoutMode::degraded, "degraded", &out.ppl_degraded}};
  for (const Ablation& a : ablations) {
    std::fprintf(stderr, "[pipeline] ablation %s\n", a.name);
    ModelConfig mc = small;
    mc.layout_mode = a.mode;
    Rng init(912);
    Model model = Model::init(mc, init);
    std::vector<StepRecord> records = pretrain_mvlm(model, train_a, pre_ablate);
    *a.ppl = perplexity(model, valid_a, kPplEvalSeed);
    fs::path dir = root / (std::string("ablate_") + a.name);
    save_model((dir / "model").string(), model);
    write_file(dir / "loss.csv", loss_curve(records));
  }
  out.t_ablations = elapsed_s(t0);

  // Criterion 9 corpus: same generator, more pages for pair coverage.
  t0 = Clock::now();
  std::fprintf(stderr, "[pipeline] labeling corpus\n");
  std::vector<DocumentPage> pages_b = generate_synthetic(pipeline_generator(1500), 902);
  CorpusSplit split_b = split(pages_b, {}, 902);
  Vocabulary vocab_b = build_vocab(split_b.train, 512);
  std::vector<PageInput> train_b = encode_all(split_b.train, vocab_b, 64);
  std::vector<PageInput> test_b = encode_all(split_b.test, vocab_b, 64);

  ModelConfig wide = small;
  wide.vocab_size = vocab_b.size();
  wide.hidden_size = 64;
  wide.num_heads = 4;
  wide.layout_hidden = 64;

  TrainConfig warm = pre;
  warm.steps = 300;
  warm.seed = 923;
  TrainConfig tune;
  tune.epochs = 15;
  tune.batch_size = 16;
  tune.optim.lr = 2e-3;
  tune.optim.warmup_steps = 0;
  tune.seed = 924;

  std::fprintf(stderr, "[pipeline] skim warm start + fine-tune\n");
  Rng init9(913);
  Model skim_model = Model::init(wide, init9);
  pretrain_mvlm(skim_model, train_b, warm);
  std::vector<StepRecord> records_ft = finetune_labels(skim_model, train_b, tune);
  out.f1_skim = evaluate_labeling(skim_model, test_b).macro_f1;
  save_model((root / "finetune_skim" / "model").string(), skim_model);
  write_file(root / "finetune_skim" / "loss.csv", loss_curve(records_ft));

  std::fprintf(stderr, "[pipeline] text baseline fine-tune\n");
  ModelConfig text_cfg = wide;
  text_cfg.attention_kind = AttentionKind::standard;
  Rng init_text(914);
  Model text_model = Model::init(text_cfg, init_text);
  std::vector<StepRecord> records_text = finetune_labels(text_model, train_b, tune);
  out.f1_text = evaluate_labeling(text_model, test_b).macro_f1;
  save_model((root / "finetune_text" / "model").string(), text_model);
  write_file(root / "finetune_text" / "loss.csv", loss_curve(records_text));
  out.t_labeling = elapsed_s(t0);

  write_file(root / "metrics.json",
             fmt("{\n"
                 "  \"step0_loss\": %.17g,\n"
                 "  \"final_loss\": %.17g,\n"
                 "  \"ppl_true_layout\": %.17g,\n"
                 "  \"ppl_uniform\": %.17g,\n"
                 "  \"ppl_degraded\": %.17g,\n"
                 "  \"macro_f1_skim\": %.17g,\n"
                 "  \"macro_f1_text\": %.17g\n"
                 "}\n",
                 out.step0, out.final_loss, out.ppl_true, out.ppl_uniform, out.ppl_degraded,
                 out.f1_skim, out.f1_text));
  return out;
}

std::map<std::string, std::string> slurp_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const fs::directory_entry& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream f(entry.path(), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    files[fs::relative(entry.path(), root).string()] = std::move(bytes);
  }
  return files;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&failures](int criterion, const char* name, const Outcome& result,
                            double seconds) {
    if (!result.pass) ++failures;
    std::printf("%s criterion %d: %s (%s; %.1fs)\n", result.pass ? "PASS" : "FAIL", criterion,
                name, result.detail.c_str(), seconds);
    std::fflush(stdout);
  };
  auto run = [&report](int criterion, const char* name, double budget_s, auto&& fn) {
    Clock::time_point t0 = Clock::now();
    Outcome result;
    try {
      result = fn();
    } catch (const std::exception& e) {
      result = {false, fmt("exception: %s", e.what())};
    }
    double seconds = elapsed_s(t0);
    if (result.pass && seconds >= budget_s) {
      result.pass = false;
      result.detail += fmt("; exceeded %.0fs budget", budget_s);
    }
    report(criterion, name, result, seconds);
  };

  run(1, "compute-ratio reproduction", 1, check_compute_ratios);
  run(2, "row-stochasticity", 30, check_row_stochasticity);
  run(3, "layout-only dependence", 30, check_layout_only_dependence);
  run(4, "gradient correctness", 120, check_gradients);
  run(5, "mask equivalence and nesting", 60, check_mask_equivalence);
  run(6, "uniform-layout degeneracy", 10, check_uniform_degeneracy);

  PipelineNumbers first;
  bool pipeline_ok = false;
  std::string pipeline_error;
  try {
    first = run_pipeline("acceptance_run_a");
    pipeline_ok = true;
  } catch (const std::exception& e) {
    pipeline_error = e.what();
  }

  auto pipeline_outcome = [&](auto&& fn) -> Outcome {
    if (!pipeline_ok) return {false, fmt("pipeline failed: %s", pipeline_error.c_str())};
    return fn();
  };

  run(7, "desk-scale MVLM learning", 600, [&] {
    return pipeline_outcome([&]() -> Outcome {
      bool halved = first.final_loss < 0.5 * first.step0;
      return {halved && first.t_pretrain < 600,
              fmt("loss %.3f -> %.3f (%.1f%% of step 0) in %.0fs", first.step0,
                  first.final_loss, 100 * first.final_loss / first.step0, first.t_pretrain)};
    });
  });
  run(8, "layout-ablation direction", 1800, [&] {
    return pipeline_outcome([&]() -> Outcome {
      bool gap = first.ppl_true <= 0.8 * first.ppl_uniform;
      bool between = first.ppl_true <= first.ppl_degraded && first.ppl_degraded <= first.ppl_uniform;
      bool near_true = std::fabs(first.ppl_degraded - first.ppl_true) <= 0.1 * first.ppl_true;
      return {gap && (between || near_true) && first.t_ablations < 1800,
              fmt("ppl true %.2f, degraded %.2f, uniform %.2f in %.0fs", first.ppl_true,
                  first.ppl_degraded, first.ppl_uniform, first.t_ablations)};
    });
  });
  run(9, "layout-analysis learning", 900, [&] {
    return pipeline_outcome([&]() -> Outcome {
      return {first.f1_skim >= 0.80 && first.f1_text < first.f1_skim &&
                  first.t_labeling < 900,
              fmt("macro F1 skim %.3f vs text-only %.3f in %.0fs", first.f1_skim,
                  first.f1_text, first.t_labeling)};
    });
  });
  run(10, "masking preserves boxes and counts", 600, [&] {
    return pipeline_outcome([&]() -> Outcome {
      return {first.boxes_identical && first.counts_ok,
              fmt("%lld batches, %lld pages: boxes %s, counts %s", first.batches,
                  first.pages_masked, first.boxes_identical ? "byte-identical" : "CHANGED",
                  first.counts_ok ? "exact" : "WRONG")};
    });
  });
  run(11, "reference-scale parameter count", 1, check_param_count);
  run(12, "pipeline determinism", 3600, [&] {
    return pipeline_outcome([&]() -> Outcome {
      PipelineNumbers second = run_pipeline("acceptance_run_b");
      std::map<std::string, std::string> tree_a = slurp_tree("acceptance_run_a");
      std::map<std::string, std::string> tree_b = slurp_tree("acceptance_run_b");
      bool same_files = tree_a == tree_b;
      bool same_numbers = first == second;
      return {same_files && same_numbers,
              fmt("%zu files %s; metrics %s", tree_a.size(),
                  same_files ? "byte-identical" : "DIFFER",
                  same_numbers ? "identical" : "DIFFER")};
    });
  });

  if (failures) std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
