#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "skim/training.hpp"

using namespace skim;

namespace {

PageInput fixture_page(int64_t maskable) {
  PageInput page;
  page.token_ids = {Vocabulary::kCls};
  page.boxes.push_back({0, 0, 0, 0});
  for (int64_t i = 0; i < maskable; ++i) {
    page.token_ids.push_back(4 + i);
    page.boxes.push_back({10 * i, 5, 10 * i + 8, 20});
  }
  return page;
}

ModelConfig train_config() {
  ModelConfig c;
  c.vocab_size = 64;
  c.hidden_size = 16;
  c.num_layers = 1;
  c.num_heads = 2;
  c.layout_hidden = 16;
  c.contextualizer_layers = 1;
  c.contextualizer_heads = 2;
  c.max_len = 32;
  return c;
}

std::vector<PageInput> small_corpus(int64_t pages, int64_t vocab, uint64_t seed) {
  std::vector<PageInput> out;
  Rng rng(seed);
  for (int64_t p = 0; p < pages; ++p) {
    PageInput page;
    page.token_ids.push_back(Vocabulary::kCls);
    page.boxes.push_back({0, 0, 0, 0});
    page.label_ids.push_back(-1);
    int64_t n = rng.uniform_int(6, 12);
    for (int64_t i = 0; i < n; ++i) {
      page.token_ids.push_back(rng.uniform_int(4, vocab - 1));
      int64_t x = rng.uniform_int(0, 900);
      int64_t y = rng.uniform_int(0, 900);
      page.boxes.push_back({x, y, x + rng.uniform_int(10, 90), y + rng.uniform_int(10, 40)});
      page.label_ids.push_back(rng.uniform_int(0, 11));
    }
    out.push_back(std::move(page));
  }
  return out;
}

void zero_params(Model& m) {
  for (auto& [name, t] : m.named_params())
    std::fill(t.data().begin(), t.data().end(), 0.0);
}

}  // namespace

TEST_CASE("masking selects the deterministic count and spares boxes") {
  PageInput page = fixture_page(20);
  Rng rng(1);
  MaskedPage m = apply_mvlm_masking(page, 64, rng);
  CHECK(m.num_maskable == 20);
  CHECK(m.num_masked == 3);  // round(0.15 * 20)
  CHECK(m.boxes == page.boxes);
  CHECK(m.targets[0] == kIgnoreTarget);  // [CLS] is never maskable
  int64_t selected = 0;
  for (size_t i = 0; i < m.targets.size(); ++i)
    if (m.targets[i] != kIgnoreTarget) {
      ++selected;
      CHECK(m.targets[i] == page.token_ids[i]);
      CHECK(page.token_ids[i] >= Vocabulary::kNumSpecial);
    }
  CHECK(selected == 3);

  // One selection even on the shortest page.
  PageInput tiny = fixture_page(1);
  Rng trng(2);
  MaskedPage tm = apply_mvlm_masking(tiny, 64, trng);
  CHECK(tm.num_masked == 1);

  Rng r7(7);
  CHECK(apply_mvlm_masking(fixture_page(7), 64, r7).num_masked == 1);  // round(1.05)
  Rng r17(7);
  CHECK(apply_mvlm_masking(fixture_page(17), 64, r17).num_masked == 3);  // round(2.55)
}

TEST_CASE("masking replays a frozen trace") {
  PageInput page = fixture_page(17);
  Rng rng(17);
  MaskedPage m = apply_mvlm_masking(page, 32, rng);
  REQUIRE(m.num_masked == 3);
  CHECK(m.targets[2] == 5);
  CHECK(m.input_ids[2] == 5);  // kept
  CHECK(m.targets[6] == 9);
  CHECK(m.input_ids[6] == Vocabulary::kMask);
  CHECK(m.targets[8] == 11);
  CHECK(m.input_ids[8] == 22);  // random replacement
  for (size_t i = 0; i < m.targets.size(); ++i)
    if (i != 2 && i != 6 && i != 8) {
      CHECK(m.targets[i] == kIgnoreTarget);
      CHECK(m.input_ids[i] == page.token_ids[i]);
    }

  Rng again(17);
  MaskedPage r = apply_mvlm_masking(page, 32, again);
  CHECK(r.input_ids == m.input_ids);
  CHECK(r.targets == m.targets);
}

TEST_CASE("pages without maskable tokens pass through with a warning") {
  PageInput page;
  page.token_ids = {Vocabulary::kCls};
  page.boxes.push_back({0, 0, 0, 0});
  Rng rng(3);
  MaskedPage m = apply_mvlm_masking(page, 64, rng);
  CHECK(m.num_maskable == 0);
  CHECK(m.num_masked == 0);
  CHECK(m.input_ids == page.token_ids);
}

TEST_CASE("masking policy is validated") {
  PageInput page = fixture_page(5);
  Rng rng(4);
  MaskingPolicy bad;
  bad.mask_rate = 0;
  CHECK_THROWS_AS(apply_mvlm_masking(page, 64, rng, bad), std::invalid_argument);
  bad = MaskingPolicy{};
  bad.replace_mask = 0.8;
  bad.replace_random = 0.3;
  CHECK_THROWS_AS(apply_mvlm_masking(page, 64, rng, bad), std::invalid_argument);
}

TEST_CASE("uniform and near-perfect models bound perplexity") {
  ModelConfig c = train_config();
  c.vocab_size = 100;
  Rng rng(5);
  Model m = Model::init(c, rng);
  zero_params(m);
  std::vector<PageInput> pages = {fixture_page(10), fixture_page(6)};
  double ppl = perplexity(m, pages, 99);
  CHECK(std::fabs(ppl - 100.0) < 1e-9 * 100.0);

  // One usable token in the vocabulary and a bias spike on it: every masked
  // position is predicted perfectly.
  ModelConfig pc = train_config();
  pc.vocab_size = 5;
  Rng prng(6);
  Model perfect = Model::init(pc, prng);
  zero_params(perfect);
  perfect.mvlm_bias.data()[4] = 1000.0;
  PageInput only4;
  only4.token_ids = {Vocabulary::kCls, 4, 4, 4, 4, 4, 4, 4};
  for (int i = 0; i < 8; ++i) only4.boxes.push_back({i * 10, 0, i * 10 + 5, 10});
  double one = perplexity(perfect, {only4}, 99);
  CHECK(std::fabs(one - 1.0) < 1e-9);

  CHECK_THROWS_AS(perplexity(m, {}, 1), std::invalid_argument);
  PageInput bare;
  bare.token_ids = {Vocabulary::kCls};
  bare.boxes.push_back({0, 0, 0, 0});
  CHECK_THROWS_AS(perplexity(m, {bare}, 1), std::runtime_error);
}

TEST_CASE("perplexity accumulates per-page nll") {
  ModelConfig c = train_config();
  Rng rng(7);
  Model m = Model::init(c, rng);
  std::vector<PageInput> pages = {fixture_page(9), fixture_page(13)};

  double total = 0;
  int64_t count = 0;
  for (size_t i = 0; i < pages.size(); ++i) {
    Rng page_rng(derive_seed(31, static_cast<uint64_t>(i)));
    MaskedPage masked = apply_mvlm_masking(pages[i], c.vocab_size, page_rng);
    PageInput input{masked.input_ids, masked.boxes, {}};
    Tensor hidden = encoder_forward(m.encoder, input).hidden;
    total += cross_entropy(mvlm_logits(m, hidden), masked.targets, kIgnoreTarget).item() *
             static_cast<double>(masked.num_masked);
    count += masked.num_masked;
  }
  CHECK(perplexity(m, pages, 31) == doctest::Approx(std::exp(total / count)).epsilon(1e-12));
}

TEST_CASE("pretraining is deterministic and learns") {
  std::vector<PageInput> corpus = small_corpus(10, 64, 11);
  TrainConfig tc;
  tc.steps = 30;
  tc.batch_size = 4;
  tc.seed = 5;
  tc.optim.lr = 1e-3;
  tc.optim.warmup_steps = 10;

  Rng rng(8);
  Model a = Model::init(train_config(), rng);
  std::vector<StepRecord> curve_a = pretrain_mvlm(a, corpus, tc);
  REQUIRE(curve_a.size() == 30);

  Rng rng_b(8);
  Model b = Model::init(train_config(), rng_b);
  std::vector<StepRecord> curve_b = pretrain_mvlm(b, corpus, tc);
  for (size_t i = 0; i < curve_a.size(); ++i) CHECK(curve_a[i].loss == curve_b[i].loss);
  NamedTensors pa = a.named_params(), pb = b.named_params();
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].second.data() == pb[i].second.data());

  double early = (curve_a[0].loss + curve_a[1].loss + curve_a[2].loss) / 3;
  double late = (curve_a[27].loss + curve_a[28].loss + curve_a[29].loss) / 3;
  CHECK(late < early);
}

TEST_CASE("zero learning rate freezes parameters") {
  std::vector<PageInput> corpus = small_corpus(4, 64, 12);
  TrainConfig tc;
  tc.steps = 1;
  tc.batch_size = 2;
  tc.optim.lr = 0;

  Rng rng(9);
  Model m = Model::init(train_config(), rng);
  std::vector<std::vector<double>> before;
  for (auto& [name, t] : m.named_params()) before.push_back(t.data());
  pretrain_mvlm(m, corpus, tc);
  size_t i = 0;
  for (auto& [name, t] : m.named_params()) CHECK(t.data() == before[i++]);
}

TEST_CASE("training surfaces non-finite losses with the step") {
  std::vector<PageInput> corpus = small_corpus(4, 64, 13);
  TrainConfig tc;
  tc.steps = 2;
  tc.batch_size = 2;
  Rng rng(10);
  Model m = Model::init(train_config(), rng);
  m.encoder.token_embedding.data()[5] = std::nan("");
  CHECK_THROWS_WITH_AS(pretrain_mvlm(m, corpus, tc), doctest::Contains("step 0"),
                       std::runtime_error);
}

TEST_CASE("batches pad to their longest page and keep boxes intact") {
  std::vector<PageInput> corpus = small_corpus(7, 64, 14);
  TrainConfig tc;
  tc.steps = 4;
  tc.batch_size = 3;
  tc.seed = 21;

  Rng rng(11);
  Model m = Model::init(train_config(), rng);
  int64_t calls = 0;
  pretrain_mvlm(m, corpus, tc, [&](const StepEvent& e) {
    ++calls;
    CHECK(e.step == calls - 1);
    REQUIRE(e.batch);
    REQUIRE(e.masked);
    REQUIRE(e.page_indices);
    size_t width = 0;
    for (const PageInput& p : *e.batch) width = std::max(width, p.token_ids.size());
    for (size_t b = 0; b < e.batch->size(); ++b) {
      const PageInput& padded = (*e.batch)[b];
      const PageInput& source = corpus[static_cast<size_t>((*e.page_indices)[b])];
      CHECK(padded.token_ids.size() == width);
      // the original page survives as a prefix, padding after
      for (size_t i = 0; i < padded.token_ids.size(); ++i) {
        if (i < source.token_ids.size()) {
          CHECK(padded.token_ids[i] == source.token_ids[i]);
          CHECK(padded.boxes[i] == source.boxes[i]);
        } else {
          CHECK(padded.token_ids[i] == Vocabulary::kPad);
          CHECK(padded.boxes[i] == NormalizedBox{0, 0, 0, 0});
        }
      }
      const MaskedPage& masked = (*e.masked)[b];
      CHECK(masked.boxes == padded.boxes);
      int64_t n_maskable = static_cast<int64_t>(source.token_ids.size()) - 1;  // minus [CLS]
      CHECK(masked.num_maskable == n_maskable);
      CHECK(masked.num_masked ==
            std::max<int64_t>(1, std::llround(0.15 * static_cast<double>(n_maskable))));
    }
  });
  CHECK(calls == 4);
}

TEST_CASE("epoch mode visits every page once per epoch") {
  std::vector<PageInput> corpus = small_corpus(7, 64, 15);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 3;
  tc.seed = 33;

  Rng rng(12);
  Model m = Model::init(train_config(), rng);
  std::vector<int64_t> visited;
  std::vector<StepRecord> curve = finetune_labels(m, corpus, tc, [&](const StepEvent& e) {
    for (int64_t i : *e.page_indices) visited.push_back(i);
  });
  CHECK(curve.size() == 6);  // ceil(7/3) steps per epoch, twice
  REQUIRE(visited.size() == 14);
  std::multiset<int64_t> first(visited.begin(), visited.begin() + 7);
  std::multiset<int64_t> second(visited.begin() + 7, visited.end());
  std::multiset<int64_t> everyone{0, 1, 2, 3, 4, 5, 6};
  CHECK(first == everyone);
  CHECK(second == everyone);

  TrainConfig bad = tc;
  bad.steps = 5;  // both modes set
  CHECK_THROWS_AS(finetune_labels(m, corpus, bad), std::invalid_argument);
  TrainConfig neither;
  neither.batch_size = 2;
  CHECK_THROWS_AS(finetune_labels(m, corpus, neither), std::invalid_argument);

  std::vector<PageInput> unlabeled = {fixture_page(5)};
  CHECK_THROWS_AS(finetune_labels(m, unlabeled, tc), std::invalid_argument);
}

TEST_CASE("metrics are exact on hand counts") {
  int64_t classes = static_cast<int64_t>(label_names().size());
  REQUIRE(classes == 12);

  std::vector<int64_t> gold, pred;
  for (int64_t c = 0; c < classes; ++c) {
    gold.push_back(c);
    pred.push_back(c);
  }
  LabelingMetrics perfect = sequence_labeling_metrics(gold, pred);
  CHECK(perfect.total == 12);
  CHECK(perfect.macro_f1 == 1.0);
  CHECK(perfect.macro_precision == 1.0);
  for (const ClassMetrics& cm : perfect.per_class) {
    CHECK(cm.f1 == 1.0);
    CHECK(cm.support == 1);
  }

  // Everything predicted as class 2 against uniform gold.
  std::vector<int64_t> all2(gold.size(), 2);
  LabelingMetrics skewed = sequence_labeling_metrics(gold, all2);
  CHECK(skewed.per_class[2].recall == 1.0);
  CHECK(skewed.per_class[2].precision == doctest::Approx(1.0 / 12).epsilon(1e-12));
  for (int64_t c = 0; c < classes; ++c)
    if (c != 2) CHECK(skewed.per_class[static_cast<size_t>(c)].f1 == 0.0);

  // 50 tokens, three populated classes with a known confusion pattern.
  std::vector<int64_t> g50, p50;
  auto feed = [&](int64_t g, int64_t p, int64_t reps) {
    for (int64_t i = 0; i < reps; ++i) {
      g50.push_back(g);
      p50.push_back(p);
    }
  };
  feed(0, 0, 16);
  feed(0, 1, 4);
  feed(1, 1, 10);
  feed(1, 2, 5);
  feed(2, 2, 12);
  feed(2, 0, 3);
  LabelingMetrics fifty = sequence_labeling_metrics(g50, p50);
  CHECK(fifty.total == 50);
  CHECK(fifty.per_class[0].precision == doctest::Approx(16.0 / 19).epsilon(1e-12));
  CHECK(fifty.per_class[0].recall == doctest::Approx(16.0 / 20).epsilon(1e-12));
  CHECK(fifty.per_class[1].precision == doctest::Approx(10.0 / 14).epsilon(1e-12));
  CHECK(fifty.per_class[1].recall == doctest::Approx(10.0 / 15).epsilon(1e-12));
  CHECK(fifty.per_class[2].precision == doctest::Approx(12.0 / 17).epsilon(1e-12));
  CHECK(fifty.per_class[2].recall == doctest::Approx(12.0 / 15).epsilon(1e-12));
  CHECK(fifty.per_class[3].support == 0);
  double p0 = 16.0 / 19, r0 = 16.0 / 20;
  CHECK(fifty.per_class[0].f1 == doctest::Approx(2 * p0 * r0 / (p0 + r0)).epsilon(1e-12));
  double macro_p = (16.0 / 19 + 10.0 / 14 + 12.0 / 17) / 12;
  CHECK(fifty.macro_precision == doctest::Approx(macro_p).epsilon(1e-12));

  // Negative gold is excluded; bad ids are named errors.
  LabelingMetrics dropped = sequence_labeling_metrics({-1, 0, -1, 1}, {5, 0, 5, 1});
  CHECK(dropped.total == 2);
  CHECK_THROWS_AS(sequence_labeling_metrics({0, 1}, {0}), std::invalid_argument);
  CHECK_THROWS_WITH_AS(sequence_labeling_metrics({12}, {0}), doctest::Contains("12"),
                       std::invalid_argument);
  CHECK_THROWS_AS(sequence_labeling_metrics({0}, {-3}), std::invalid_argument);
}

TEST_CASE("labeling evaluation matches a manual argmax sweep") {
  ModelConfig c = train_config();
  Rng rng(13);
  Model m = Model::init(c, rng);
  std::vector<PageInput> pages = small_corpus(3, 64, 16);

  std::vector<int64_t> gold, pred;
  for (const PageInput& page : pages) {
    Tensor logits = classify_tokens(m.classifier, encoder_forward(m.encoder, page).hidden);
    for (int64_t r = 0; r < logits.rows(); ++r) {
      int64_t best = 0;
      for (int64_t col = 1; col < logits.cols(); ++col)
        if (logits.at(r, col) > logits.at(r, best)) best = col;
      gold.push_back(page.label_ids[static_cast<size_t>(r)]);
      pred.push_back(best);
    }
  }
  LabelingMetrics expect = sequence_labeling_metrics(gold, pred);
  LabelingMetrics got = evaluate_labeling(m, pages);
  CHECK(got.total == expect.total);
  CHECK(got.macro_f1 == expect.macro_f1);
  for (size_t i = 0; i < got.per_class.size(); ++i) {
    CHECK(got.per_class[i].precision == expect.per_class[i].precision);
    CHECK(got.per_class[i].recall == expect.per_class[i].recall);
  }

  // Tied logits resolve to the lowest label id.
  Model flat = Model::init(c, rng);
  zero_params(flat);
  LabelingMetrics zeroed = evaluate_labeling(flat, pages);
  int64_t gold0 = 0, scored = 0;
  for (const PageInput& page : pages)
    for (int64_t g : page.label_ids)
      if (g >= 0) {
        ++scored;
        if (g == 0) ++gold0;
      }
  CHECK(zeroed.per_class[0].recall == 1.0);
  CHECK(zeroed.per_class[0].precision ==
        doctest::Approx(static_cast<double>(gold0) / scored).epsilon(1e-12));
}

TEST_CASE("padded and plain forwards agree on real rows") {
  ModelConfig c = train_config();
  Rng rng(14);
  Model m = Model::init(c, rng);
  PageInput page = fixture_page(6);

  PageInput padded = page;
  std::vector<uint8_t> valid(page.token_ids.size(), 1);
  for (int i = 0; i < 3; ++i) {
    padded.token_ids.push_back(Vocabulary::kPad);
    padded.boxes.push_back({0, 0, 0, 0});
    valid.push_back(0);
  }

  Tensor plain = encoder_forward(m.encoder, page).hidden;
  Tensor via_pad = encoder_forward(m.encoder, padded, nullptr, &valid).hidden;
  for (int64_t r = 0; r < plain.rows(); ++r)
    for (int64_t col = 0; col < plain.cols(); ++col)
      CHECK(plain.at(r, col) == via_pad.at(r, col));

  // The same holds for the text host.
  ModelConfig sc = train_config();
  sc.attention_kind = AttentionKind::standard;
  Rng srng(14);
  Model s = Model::init(sc, srng);
  Tensor splain = encoder_forward(s.encoder, page).hidden;
  Tensor spad = encoder_forward(s.encoder, padded, nullptr, &valid).hidden;
  for (int64_t r = 0; r < splain.rows(); ++r)
    for (int64_t col = 0; col < splain.cols(); ++col)
      CHECK(splain.at(r, col) == spad.at(r, col));
}
