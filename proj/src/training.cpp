#include "skim/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace skim {

void MaskingPolicy::validate() const {
  if (!(mask_rate > 0.0 && mask_rate < 1.0))
    throw std::invalid_argument("mask rate must lie in (0,1)");
  if (replace_mask < 0 || replace_random < 0 || replace_mask + replace_random > 1.0 + 1e-12)
    throw std::invalid_argument("replacement fractions must be nonnegative and sum to at most 1");
}

MaskedPage apply_mvlm_masking(const PageInput& page, int64_t vocab_size, Rng& rng,
                              const MaskingPolicy& policy) {
  policy.validate();
  MaskedPage out;
  out.input_ids = page.token_ids;
  out.boxes = page.boxes;
  out.targets.assign(page.token_ids.size(), kIgnoreTarget);

  std::vector<int64_t> maskable;
  for (size_t i = 0; i < page.token_ids.size(); ++i)
    if (page.token_ids[i] >= Vocabulary::kNumSpecial) maskable.push_back(static_cast<int64_t>(i));
  out.num_maskable = static_cast<int64_t>(maskable.size());
  if (maskable.empty()) {
    std::cerr << "warning: page with no maskable tokens, skipping\n";
    return out;
  }

  int64_t count = std::max<int64_t>(
      1, std::llround(policy.mask_rate * static_cast<double>(maskable.size())));
  rng.shuffle(maskable);
  maskable.resize(static_cast<size_t>(count));
  std::sort(maskable.begin(), maskable.end());

  for (int64_t pos : maskable) {
    size_t p = static_cast<size_t>(pos);
    out.targets[p] = page.token_ids[p];
    double u = rng.uniform();
    if (u < policy.replace_mask)
      out.input_ids[p] = Vocabulary::kMask;
    else if (u < policy.replace_mask + policy.replace_random)
      out.input_ids[p] = rng.uniform_int(Vocabulary::kNumSpecial, vocab_size - 1);
    // else the original token stays
  }
  out.num_masked = count;
  return out;
}

double perplexity(const Model& model, const std::vector<PageInput>& pages, uint64_t eval_seed,
                  const MaskingPolicy& policy) {
  if (pages.empty()) throw std::invalid_argument("empty evaluation set");
  double total_nll = 0;
  int64_t total_masked = 0;
  for (size_t i = 0; i < pages.size(); ++i) {
    Rng rng(derive_seed(eval_seed, static_cast<uint64_t>(i)));
    MaskedPage masked = apply_mvlm_masking(pages[i], model.encoder.config.vocab_size, rng, policy);
    if (masked.num_masked == 0) continue;
    PageInput input{masked.input_ids, masked.boxes, {}};
    Tensor hidden = encoder_forward(model.encoder, input).hidden;
    Tensor nll = cross_entropy(mvlm_logits(model, hidden), masked.targets, kIgnoreTarget);
    total_nll += nll.item() * static_cast<double>(masked.num_masked);
    total_masked += masked.num_masked;
  }
  if (total_masked == 0) throw std::runtime_error("no masked positions in the evaluation set");
  return std::exp(total_nll / static_cast<double>(total_masked));
}

namespace {

struct PaddedBatch {
  std::vector<PageInput> pages;
  std::vector<std::vector<uint8_t>> valid;
};

PaddedBatch pad_batch(const std::vector<PageInput>& corpus, const std::vector<int64_t>& indices) {
  size_t max_len = 0;
  for (int64_t i : indices)
    max_len = std::max(max_len, corpus[static_cast<size_t>(i)].token_ids.size());
  PaddedBatch batch;
  for (int64_t i : indices) {
    PageInput page = corpus[static_cast<size_t>(i)];
    std::vector<uint8_t> flags(page.token_ids.size(), 1);
    while (page.token_ids.size() < max_len) {
      page.token_ids.push_back(Vocabulary::kPad);
      page.boxes.push_back({0, 0, 0, 0});
      if (!page.label_ids.empty()) page.label_ids.push_back(-1);
      flags.push_back(0);
    }
    batch.pages.push_back(std::move(page));
    batch.valid.push_back(std::move(flags));
  }
  return batch;
}

enum class Objective { mvlm, labels };

std::vector<StepRecord> run_training(Model& model, const std::vector<PageInput>& pages,
                                     const TrainConfig& config, Objective objective,
                                     const StepHook& hook) {
  if (pages.empty()) throw std::invalid_argument("empty training set");
  if (config.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if ((config.steps > 0) == (config.epochs > 0))
    throw std::invalid_argument("set exactly one of steps or epochs");
  if (objective == Objective::labels)
    for (size_t i = 0; i < pages.size(); ++i)
      if (pages[i].label_ids.empty())
        throw std::invalid_argument("page " + std::to_string(i) + " has no labels");

  AdamW optimizer(model.trainables(), config.optim);
  std::vector<StepRecord> records;
  int64_t step = 0;
  int64_t epochs_started = 0;
  std::vector<int64_t> order(pages.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // forces a shuffle before the first batch

  while (true) {
    if (config.steps > 0 && step >= config.steps) break;
    if (cursor >= order.size()) {
      if (config.epochs > 0 && epochs_started >= config.epochs) break;
      Rng shuffle_rng(derive_seed(config.seed, static_cast<uint64_t>(epochs_started), 1));
      shuffle_rng.shuffle(order);
      ++epochs_started;
      cursor = 0;
    }
    std::vector<int64_t> chunk;
    while (cursor < order.size() && static_cast<int64_t>(chunk.size()) < config.batch_size)
      chunk.push_back(order[cursor++]);

    PaddedBatch batch = pad_batch(pages, chunk);
    std::vector<MaskedPage> masked;
    Tensor loss_sum;
    int64_t contributors = 0;
    if (objective == Objective::mvlm) {
      Rng mask_rng(derive_seed(config.seed, static_cast<uint64_t>(step), 2));
      for (size_t b = 0; b < batch.pages.size(); ++b)
        masked.push_back(apply_mvlm_masking(batch.pages[b], model.encoder.config.vocab_size,
                                            mask_rng, config.masking));
      for (size_t b = 0; b < batch.pages.size(); ++b) {
        if (masked[b].num_masked == 0) continue;
        PageInput input{masked[b].input_ids, masked[b].boxes, {}};
        Tensor hidden = encoder_forward(model.encoder, input, nullptr, &batch.valid[b]).hidden;
        Tensor page_loss = cross_entropy(mvlm_logits(model, hidden), masked[b].targets,
                                         kIgnoreTarget);
        loss_sum = loss_sum.defined() ? add(loss_sum, page_loss) : page_loss;
        ++contributors;
      }
    } else {
      for (size_t b = 0; b < batch.pages.size(); ++b) {
        const PageInput& page = batch.pages[b];
        Tensor hidden = encoder_forward(model.encoder, page, nullptr, &batch.valid[b]).hidden;
        Tensor page_loss =
            cross_entropy(classify_tokens(model.classifier, hidden), page.label_ids, -1);
        loss_sum = loss_sum.defined() ? add(loss_sum, page_loss) : page_loss;
        ++contributors;
      }
    }
    if (contributors == 0)
      throw std::runtime_error("no trainable tokens in the batch at step " +
                               std::to_string(step));
    Tensor loss = scale(loss_sum, 1.0 / static_cast<double>(contributors));
    double loss_value = loss.item();
    if (!std::isfinite(loss_value))
      throw std::runtime_error("non-finite loss at step " + std::to_string(step));

    optimizer.zero_grad();
    loss.backward();
    optimizer.step();

    records.push_back({step, loss_value});
    if (hook) {
      StepEvent event;
      event.step = step;
      event.loss = loss_value;
      event.batch = &batch.pages;
      event.masked = objective == Objective::mvlm ? &masked : nullptr;
      event.page_indices = &chunk;
      hook(event);
    }
    ++step;
  }
  return records;
}

}  // namespace

std::vector<StepRecord> pretrain_mvlm(Model& model, const std::vector<PageInput>& pages,
                                      const TrainConfig& config, const StepHook& hook) {
  config.masking.validate();
  return run_training(model, pages, config, Objective::mvlm, hook);
}

std::vector<StepRecord> finetune_labels(Model& model, const std::vector<PageInput>& pages,
                                        const TrainConfig& config, const StepHook& hook) {
  return run_training(model, pages, config, Objective::labels, hook);
}

LabelingMetrics sequence_labeling_metrics(const std::vector<int64_t>& gold,
                                          const std::vector<int64_t>& predictions) {
  if (gold.size() != predictions.size())
    throw std::invalid_argument("gold and predictions differ in length");
  int64_t classes = static_cast<int64_t>(label_names().size());
  std::vector<int64_t> tp(static_cast<size_t>(classes), 0);
  std::vector<int64_t> fp(static_cast<size_t>(classes), 0);
  std::vector<int64_t> fn(static_cast<size_t>(classes), 0);
  int64_t total = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    int64_t g = gold[i];
    if (g < 0) continue;
    int64_t p = predictions[i];
    if (g >= classes) throw std::invalid_argument("unknown label id " + std::to_string(g));
    if (p < 0 || p >= classes) throw std::invalid_argument("unknown label id " + std::to_string(p));
    ++total;
    if (g == p) {
      ++tp[static_cast<size_t>(g)];
    } else {
      ++fp[static_cast<size_t>(p)];
      ++fn[static_cast<size_t>(g)];
    }
  }

  LabelingMetrics m;
  m.total = total;
  for (int64_t c = 0; c < classes; ++c) {
    size_t ci = static_cast<size_t>(c);
    ClassMetrics cm;
    cm.support = tp[ci] + fn[ci];
    int64_t predicted = tp[ci] + fp[ci];
    cm.precision = predicted > 0 ? static_cast<double>(tp[ci]) / static_cast<double>(predicted) : 0;
    cm.recall = cm.support > 0 ? static_cast<double>(tp[ci]) / static_cast<double>(cm.support) : 0;
    cm.f1 = cm.precision + cm.recall > 0
                ? 2 * cm.precision * cm.recall / (cm.precision + cm.recall)
                : 0;
    m.per_class.push_back(cm);
    m.macro_precision += cm.precision;
    m.macro_recall += cm.recall;
    m.macro_f1 += cm.f1;
  }
  m.macro_precision /= static_cast<double>(classes);
  m.macro_recall /= static_cast<double>(classes);
  m.macro_f1 /= static_cast<double>(classes);
  return m;
}

LabelingMetrics evaluate_labeling(const Model& model, const std::vector<PageInput>& pages) {
  if (pages.empty()) throw std::invalid_argument("empty evaluation set");
  std::vector<int64_t> gold, pred;
  for (size_t i = 0; i < pages.size(); ++i) {
    const PageInput& page = pages[i];
    if (page.label_ids.empty())
      throw std::invalid_argument("page " + std::to_string(i) + " has no labels");
    Tensor hidden = encoder_forward(model.encoder, page).hidden;
    Tensor logits = classify_tokens(model.classifier, hidden);
    for (int64_t r = 0; r < logits.rows(); ++r) {
      int64_t best = 0;
      for (int64_t c = 1; c < logits.cols(); ++c)
        if (logits.at(r, c) > logits.at(r, best)) best = c;
      gold.push_back(page.label_ids[static_cast<size_t>(r)]);
      pred.push_back(best);
    }
  }
  return sequence_labeling_metrics(gold, pred);
}

}  // namespace skim
