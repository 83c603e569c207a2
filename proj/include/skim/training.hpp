#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "skim/model.hpp"
#include "skim/optim.hpp"

namespace skim {

// Target value at positions the loss must skip.
constexpr int64_t kIgnoreTarget = -100;

struct MaskingPolicy {
  double mask_rate = 0.15;
  double replace_mask = 0.80;    // -> [MASK]
  double replace_random = 0.10;  // -> uniform non-special token
  // the remaining fraction keeps the original token

  void validate() const;
};

// One page after corruption. Boxes ride along untouched so callers can
// assert they never change.
struct MaskedPage {
  std::vector<int64_t> input_ids;
  std::vector<NormalizedBox> boxes;
  std::vector<int64_t> targets;  // original ids at selected positions, else kIgnoreTarget
  int64_t num_maskable = 0;
  int64_t num_masked = 0;
};

// Picks max(1, round(rate * n_maskable)) non-special positions uniformly
// without replacement, then corrupts each with an 80/10/10 draw. A page with
// nothing maskable comes back unmasked with a warning on stderr.
MaskedPage apply_mvlm_masking(const PageInput& page, int64_t vocab_size, Rng& rng,
                              const MaskingPolicy& policy = {});

// exp(total NLL at masked positions / total masked positions) with masking
// drawn from eval_seed, one substream per page.
double perplexity(const Model& model, const std::vector<PageInput>& pages, uint64_t eval_seed,
                  const MaskingPolicy& policy = {});

struct TrainConfig {
  int64_t steps = 0;   // pretraining length; when 0, epochs drives the loop
  int64_t epochs = 0;
  int64_t batch_size = 8;
  AdamWConfig optim;
  uint64_t seed = 0;
  MaskingPolicy masking;
};

// Per-step view handed to the hook: the padded batch exactly as trained on.
struct StepEvent {
  int64_t step = 0;
  double loss = 0;
  const std::vector<PageInput>* batch = nullptr;        // padded to batch max length
  const std::vector<MaskedPage>* masked = nullptr;      // null for fine-tuning
  const std::vector<int64_t>* page_indices = nullptr;   // into the corpus
};
using StepHook = std::function<void(const StepEvent&)>;

struct StepRecord {
  int64_t step = 0;
  double loss = 0;
};

// Masked-token prediction over shuffled batches, padding each batch to its
// longest page. Deterministic given config.seed; a non-finite loss aborts
// with the step number.
std::vector<StepRecord> pretrain_mvlm(Model& model, const std::vector<PageInput>& pages,
                                      const TrainConfig& config, const StepHook& hook = nullptr);

// Token-label cross entropy over the classifier head, same batching.
std::vector<StepRecord> finetune_labels(Model& model, const std::vector<PageInput>& pages,
                                        const TrainConfig& config, const StepHook& hook = nullptr);

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  int64_t support = 0;
};

struct LabelingMetrics {
  std::vector<ClassMetrics> per_class;  // one entry per label, fixed order
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  int64_t total = 0;  // scored positions
};

// Token-level precision/recall/F1 per label plus the unweighted macro
// average. Positions with gold < 0 are excluded.
LabelingMetrics sequence_labeling_metrics(const std::vector<int64_t>& gold,
                                          const std::vector<int64_t>& predictions);

// Argmax predictions (ties to the lower label id) over every page.
LabelingMetrics evaluate_labeling(const Model& model, const std::vector<PageInput>& pages);

}  // namespace skim
