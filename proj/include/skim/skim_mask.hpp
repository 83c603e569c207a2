#pragma once

#include <string>

#include "skim/attention.hpp"

namespace skim {

// Whether the query's own index is forced into its row, and whether that
// forced slot consumes one of the k picks. Defaults keep masked softmax
// well-defined down to k=1.
struct MaskPolicy {
  bool force_self = true;
  bool self_counts_against_k = true;
};

// Head-averages A and keeps, per query, the k highest-scoring valid keys.
// Ties break toward the lower index; padded keys are never selected; rows of
// padded queries reduce to the self index. Pure selection, no gradients.
AttentionMask build_mask(const SkimAttentionMatrix& A, int64_t k, MaskPolicy policy = {});

// {"n": int, "k": int, "rows": [[indices]...]} with rows sorted ascending.
std::string mask_to_json(const AttentionMask& mask);
AttentionMask mask_from_json(const std::string& text);

}  // namespace skim
