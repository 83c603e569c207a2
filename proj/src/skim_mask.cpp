#include "skim/skim_mask.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace skim {

AttentionMask build_mask(const SkimAttentionMatrix& A, int64_t k, MaskPolicy policy) {
  if (k < 1) throw std::invalid_argument("mask k must be >= 1, got " + std::to_string(k));
  int64_t n = A.n();
  Tensor avg = A.head_average();
  AttentionMask mask;
  mask.n = n;
  mask.k = k;
  mask.rows.resize(static_cast<size_t>(n));
  for (int64_t r = 0; r < n; ++r) {
    std::vector<int64_t>& row = mask.rows[static_cast<size_t>(r)];
    if (!A.valid[static_cast<size_t>(r)]) {
      row = {r};
      continue;
    }
    std::vector<int64_t> cand;
    for (int64_t c = 0; c < n; ++c) {
      if (!A.valid[static_cast<size_t>(c)]) continue;
      if (policy.force_self && c == r) continue;
      cand.push_back(c);
    }
    std::stable_sort(cand.begin(), cand.end(), [&](int64_t a, int64_t b) {
      double va = avg.at(r, a), vb = avg.at(r, b);
      if (va != vb) return va > vb;
      return a < b;
    });
    int64_t budget = k;
    if (policy.force_self) {
      row.push_back(r);
      if (policy.self_counts_against_k) budget = k - 1;
    }
    for (int64_t i = 0; i < std::min<int64_t>(budget, static_cast<int64_t>(cand.size())); ++i)
      row.push_back(cand[static_cast<size_t>(i)]);
    std::sort(row.begin(), row.end());
  }
  return mask;
}

std::string mask_to_json(const AttentionMask& mask) {
  nlohmann::json j;
  j["n"] = mask.n;
  j["k"] = mask.k;
  j["rows"] = mask.rows;
  return j.dump();
}

AttentionMask mask_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("mask document is not valid JSON: ") + e.what());
  }
  if (!j.contains("n") || !j.contains("k") || !j.contains("rows"))
    throw std::runtime_error("mask document must contain n, k and rows");
  AttentionMask mask;
  mask.n = j["n"].get<int64_t>();
  mask.k = j["k"].get<int64_t>();
  mask.rows = j["rows"].get<std::vector<std::vector<int64_t>>>();
  if (mask.n < 1) throw std::runtime_error("mask n must be >= 1");
  if (static_cast<int64_t>(mask.rows.size()) != mask.n)
    throw std::runtime_error("mask has " + std::to_string(mask.rows.size()) + " rows, expected " +
                             std::to_string(mask.n));
  for (int64_t r = 0; r < mask.n; ++r) {
    const auto& row = mask.rows[static_cast<size_t>(r)];
    bool has_self = false;
    int64_t prev = -1;
    for (int64_t c : row) {
      if (c < 0 || c >= mask.n)
        throw std::runtime_error("mask row " + std::to_string(r) + " holds out-of-range index " +
                                 std::to_string(c));
      if (c <= prev)
        throw std::runtime_error("mask row " + std::to_string(r) + " is not strictly increasing");
      prev = c;
      if (c == r) has_self = true;
    }
    if (!has_self)
      throw std::runtime_error("mask row " + std::to_string(r) + " is missing its own index");
  }
  return mask;
}

}  // namespace skim
