#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "skim/layout.hpp"

using namespace skim;

namespace {

LayoutEmbeddingParams tiny_params(uint64_t seed, int64_t d = 4) {
  Rng rng(seed);
  LayoutConfig cfg;
  cfg.d_layout = d;
  cfg.max_len = 8;
  cfg.contextualizer_heads = 2;
  return LayoutEmbeddingParams::init(cfg, rng);
}

}  // namespace

TEST_CASE("normalize_box scales rounds and clamps") {
  NormalizedBox a = normalize_box({500, 250, 1000, 500}, 2000, 1000);
  CHECK(a == NormalizedBox{250, 250, 500, 500});

  NormalizedBox full = normalize_box({0, 0, 1234, 777}, 1234, 777);
  CHECK(full == NormalizedBox{0, 0, 1000, 1000});

  NormalizedBox c = normalize_box({0, 0, 7, 7}, 640, 480);
  CHECK(c == NormalizedBox{0, 0, 11, 15});

  // half-up: 1/2000 of the page scales to exactly 0.5
  CHECK(normalize_box({1, 0, 1, 0}, 2000, 100).x0 == 1);

  // coordinates beyond the page clamp instead of overflowing the tables
  CHECK(normalize_box({0, 0, 3000, 50}, 2000, 100).x1 == 1000);

  CHECK_THROWS_WITH_AS(normalize_box({10, 0, 5, 0}, 100, 100, 7), doctest::Contains("token 7"),
                       std::invalid_argument);
  CHECK_THROWS_AS(normalize_box({0, 0, 1, 1}, 0, 100), std::invalid_argument);
}

TEST_CASE("embed_layout sums six table rows") {
  LayoutEmbeddingParams p = tiny_params(7);
  std::vector<NormalizedBox> boxes = {{1, 2, 3, 5}};
  Tensor e = embed_layout(boxes, p);
  REQUIRE(e.shape() == Shape{1, 4});
  for (int64_t c = 0; c < 4; ++c) {
    double expect = p.table_x.at(1, c) + p.table_y.at(2, c) + p.table_x.at(3, c) +
                    p.table_y.at(5, c) + p.table_w.at(2, c) + p.table_h.at(3, c);
    CHECK(e.at(0, c) == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("embed_layout with zero tables gives zero vectors") {
  LayoutEmbeddingParams p = tiny_params(8);
  for (Tensor* t : {&p.table_x, &p.table_y, &p.table_w, &p.table_h})
    std::fill(t->data().begin(), t->data().end(), 0.0);
  Tensor e = embed_layout({{10, 20, 30, 40}, {0, 0, 1000, 1000}}, p);
  for (double v : e.data()) CHECK(v == 0.0);
}

TEST_CASE("identical boxes embed identically") {
  LayoutEmbeddingParams p = tiny_params(9);
  Tensor e = embed_layout({{5, 6, 7, 8}, {1, 1, 2, 2}, {5, 6, 7, 8}}, p);
  for (int64_t c = 0; c < 4; ++c) CHECK(e.at(0, c) == e.at(2, c));
}

TEST_CASE("embedding is equivariant under box reordering") {
  LayoutEmbeddingParams p = tiny_params(10);
  std::vector<NormalizedBox> boxes = {{1, 2, 3, 4}, {9, 9, 20, 30}, {0, 0, 1000, 1000}};
  std::vector<NormalizedBox> perm = {boxes[2], boxes[0], boxes[1]};
  Tensor a = embed_layout(boxes, p);
  Tensor b = embed_layout(perm, p);
  for (int64_t c = 0; c < 4; ++c) {
    CHECK(b.at(0, c) == a.at(2, c));
    CHECK(b.at(1, c) == a.at(0, c));
    CHECK(b.at(2, c) == a.at(1, c));
  }
}

TEST_CASE("layout mode transforms") {
  std::vector<NormalizedBox> boxes = {{100, 200, 300, 400}, {0, 0, 10, 10}};
  auto degraded = apply_layout_mode_boxes(boxes, LayoutMode::degraded);
  CHECK(degraded[0] == NormalizedBox{200, 300, 200, 300});
  CHECK(degraded[1] == NormalizedBox{5, 5, 5, 5});

  auto uniform = apply_layout_mode_boxes(boxes, LayoutMode::uniform);
  for (const auto& b : uniform) CHECK(b == NormalizedBox{0, 0, 1000, 1000});

  auto kept = apply_layout_mode_boxes(boxes, LayoutMode::true_layout);
  CHECK(kept == boxes);
}

TEST_CASE("one_d_position mode reads the position table") {
  LayoutEmbeddingParams p = tiny_params(11);
  std::vector<NormalizedBox> boxes = {{1, 1, 2, 2}, {3, 3, 4, 4}, {5, 5, 6, 6}};
  Tensor r = layout_representation(boxes, LayoutMode::one_d_position, p);
  for (int64_t i = 0; i < 3; ++i)
    for (int64_t c = 0; c < 4; ++c) CHECK(r.at(i, c) == p.position_table.at(i, c));
}

TEST_CASE("contextualizer with zero projections reduces to the norm path") {
  LayoutEmbeddingParams p = tiny_params(12);
  for (EncoderLayer& l : p.contextualizer) {
    for (Tensor* t : {&l.attn.w_q, &l.attn.w_k, &l.attn.w_v, &l.attn.w_o, &l.ff_w1, &l.ff_w2})
      std::fill(t->data().begin(), t->data().end(), 0.0);
  }
  Rng rng(13);
  Tensor x = Tensor::randn({3, 4}, rng, 1.0);
  Tensor y = contextualize(x, p);
  Tensor oracle = layer_norm(x, p.ctx_final_g, p.ctx_final_b);
  for (size_t i = 0; i < y.data().size(); ++i)
    CHECK(y.data()[i] == doctest::Approx(oracle.data()[i]).epsilon(1e-15));
}

TEST_CASE("identical inputs contextualize identically") {
  LayoutEmbeddingParams p = tiny_params(14);
  std::vector<double> row = {0.1, -0.4, 0.7, 0.2};
  std::vector<double> data;
  for (int i = 0; i < 5; ++i) data.insert(data.end(), row.begin(), row.end());
  Tensor x = Tensor::from_data({5, 4}, data);
  Tensor y = contextualize(x, p);
  for (int64_t i = 1; i < 5; ++i)
    for (int64_t c = 0; c < 4; ++c) CHECK(y.at(i, c) == y.at(0, c));
}

TEST_CASE("contextualizer accepts a single token") {
  LayoutEmbeddingParams p = tiny_params(15);
  Rng rng(16);
  Tensor x = Tensor::randn({1, 4}, rng, 1.0);
  Tensor y = contextualize(x, p);
  CHECK(y.shape() == Shape{1, 4});
  for (double v : y.data()) CHECK(std::isfinite(v));
}

TEST_CASE("uniform mode gives identical embeddings before and after contextualizing") {
  LayoutEmbeddingParams p = tiny_params(17);
  std::vector<NormalizedBox> boxes = {{1, 2, 3, 4}, {500, 600, 700, 800}, {9, 9, 9, 9}};
  Tensor pre = embed_layout(apply_layout_mode_boxes(boxes, LayoutMode::uniform), p);
  for (int64_t i = 1; i < 3; ++i)
    for (int64_t c = 0; c < 4; ++c) CHECK(pre.at(i, c) == pre.at(0, c));
  Tensor post = contextualize(pre, p);
  for (int64_t i = 1; i < 3; ++i)
    for (int64_t c = 0; c < 4; ++c) CHECK(post.at(i, c) == post.at(0, c));
}

TEST_CASE("degraded mode collapses width and height to bucket zero") {
  std::vector<NormalizedBox> boxes = {{1, 2, 999, 1000}, {0, 0, 13, 1}};
  for (const auto& b : apply_layout_mode_boxes(boxes, LayoutMode::degraded)) {
    CHECK(b.x1 - b.x0 == 0);
    CHECK(b.y1 - b.y0 == 0);
  }
}

TEST_CASE("gradients reach all four tables") {
  LayoutEmbeddingParams p = tiny_params(18, 2);
  std::vector<NormalizedBox> boxes = {{1, 2, 3, 5}, {0, 0, 4, 4}};
  auto f = [&]() {
    Tensor e = embed_layout(boxes, p);
    return mean_all(mul(e, e));
  };
  CHECK(grad_check(f, {p.table_x, p.table_y, p.table_w, p.table_h}) < 1e-4);
}

TEST_CASE("layout mode names round trip") {
  for (LayoutMode m : {LayoutMode::true_layout, LayoutMode::one_d_position, LayoutMode::uniform,
                       LayoutMode::degraded, LayoutMode::contextualized})
    CHECK(layout_mode_from_string(layout_mode_to_string(m)) == m);
  CHECK_THROWS_AS(layout_mode_from_string("bogus"), std::invalid_argument);
}
