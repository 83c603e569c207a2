#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <utility>

#include "skim/attention.hpp"
#include "skim/corpus.hpp"
#include "skim/layout.hpp"
#include "skim/model.hpp"
#include "skim/skim_mask.hpp"
#include "skim/tensor.hpp"
#include "skim/training.hpp"

namespace py = pybind11;
using namespace skim;

namespace {

py::array_t<double> matrix_array(const Tensor& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  std::memcpy(out.mutable_data(), t.data().data(), t.data().size() * sizeof(double));
  return out;
}

py::list heads_list(const SkimAttentionMatrix& A) {
  py::list heads;
  for (const Tensor& h : A.heads) heads.append(matrix_array(h));
  return heads;
}

using DenseArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

SkimAttentionMatrix matrix_from_arrays(const std::vector<DenseArray>& heads) {
  SkimAttentionMatrix A;
  for (const DenseArray& arr : heads) {
    py::buffer_info info = arr.request();
    if (info.ndim != 2 || info.shape[0] != info.shape[1])
      throw std::invalid_argument("each head must be a square 2-D array");
    const double* p = arr.data();
    A.heads.push_back(Tensor::from_data({info.shape[0], info.shape[1]},
                                        std::vector<double>(p, p + info.shape[0] * info.shape[1])));
  }
  A.valid.assign(static_cast<size_t>(A.n()), 1);
  return A;
}

std::vector<std::pair<int64_t, double>> record_pairs(const std::vector<StepRecord>& records) {
  std::vector<std::pair<int64_t, double>> out;
  out.reserve(records.size());
  for (const StepRecord& r : records) out.emplace_back(r.step, r.loss);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Layout-only attention: score pages from geometry once, reuse everywhere";

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<>())
      .def(py::init([](double x0, double y0, double x1, double y1) {
             return BoundingBox{x0, y0, x1, y1};
           }),
           py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"))
      .def_readwrite("x0", &BoundingBox::x0)
      .def_readwrite("y0", &BoundingBox::y0)
      .def_readwrite("x1", &BoundingBox::x1)
      .def_readwrite("y1", &BoundingBox::y1)
      .def("__repr__", [](const BoundingBox& b) {
        return py::str("BoundingBox({}, {}, {}, {})").format(b.x0, b.y0, b.x1, b.y1);
      });

  py::class_<NormalizedBox>(m, "NormalizedBox")
      .def(py::init<>())
      .def(py::init([](int64_t x0, int64_t y0, int64_t x1, int64_t y1) {
             return NormalizedBox{x0, y0, x1, y1};
           }),
           py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"))
      .def_readwrite("x0", &NormalizedBox::x0)
      .def_readwrite("y0", &NormalizedBox::y0)
      .def_readwrite("x1", &NormalizedBox::x1)
      .def_readwrite("y1", &NormalizedBox::y1)
      .def(py::self == py::self)
      .def("__repr__", [](const NormalizedBox& b) {
        return py::str("NormalizedBox({}, {}, {}, {})").format(b.x0, b.y0, b.x1, b.y1);
      });

  m.def("normalize_box", &normalize_box, py::arg("box"), py::arg("page_width"),
        py::arg("page_height"), py::arg("token_index") = -1);

  py::class_<ComputeBudget>(m, "ComputeBudget")
      .def(py::init([](int64_t skim_seq_len, int64_t standard_seq_len, int64_t num_skim_attn,
                       int64_t num_standard_attn) {
             return ComputeBudget{skim_seq_len, standard_seq_len, num_skim_attn,
                                  num_standard_attn};
           }),
           py::arg("skim_seq_len") = 0, py::arg("standard_seq_len") = 0,
           py::arg("num_skim_attn") = 0, py::arg("num_standard_attn") = 0)
      .def_readwrite("skim_seq_len", &ComputeBudget::skim_seq_len)
      .def_readwrite("standard_seq_len", &ComputeBudget::standard_seq_len)
      .def_readwrite("num_skim_attn", &ComputeBudget::num_skim_attn)
      .def_readwrite("num_standard_attn", &ComputeBudget::num_standard_attn)
      .def("units", &ComputeBudget::units);

  m.def("compute_ratio", &compute_ratio, py::arg("model"), py::arg("baseline"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("vocab_size", &ModelConfig::vocab_size)
      .def_readwrite("hidden_size", &ModelConfig::hidden_size)
      .def_readwrite("num_layers", &ModelConfig::num_layers)
      .def_readwrite("num_heads", &ModelConfig::num_heads)
      .def_readwrite("layout_hidden", &ModelConfig::layout_hidden)
      .def_readwrite("contextualizer_layers", &ModelConfig::contextualizer_layers)
      .def_readwrite("contextualizer_heads", &ModelConfig::contextualizer_heads)
      .def_readwrite("max_len", &ModelConfig::max_len)
      .def_readwrite("window_w", &ModelConfig::window_w)
      .def_readwrite("mask_top_k", &ModelConfig::mask_top_k)
      .def_readwrite("skim_embeddings", &ModelConfig::skim_embeddings)
      .def_property(
          "layout_mode",
          [](const ModelConfig& c) { return layout_mode_to_string(c.layout_mode); },
          [](ModelConfig& c, const std::string& s) { c.layout_mode = layout_mode_from_string(s); })
      .def_property(
          "attention_kind",
          [](const ModelConfig& c) { return attention_kind_to_string(c.attention_kind); },
          [](ModelConfig& c, const std::string& s) {
            c.attention_kind = attention_kind_from_string(s);
          })
      .def("validate", &ModelConfig::validate)
      .def("param_count", &ModelConfig::param_count)
      .def("to_json", &ModelConfig::to_json)
      .def_static("from_json", &ModelConfig::from_json);

  py::class_<Model>(m, "Model")
      .def("param_count", &Model::param_count)
      .def_property_readonly("config", [](const Model& mo) { return mo.encoder.config; })
      .def(
          "forward",
          [](const Model& mo, std::vector<int64_t> token_ids, std::vector<NormalizedBox> boxes) {
            PageInput page{std::move(token_ids), std::move(boxes), {}};
            ForwardResult r = encoder_forward(mo.encoder, page);
            return py::make_tuple(matrix_array(r.hidden), heads_list(r.skim));
          },
          py::arg("token_ids"), py::arg("boxes"),
          "Hidden states and the per-head skim matrices for one page")
      .def(
          "skim_matrix",
          [](const Model& mo, const std::vector<NormalizedBox>& boxes) {
            if (!mo.encoder.has_layout())
              throw std::invalid_argument("model carries no layout pipeline");
            Tensor lrep =
                layout_representation(boxes, mo.encoder.config.layout_mode, mo.encoder.layout);
            return heads_list(skim_attention(lrep, mo.encoder.skim));
          },
          py::arg("boxes"), "Per-head skim matrices from boxes alone, no token ids involved");

  m.def(
      "init_model",
      [](const ModelConfig& config, uint64_t seed) {
        Rng rng(seed);
        return Model::init(config, rng);
      },
      py::arg("config"), py::arg("seed"));
  m.def("save_model", &save_model, py::arg("dir"), py::arg("model"));
  m.def("load_model", &load_model, py::arg("dir"));

  py::class_<AttentionMask>(m, "AttentionMask")
      .def_readonly("n", &AttentionMask::n)
      .def_readonly("k", &AttentionMask::k)
      .def_readonly("rows", &AttentionMask::rows)
      .def("to_json", [](const AttentionMask& mask) { return mask_to_json(mask); });

  m.def(
      "build_mask",
      [](const std::vector<DenseArray>& heads, int64_t k) {
        return build_mask(matrix_from_arrays(heads), k);
      },
      py::arg("heads"), py::arg("k"),
      "Keep the k strongest keys per query from head-averaged skim scores");
  m.def("mask_from_json", &mask_from_json, py::arg("text"));

  py::class_<DocumentPage>(m, "DocumentPage")
      .def(py::init<>())
      .def_readwrite("doc_id", &DocumentPage::doc_id)
      .def_readwrite("page_width", &DocumentPage::page_width)
      .def_readwrite("page_height", &DocumentPage::page_height)
      .def_readwrite("tokens", &DocumentPage::tokens)
      .def_readwrite("boxes", &DocumentPage::boxes)
      .def_readwrite("labels", &DocumentPage::labels);

  py::class_<GeneratorConfig>(m, "GeneratorConfig")
      .def(py::init<>())
      .def_readwrite("num_pages", &GeneratorConfig::num_pages)
      .def_readwrite("page_width", &GeneratorConfig::page_width)
      .def_readwrite("page_height", &GeneratorConfig::page_height)
      .def_readwrite("min_blocks", &GeneratorConfig::min_blocks)
      .def_readwrite("max_blocks", &GeneratorConfig::max_blocks)
      .def_readwrite("min_block_tokens", &GeneratorConfig::min_block_tokens)
      .def_readwrite("max_block_tokens", &GeneratorConfig::max_block_tokens)
      .def_readwrite("label_vocab_words", &GeneratorConfig::label_vocab_words)
      .def_readwrite("common_vocab_words", &GeneratorConfig::common_vocab_words)
      .def_readwrite("topic_words", &GeneratorConfig::topic_words)
      .def_readwrite("common_prob", &GeneratorConfig::common_prob)
      .def_readwrite("max_page_tokens", &GeneratorConfig::max_page_tokens)
      .def_readwrite("label_vocab_stride", &GeneratorConfig::label_vocab_stride)
      .def_readwrite("disjoint_regions", &GeneratorConfig::disjoint_regions)
      .def_readwrite("shuffle_blocks", &GeneratorConfig::shuffle_blocks)
      .def_readwrite("shuffle_tokens", &GeneratorConfig::shuffle_tokens);

  m.def("generate_pages", &generate_synthetic, py::arg("config"), py::arg("seed"));
  m.def("label_names", &label_names);

  py::class_<SplitRatios>(m, "SplitRatios")
      .def(py::init([](double train, double valid, double test) {
             return SplitRatios{train, valid, test};
           }),
           py::arg("train") = 0.8, py::arg("valid") = 0.1, py::arg("test") = 0.1)
      .def_readwrite("train", &SplitRatios::train)
      .def_readwrite("valid", &SplitRatios::valid)
      .def_readwrite("test", &SplitRatios::test);

  py::class_<CorpusSplit>(m, "CorpusSplit")
      .def_readonly("train", &CorpusSplit::train)
      .def_readonly("valid", &CorpusSplit::valid)
      .def_readonly("test", &CorpusSplit::test);

  m.def(
      "split",
      [](const std::vector<DocumentPage>& pages, uint64_t seed, const SplitRatios& ratios) {
        return split(pages, ratios, seed);
      },
      py::arg("pages"), py::arg("seed"), py::arg("ratios") = SplitRatios{});

  m.def(
      "load_jsonl",
      [](const std::string& path, bool fail_fast) {
        LoadResult r = load_jsonl(path, fail_fast);
        return py::make_tuple(r.pages, r.errors);
      },
      py::arg("path"), py::arg("fail_fast") = true, "(pages, per-line errors) from a corpus file");
  m.def("save_jsonl", &save_jsonl, py::arg("path"), py::arg("pages"));

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_property_readonly("size", &Vocabulary::size)
      .def("id", &Vocabulary::id, py::arg("token"))
      .def("token", &Vocabulary::token, py::arg("id"))
      .def("to_json", &Vocabulary::to_json)
      .def_static("from_json", &Vocabulary::from_json);

  m.def("build_vocab", &build_vocab, py::arg("pages"), py::arg("max_size"));

  py::class_<PageInput>(m, "PageInput")
      .def(py::init<>())
      .def_readwrite("token_ids", &PageInput::token_ids)
      .def_readwrite("boxes", &PageInput::boxes)
      .def_readwrite("label_ids", &PageInput::label_ids);

  m.def("encode_page", &encode_page, py::arg("page"), py::arg("vocab"), py::arg("max_len"));

  py::class_<AdamWConfig>(m, "AdamWConfig")
      .def(py::init<>())
      .def_readwrite("lr", &AdamWConfig::lr)
      .def_readwrite("beta1", &AdamWConfig::beta1)
      .def_readwrite("beta2", &AdamWConfig::beta2)
      .def_readwrite("eps", &AdamWConfig::eps)
      .def_readwrite("weight_decay", &AdamWConfig::weight_decay)
      .def_readwrite("warmup_steps", &AdamWConfig::warmup_steps);

  py::class_<MaskingPolicy>(m, "MaskingPolicy")
      .def(py::init<>())
      .def_readwrite("mask_rate", &MaskingPolicy::mask_rate)
      .def_readwrite("replace_mask", &MaskingPolicy::replace_mask)
      .def_readwrite("replace_random", &MaskingPolicy::replace_random);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("steps", &TrainConfig::steps)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("optim", &TrainConfig::optim)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("masking", &TrainConfig::masking);

  m.def(
      "pretrain_mvlm",
      [](Model& model, const std::vector<PageInput>& pages, const TrainConfig& config) {
        return record_pairs(pretrain_mvlm(model, pages, config));
      },
      py::arg("model"), py::arg("pages"), py::arg("config"),
      py::call_guard<py::gil_scoped_release>(),
      "Masked-token pretraining; returns (step, loss) pairs");
  m.def(
      "finetune_labels",
      [](Model& model, const std::vector<PageInput>& pages, const TrainConfig& config) {
        return record_pairs(finetune_labels(model, pages, config));
      },
      py::arg("model"), py::arg("pages"), py::arg("config"),
      py::call_guard<py::gil_scoped_release>(),
      "Token-label fine-tuning; returns (step, loss) pairs");
  m.def("perplexity", &perplexity, py::arg("model"), py::arg("pages"), py::arg("eval_seed"),
        py::arg("policy") = MaskingPolicy{}, py::call_guard<py::gil_scoped_release>());

  py::class_<ClassMetrics>(m, "ClassMetrics")
      .def_readonly("precision", &ClassMetrics::precision)
      .def_readonly("recall", &ClassMetrics::recall)
      .def_readonly("f1", &ClassMetrics::f1)
      .def_readonly("support", &ClassMetrics::support);

  py::class_<LabelingMetrics>(m, "LabelingMetrics")
      .def_readonly("per_class", &LabelingMetrics::per_class)
      .def_readonly("macro_precision", &LabelingMetrics::macro_precision)
      .def_readonly("macro_recall", &LabelingMetrics::macro_recall)
      .def_readonly("macro_f1", &LabelingMetrics::macro_f1)
      .def_readonly("total", &LabelingMetrics::total);

  m.def("evaluate_labeling", &evaluate_labeling, py::arg("model"), py::arg("pages"));
}
