#include "skim/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace skim {

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::step() {
  double warm = config_.warmup_steps > 0
                    ? std::min(1.0, static_cast<double>(step_) / static_cast<double>(config_.warmup_steps))
                    : 1.0;
  double lr_eff = config_.lr * warm;
  double t = static_cast<double>(step_ + 1);
  double bc1 = 1.0 - std::pow(config_.beta1, t);
  double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = params_[pi];
    p.node()->ensure_grad();
    double* w = p.data().data();
    const double* g = p.node()->grad.data();
    double* m = m_[pi].data();
    double* v = v_[pi].data();
    size_t n = m_[pi].size();
    for (size_t i = 0; i < n; ++i) {
      if (!std::isfinite(g[i]))
        throw std::runtime_error("non-finite gradient in parameter " +
                                 (p.name().empty() ? "#" + std::to_string(pi) : p.name()));
    }
    for (size_t i = 0; i < n; ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      w[i] -= lr_eff * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * w[i]);
    }
  }
  ++step_;
}

void AdamW::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace skim
