#pragma once

#include <cstdint>
#include <vector>

#include "skim/tensor.hpp"

namespace skim {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  int64_t warmup_steps = 100;
};

// Decoupled-weight-decay Adam with linear warmup on the learning rate.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig config = {});

  // Applies one update from the gradients currently stored on the params.
  // The effective lr is lr * min(1, step / warmup_steps), so step 0 is a no-op.
  void step();
  void zero_grad();

  int64_t step_count() const { return step_; }
  const AdamWConfig& config() const { return config_; }
  const std::vector<Tensor>& params() const { return params_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<std::vector<double>>& exp_avg() { return m_; }
  std::vector<std::vector<double>>& exp_avg_sq() { return v_; }
  void set_step_count(int64_t step) { step_ = step; }

 private:
  std::vector<Tensor> params_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  int64_t step_ = 0;
};

}  // namespace skim
