#pragma once

#include <vector>

#include "leaklock/common.hpp"
#include "leaklock/mlp.hpp"

namespace leaklock {

struct ParamRef {
  double* data = nullptr;
  Index size = 0;
  bool decay = false;  // weight decay applies to weights, not biases
};

std::vector<ParamRef> mlp_param_refs(Mlp& model);
std::vector<ParamRef> mlp_grad_refs(MlpGrads& grads);

struct LrSchedule {
  enum class Kind { Constant, CosineAnnealing };
  Kind kind = Kind::Constant;
  double base_rate = 1e-3;
  long total_steps = 1;

  double rate(long step) const;
};

LrSchedule::Kind schedule_kind_from_string(const std::string& name);

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// AdamW with decoupled weight decay. A step with any non-finite gradient
/// entry is skipped and counted instead of applied.
class AdamW {
 public:
  AdamW() = default;
  AdamW(AdamWConfig cfg, const std::vector<ParamRef>& params);

  /// Returns false when the step was skipped because of non-finite gradients.
  bool step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads);
  bool step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads,
            double lr_override);

  long step_count() const { return step_count_; }
  long skipped_steps() const { return skipped_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  std::vector<Vector> m_, v_;
  long step_count_ = 0;
  long skipped_ = 0;
};

}  // namespace leaklock
