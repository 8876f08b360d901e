#include "leaklock/optim.hpp"

namespace leaklock {

std::vector<ParamRef> mlp_param_refs(Mlp& model) {
  std::vector<ParamRef> refs;
  for (size_t l = 0; l < model.weights.size(); ++l) {
    refs.push_back({model.weights[l].data(), model.weights[l].size(), true});
    refs.push_back({model.biases[l].data(), model.biases[l].size(), false});
  }
  return refs;
}

std::vector<ParamRef> mlp_grad_refs(MlpGrads& grads) {
  std::vector<ParamRef> refs;
  for (size_t l = 0; l < grads.weights.size(); ++l) {
    refs.push_back({grads.weights[l].data(), grads.weights[l].size(), true});
    refs.push_back({grads.biases[l].data(), grads.biases[l].size(), false});
  }
  return refs;
}

double LrSchedule::rate(long step) const {
  switch (kind) {
    case Kind::Constant:
      return base_rate;
    case Kind::CosineAnnealing: {
      const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
      return base_rate * 0.5 * (1.0 + std::cos(M_PI * std::min(frac, 1.0)));
    }
  }
  return base_rate;
}

LrSchedule::Kind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return LrSchedule::Kind::Constant;
  if (name == "cosine") return LrSchedule::Kind::CosineAnnealing;
  throw ConfigError("unknown schedule kind: " + name);
}

AdamW::AdamW(AdamWConfig cfg, const std::vector<ParamRef>& params) : cfg_(cfg) {
  for (const auto& p : params) {
    m_.emplace_back(Vector::Zero(p.size));
    v_.emplace_back(Vector::Zero(p.size));
  }
}

bool AdamW::step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads) {
  return step(params, grads, cfg_.lr);
}

bool AdamW::step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads,
                 double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ShapeError("optimizer state does not match parameter count");
  for (size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size != params[i].size) throw ShapeError("gradient shape mismatch");
    Eigen::Map<const Vector> g(grads[i].data, grads[i].size);
    if (!g.allFinite()) {
      ++skipped_;
      return false;
    }
  }

  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (size_t i = 0; i < params.size(); ++i) {
    Eigen::Map<Vector> p(params[i].data, params[i].size);
    Eigen::Map<const Vector> g(grads[i].data, grads[i].size);
    if (params[i].decay && cfg_.weight_decay != 0.0) p *= (1.0 - lr * cfg_.weight_decay);
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i].array().matrix() + (1.0 - cfg_.beta2) * g.array().square().matrix();
    p.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
  }
  return true;
}

}  // namespace leaklock
