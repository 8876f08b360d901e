#pragma once

#include <string>

#include "leaklock/baselines.hpp"
#include "leaklock/mlp.hpp"

namespace leaklock {

/// Neural-net attribution baselines over a trained supervised model.
/// Methods: "gradvis"   mean |d log p(y|x) / dx|
///          "saliency"  mean |d p(y|x) / dx|
///          "occlusion1" mean |p(y|x) - p(y|x with x_t zeroed)|
///          "inputxgrad" mean |x_t * d p(y|x) / dx_t|
///          "lrp"       mean |epsilon-rule relevance| from the correct-label
///                      logit (epsilon = 1e-6)
LeakageAssessment attribute(const std::string& method, const Mlp& model,
                            const TraceDataset& dataset);

/// Per-sample epsilon-rule relevance of each input feature, rows aligned with
/// the dataset. Relevance not captured by the inputs is absorbed by biases;
/// per layer, input relevance plus bias absorption equals the layer output
/// relevance up to the epsilon stabilizer.
Matrix lrp_relevance(const Mlp& model, const Matrix& inputs, std::span<const int> labels,
                     double epsilon = 1e-6);

}  // namespace leaklock
