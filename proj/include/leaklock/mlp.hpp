#pragma once

#include <span>
#include <vector>

#include "leaklock/common.hpp"

namespace leaklock {

/// Multilayer perceptron with ReLU hidden activations and a log-softmax
/// output head. Weights are stored per layer as (out x in) matrices.
struct Mlp {
  std::vector<Index> layer_dims;  // [input, hidden..., output]
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  Mlp() = default;
  explicit Mlp(std::vector<Index> dims);

  Index input_dim() const { return layer_dims.front(); }
  Index output_dim() const { return layer_dims.back(); }
  Index n_layers() const { return static_cast<Index>(weights.size()); }
};

/// Uniform fan-based init on every layer (output included); biases zero.
void xavier_init(Mlp& model, Rng& rng);

struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static MlpGrads zeros_like(const Mlp& model);
};

struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] = input, post-ReLU after that
  Matrix log_probs;
};

/// Per-row log-probabilities over the label set. Rows normalize:
/// logsumexp(row) = 0.
Matrix mlp_forward(const Mlp& model, const Matrix& inputs);
void mlp_forward_cached(const Mlp& model, const Matrix& inputs, ForwardCache& cache);

struct BackwardResult {
  double loss = 0.0;  // mean negative log-probability of the correct labels
  MlpGrads grad_params;
  Matrix grad_inputs;
};

struct BackwardOptions {
  bool param_grads = true;
  bool input_grads = true;
};

BackwardResult mlp_backward(const Mlp& model, const Matrix& inputs,
                            std::span<const int> labels,
                            const BackwardOptions& opts = {});

/// Backward pass reusing an existing forward cache.
BackwardResult mlp_backward_cached(const Mlp& model, const ForwardCache& cache,
                                   std::span<const int> labels,
                                   const BackwardOptions& opts = {});

/// Mean negative log-probability of the labels under precomputed log-probs.
double nll_loss(const Matrix& log_probs, std::span<const int> labels);

}  // namespace leaklock
