#include "leaklock/mlp.hpp"

#include <sstream>

namespace leaklock {

Mlp::Mlp(std::vector<Index> dims) : layer_dims(std::move(dims)) {
  if (layer_dims.size() < 2) throw ConfigError("Mlp needs at least input and output dims");
  for (size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    if (layer_dims[l] < 1 || layer_dims[l + 1] < 1)
      throw ConfigError("Mlp layer dims must be positive");
    weights.emplace_back(Matrix::Zero(layer_dims[l + 1], layer_dims[l]));
    biases.emplace_back(Vector::Zero(layer_dims[l + 1]));
  }
}

void xavier_init(Mlp& model, Rng& rng) {
  for (auto& w : model.weights) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
  }
  for (auto& b : model.biases) b.setZero();
}

MlpGrads MlpGrads::zeros_like(const Mlp& model) {
  MlpGrads g;
  for (const auto& w : model.weights) g.weights.emplace_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : model.biases) g.biases.emplace_back(Vector::Zero(b.size()));
  return g;
}

namespace {

void check_input_dim(const Mlp& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim()) {
    std::ostringstream os;
    os << "input has " << inputs.cols() << " columns, model expects " << model.input_dim();
    throw ShapeError(os.str());
  }
}

void log_softmax_rows(Matrix& logits) {
  for (Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i).array();
    const double m = row.maxCoeff();
    const double lse = m + std::log((row - m).exp().sum());
    row -= lse;
  }
}

}  // namespace

void mlp_forward_cached(const Mlp& model, const Matrix& inputs, ForwardCache& cache) {
  check_input_dim(model, inputs);
  const Index L = model.n_layers();
  cache.activations.assign(1, inputs);
  Matrix z;
  for (Index l = 0; l < L; ++l) {
    z.noalias() = cache.activations.back() * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    if (l + 1 < L) {
      cache.activations.push_back(z.cwiseMax(0.0));
    }
  }
  log_softmax_rows(z);
  cache.log_probs = std::move(z);
}

Matrix mlp_forward(const Mlp& model, const Matrix& inputs) {
  ForwardCache cache;
  mlp_forward_cached(model, inputs, cache);
  return std::move(cache.log_probs);
}

double nll_loss(const Matrix& log_probs, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != log_probs.rows())
    throw ShapeError("label count does not match row count");
  double loss = 0.0;
  for (Index i = 0; i < log_probs.rows(); ++i) loss -= log_probs(i, labels[i]);
  return loss / static_cast<double>(log_probs.rows());
}

BackwardResult mlp_backward_cached(const Mlp& model, const ForwardCache& cache,
                                   std::span<const int> labels, const BackwardOptions& opts) {
  const Index n = cache.log_probs.rows();
  const Index n_classes = model.output_dim();
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw std::domain_error("label out of range");
  }

  BackwardResult result;
  result.loss = nll_loss(cache.log_probs, labels);
  if (opts.param_grads) result.grad_params = MlpGrads::zeros_like(model);

  // Gradient of the mean NLL w.r.t. the logits: (softmax - onehot) / n.
  Matrix delta = cache.log_probs.array().exp();
  for (Index i = 0; i < n; ++i) delta(i, labels[i]) -= 1.0;
  delta /= static_cast<double>(n);

  const Index L = model.n_layers();
  for (Index l = L - 1; l >= 0; --l) {
    if (opts.param_grads) {
      result.grad_params.weights[l].noalias() = delta.transpose() * cache.activations[l];
      result.grad_params.biases[l] = delta.colwise().sum();
    }
    if (l == 0 && !opts.input_grads) break;
    Matrix prev;
    prev.noalias() = delta * model.weights[l];
    if (l > 0) {
      // ReLU mask: post-activation > 0 iff pre-activation > 0.
      prev.array() *= (cache.activations[l].array() > 0.0).cast<double>();
    }
    delta = std::move(prev);
  }
  if (opts.input_grads) result.grad_inputs = std::move(delta);
  return result;
}

BackwardResult mlp_backward(const Mlp& model, const Matrix& inputs,
                            std::span<const int> labels, const BackwardOptions& opts) {
  ForwardCache cache;
  mlp_forward_cached(model, inputs, cache);
  return mlp_backward_cached(model, cache, labels, opts);
}

}  // namespace leaklock
