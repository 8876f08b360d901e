#include "leaklock/attribution.hpp"

#include <cmath>

namespace leaklock {

namespace {

// Per-row gradient of log p(y_i | x_i) wrt the input. mlp_backward's input
// gradient is for the mean NLL, so each row is -(1/n) of what we want.
Matrix log_prob_input_grads(const Mlp& model, const ForwardCache& cache,
                            std::span<const int> labels) {
    BackwardOptions opts;
    opts.param_grads = false;
    BackwardResult back = mlp_backward_cached(model, cache, labels, opts);
    return -static_cast<double>(cache.activations.front().rows()) * back.grad_inputs;
}

Vector correct_probs(const Matrix& log_probs, std::span<const int> labels) {
    Vector p(log_probs.rows());
    for (Index r = 0; r < log_probs.rows(); ++r) p[r] = std::exp(log_probs(r, labels[r]));
    return p;
}

LeakageAssessment gradvis(const Mlp& model, const TraceDataset& ds) {
    ForwardCache cache;
    mlp_forward_cached(model, ds.traces, cache);
    const Matrix g = log_prob_input_grads(model, cache, ds.labels);
    LeakageAssessment out;
    out.scores = g.cwiseAbs().colwise().mean().transpose();
    return out;
}

LeakageAssessment saliency(const Mlp& model, const TraceDataset& ds, bool times_input) {
    ForwardCache cache;
    mlp_forward_cached(model, ds.traces, cache);
    Matrix g = log_prob_input_grads(model, cache, ds.labels);
    const Vector p = correct_probs(cache.log_probs, ds.labels);
    g.array().colwise() *= p.array();  // d p / dx = p * d log p / dx
    if (times_input) g.array() *= ds.traces.array();
    LeakageAssessment out;
    out.scores = g.cwiseAbs().colwise().mean().transpose();
    return out;
}

LeakageAssessment occlusion1(const Mlp& model, const TraceDataset& ds) {
    const Vector base = correct_probs(mlp_forward(model, ds.traces), ds.labels);
    LeakageAssessment out;
    out.scores = Vector::Zero(ds.t());
    Matrix occluded = ds.traces;
    for (Index t = 0; t < ds.t(); ++t) {
        const Vector saved = occluded.col(t);
        occluded.col(t).setZero();
        const Vector p = correct_probs(mlp_forward(model, occluded), ds.labels);
        out.scores[t] = (base - p).cwiseAbs().mean();
        occluded.col(t) = saved;
    }
    return out;
}

}  // namespace

Matrix lrp_relevance(const Mlp& model, const Matrix& inputs, std::span<const int> labels,
                     double epsilon) {
    if (inputs.cols() != model.input_dim()) throw ShapeError("lrp_relevance: input dim mismatch");
    if (inputs.rows() != static_cast<Index>(labels.size()))
        throw ShapeError("lrp_relevance: label count mismatch");

    ForwardCache cache;
    mlp_forward_cached(model, inputs, cache);
    const Index n = inputs.rows();
    const Index n_layers = model.n_layers();

    // Pre-activations per layer; the top layer's are the logits.
    std::vector<Matrix> z(n_layers);
    for (Index l = 0; l < n_layers; ++l) {
        z[l] = cache.activations[l] * model.weights[l].transpose();
        z[l].rowwise() += model.biases[l].transpose();
    }

    Matrix relevance = Matrix::Zero(n, model.output_dim());
    for (Index r = 0; r < n; ++r) relevance(r, labels[r]) = z[n_layers - 1](r, labels[r]);

    for (Index l = n_layers - 1; l >= 0; --l) {
        const Matrix denom =
            z[l].array() + epsilon * z[l].array().sign() +
            (z[l].array() == 0.0).cast<double>() * epsilon;  // avoid 0/0 at dead units
        const Matrix s = relevance.array() / denom.array();
        relevance = (s * model.weights[l]).array() * cache.activations[l].array();
    }
    return relevance;
}

LeakageAssessment attribute(const std::string& method, const Mlp& model,
                            const TraceDataset& dataset) {
    dataset.validate();
    if (model.input_dim() != dataset.t())
        throw ShapeError("attribute: model input dim must equal trace length");

    LeakageAssessment out;
    if (method == "gradvis") {
        out = gradvis(model, dataset);
    } else if (method == "saliency") {
        out = saliency(model, dataset, false);
    } else if (method == "inputxgrad" || method == "input_x_grad") {
        out = saliency(model, dataset, true);
    } else if (method == "occlusion1") {
        out = occlusion1(model, dataset);
    } else if (method == "lrp" || method == "lrp_eps") {
        const Matrix r = lrp_relevance(model, dataset.traces, dataset.labels);
        out.scores = r.cwiseAbs().colwise().mean().transpose();
    } else {
        throw ConfigError("attribute: unknown method '" + method + "'");
    }
    out.method = method;
    out.validate();
    return out;
}

}  // namespace leaklock
