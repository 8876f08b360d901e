#include "leaklock/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace leaklock {

namespace {

Matrix draw_fill(Index rows, Index cols, NoiseFill fill, Rng& rng) {
    Matrix e = Matrix::Zero(rows, cols);
    if (fill == NoiseFill::Gaussian)
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) e(i, j) = gaussian(rng);
    return e;
}

Matrix masked_input(const Matrix& traces, const Vector& alpha, const Matrix& fill) {
    const Index n = traces.rows();
    const Index t = traces.cols();
    Matrix input(n, 2 * t);
    input.leftCols(t) = traces.array().rowwise() * alpha.transpose().array();
    input.leftCols(t).array() += fill.array().rowwise() * (1.0 - alpha.transpose().array());
    input.rightCols(t) = alpha.transpose().replicate(n, 1);
    return input;
}

struct PhiEstimate {
    Vector grad_phi;
    bool finite = true;
};

PhiEstimate rebar_phi_estimate(const Mlp& model, const Matrix& traces,
                               std::span<const int> labels, const Vector& gamma,
                               const RelaxationConfig& cfg, Rng& rng) {
    const Index t = traces.cols();
    const double lambda = cfg.temperature;
    const double kappa = cfg.control_scale;
    const Vector keep_p = Vector::Ones(t) - gamma;

    const MaskSample mask = sample_mask(gamma, rng);
    const ConditionalResample cond = conditional_resample(gamma, mask.hard, rng);

    // One shared fill matrix keeps the hard evaluation and both relaxed
    // evaluations on the same noise, tightening the control variate.
    const Matrix fill = draw_fill(traces.rows(), t, cfg.noise_fill, rng);

    const double f_hard = masked_value(model, traces, labels, mask.hard, fill);

    Vector grad_phi = Vector::Zero(t);
    if (kappa != 0.0) {
        BackwardOptions opts;
        opts.param_grads = false;

        const Vector s = mask.relaxed(lambda);
        const Matrix input_s = masked_input(traces, s, fill);
        BackwardResult back_s = mlp_backward(model, input_s, labels, opts);

        Vector z_tilde_relaxed(t);
        for (Index i = 0; i < t; ++i) z_tilde_relaxed[i] = sigmoid(cond.z_tilde[i] / lambda);
        const Matrix input_st = masked_input(traces, z_tilde_relaxed, fill);
        BackwardResult back_st = mlp_backward(model, input_st, labels, opts);

        double f_soft_tilde = -back_st.loss;

        // grad of f wrt alpha, chained through both input channels; the loss
        // is the NLL so f-gradients carry a sign flip.
        auto alpha_grad = [&](const BackwardResult& back) {
            Vector g = Vector::Zero(t);
            const auto& gi = back.grad_inputs;
            for (Index r = 0; r < traces.rows(); ++r)
                for (Index c = 0; c < t; ++c)
                    g[c] += gi(r, c) * (traces(r, c) - fill(r, c)) + gi(r, t + c);
            return Vector(-g);
        };

        const Vector gf_s = alpha_grad(back_s);
        const Vector gf_st = alpha_grad(back_st);

        for (Index i = 0; i < t; ++i) {
            const double ds_dphi = s[i] * (1.0 - s[i]) / lambda;
            const double dst_dphi =
                z_tilde_relaxed[i] * (1.0 - z_tilde_relaxed[i]) / lambda * cond.dz_dphi[i];
            grad_phi[i] = (f_hard - kappa * f_soft_tilde) * (mask.hard[i] - keep_p[i]) +
                          kappa * gf_s[i] * ds_dphi - kappa * gf_st[i] * dst_dphi;
        }
    } else {
        for (Index i = 0; i < t; ++i)
            grad_phi[i] = f_hard * (mask.hard[i] - keep_p[i]);
    }

    PhiEstimate out;
    out.grad_phi = std::move(grad_phi);
    out.finite = out.grad_phi.allFinite();
    return out;
}

}  // namespace

MaskedObjective masked_objective(const Mlp& model, const Matrix& traces,
                                 std::span<const int> labels, const Vector& alpha,
                                 NoiseFill fill, Rng& rng, const BackwardOptions& opts) {
    const Index t = traces.cols();
    if (alpha.size() != t) throw ShapeError("masked_objective: alpha length mismatch");
    if (model.input_dim() != 2 * t)
        throw ShapeError("masked_objective: model input dim must be 2*T");

    const Matrix fill_mat = draw_fill(traces.rows(), t, fill, rng);
    const Matrix input = masked_input(traces, alpha, fill_mat);

    BackwardOptions back_opts = opts;
    BackwardResult back = mlp_backward(model, input, labels, back_opts);

    MaskedObjective out;
    out.value = -back.loss;
    if (opts.param_grads) {
        out.grad_params = std::move(back.grad_params);
        for (auto& w : out.grad_params.weights) w = -w;
        for (auto& b : out.grad_params.biases) b = -b;
    }
    if (opts.input_grads) {
        out.grad_alpha = Vector::Zero(t);
        for (Index r = 0; r < traces.rows(); ++r)
            for (Index c = 0; c < t; ++c)
                out.grad_alpha[c] -=
                    back.grad_inputs(r, c) * (traces(r, c) - fill_mat(r, c)) +
                    back.grad_inputs(r, t + c);
    }
    return out;
}

double masked_value(const Mlp& model, const Matrix& traces,
                    std::span<const int> labels, const Vector& alpha,
                    const Matrix& fill) {
    const Matrix input = masked_input(traces, alpha, fill);
    const Matrix log_probs = mlp_forward(model, input);
    return -nll_loss(log_probs, labels);
}

Vector chain_phi_to_eta(const Vector& grad_phi, const Vector& eta_tilde) {
    // phi_t = -(log C + eta_t - logsumexp(eta)), so
    // d phi_t / d eta_j = -(delta_tj - softmax(eta)_j).
    const double lse = logsumexp(eta_tilde);
    const double total = grad_phi.sum();
    Vector grad_eta(eta_tilde.size());
    for (Index j = 0; j < eta_tilde.size(); ++j)
        grad_eta[j] = -grad_phi[j] + std::exp(eta_tilde[j] - lse) * total;
    return grad_eta;
}

Vector rebar_gradient(const Mlp& model, const Matrix& traces,
                      std::span<const int> labels, const ErasureParams& params,
                      const RelaxationConfig& cfg, Rng& rng) {
    cfg.validate();
    const Vector gamma = gamma_from_eta(params);
    PhiEstimate est = rebar_phi_estimate(model, traces, labels, gamma, cfg, rng);
    if (!est.finite) {
        // logit(u) has heavy tails near u = 0, 1; allow one retry.
        est = rebar_phi_estimate(model, traces, labels, gamma, cfg, rng);
        if (!est.finite)
            throw std::runtime_error("rebar_gradient: non-finite estimate after resampling");
    }
    return chain_phi_to_eta(est.grad_phi, params.eta_tilde);
}

Vector reinforce_gradient(const Mlp& model, const Matrix& traces,
                          std::span<const int> labels, const ErasureParams& params,
                          NoiseFill fill, Rng& rng) {
    RelaxationConfig cfg;
    cfg.control_scale = 0.0;
    cfg.noise_fill = fill;
    const Vector gamma = gamma_from_eta(params);
    PhiEstimate est = rebar_phi_estimate(model, traces, labels, gamma, cfg, rng);
    if (!est.finite) throw std::runtime_error("reinforce_gradient: non-finite estimate");
    return chain_phi_to_eta(est.grad_phi, params.eta_tilde);
}

ExactGradient exact_gradient(const Mlp& model, const Matrix& traces,
                             std::span<const int> labels, const ErasureParams& params) {
    const Index t = traces.cols();
    if (t > 16) throw ConfigError("exact_gradient: T must be <= 16 for enumeration");
    const Vector gamma = gamma_from_eta(params);
    const Vector keep_p = Vector::Ones(t) - gamma;
    const Matrix zero_fill = Matrix::Zero(traces.rows(), t);

    ExactGradient out;
    Vector grad_phi = Vector::Zero(t);
    out.grad_gamma = Vector::Zero(t);

    const uint64_t n_masks = 1ull << t;
    Vector alpha(t);
    for (uint64_t m = 0; m < n_masks; ++m) {
        double mass = 1.0;
        for (Index i = 0; i < t; ++i) {
            const bool kept = (m >> i) & 1u;
            alpha[i] = kept ? 1.0 : 0.0;
            mass *= kept ? keep_p[i] : gamma[i];
        }
        const double f = masked_value(model, traces, labels, alpha, zero_fill);
        out.objective += mass * f;
        for (Index i = 0; i < t; ++i) {
            const double score = (alpha[i] - keep_p[i]) / (keep_p[i] * gamma[i]);
            grad_phi[i] += mass * f * score * keep_p[i] * gamma[i];
            out.grad_gamma[i] -= mass * f * score;
        }
    }
    out.grad_eta = chain_phi_to_eta(grad_phi, params.eta_tilde);
    return out;
}

}  // namespace leaklock
