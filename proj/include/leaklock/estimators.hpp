#pragma once

#include <span>

#include "leaklock/erasure.hpp"
#include "leaklock/mlp.hpp"

namespace leaklock {

/// Objective f = mean log-likelihood of the labels under the model, with the
/// trace masked by alpha and erased entries replaced by fill noise:
///   input = concat(x .* alpha + fill .* (1 - alpha), alpha), dim 2T.
/// Gaussian fill draws fresh N(0,1) per entry; zero fill is deterministic.
/// Gradients are with respect to f (not the NLL), so ascent on theta
/// increases the likelihood.
struct MaskedObjective {
    double value = 0.0;
    MlpGrads grad_params;  // populated only when opts.param_grads
    Vector grad_alpha;     // populated only when opts.input_grads
};

MaskedObjective masked_objective(const Mlp& model, const Matrix& traces,
                                 std::span<const int> labels, const Vector& alpha,
                                 NoiseFill fill, Rng& rng,
                                 const BackwardOptions& opts = {});

/// Evaluate f only (no gradients) with an externally supplied fill matrix, so
/// correlated REBAR evaluations can share the same noise.
double masked_value(const Mlp& model, const Matrix& traces,
                    std::span<const int> labels, const Vector& alpha,
                    const Matrix& fill);

/// Single-sample REBAR estimate of d/d eta_tilde of E[f(mask)] for
/// f = masked objective on the given batch. kappa=0 recovers REINFORCE on
/// the same hard mask. Non-finite estimates are resampled once, then throw.
Vector rebar_gradient(const Mlp& model, const Matrix& traces,
                      std::span<const int> labels, const ErasureParams& params,
                      const RelaxationConfig& cfg, Rng& rng);

/// Plain score-function estimate f(b) * d log p(b) / d eta_tilde.
Vector reinforce_gradient(const Mlp& model, const Matrix& traces,
                          std::span<const int> labels, const ErasureParams& params,
                          NoiseFill fill, Rng& rng);

/// Exact expectation over all 2^T masks with zero fill (requires T <= 16):
/// objective = sum_b p(b) f(b) and its analytic gradients.
struct ExactGradient {
    double objective = 0.0;
    Vector grad_eta;
    Vector grad_gamma;
};

ExactGradient exact_gradient(const Mlp& model, const Matrix& traces,
                             std::span<const int> labels, const ErasureParams& params);

/// Chain a gradient wrt phi = logit(1 - gamma) back to eta_tilde.
Vector chain_phi_to_eta(const Vector& grad_phi, const Vector& eta_tilde);

}  // namespace leaklock
