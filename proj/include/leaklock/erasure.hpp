#pragma once

#include "leaklock/common.hpp"

namespace leaklock {

/// Unconstrained parametrization of per-timestep erasure probabilities.
/// gamma_t = sigmoid(log C + eta_tilde_t - logsumexp(eta_tilde)) with budget
/// C = T * gamma_bar / (1 - gamma_bar), so that sum_t gamma_t/(1-gamma_t) = C.
struct ErasureParams {
    Vector eta_tilde;
    double gamma_bar = 0.5;

    double budget() const;
    void validate() const;
};

enum class NoiseFill { Gaussian, Zero };

struct RelaxationConfig {
    double temperature = 0.5;   // lambda
    double control_scale = 1.0; // kappa; 0 disables the control variate
    NoiseFill noise_fill = NoiseFill::Gaussian;

    void validate() const;
};

/// One mask draw via the logistic reparametrization z_t = logit(1-gamma_t) + logit(u_t).
struct MaskSample {
    Vector hard;    // b in {0,1}^T, 1 = kept
    Vector z;       // pre-threshold logits
    Vector z_tilde; // conditional resample given hard (empty until filled)

    Vector relaxed(double temperature) const;        // sigmoid(z / lambda)
    Vector relaxed_tilde(double temperature) const;  // sigmoid(z_tilde / lambda)
};

/// Budget cost of one erasure probability: c(x) = x / (1 - x).
double cost(double gamma);

Vector gamma_from_eta(const ErasureParams& params);

MaskSample sample_mask(const Vector& gamma, Rng& rng);

/// Resamples z_tilde ~ p(z | hard(z) = b) for the given mask, returning both
/// z_tilde and the per-coordinate derivative d z_tilde / d phi where
/// phi_t = logit(1 - gamma_t). The derivative is what REBAR needs to
/// differentiate through the coupled resample.
struct ConditionalResample {
    Vector z_tilde;
    Vector dz_dphi;
};
ConditionalResample conditional_resample(const Vector& gamma, const Vector& hard, Rng& rng);

}  // namespace leaklock
