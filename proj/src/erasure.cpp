#include "leaklock/erasure.hpp"

#include <cmath>
#include <stdexcept>

namespace leaklock {

double ErasureParams::budget() const {
    const double t = static_cast<double>(eta_tilde.size());
    return t * gamma_bar / (1.0 - gamma_bar);
}

void ErasureParams::validate() const {
    if (eta_tilde.size() == 0) throw ConfigError("ErasureParams: eta_tilde is empty");
    if (!(gamma_bar > 0.0 && gamma_bar < 1.0))
        throw ConfigError("ErasureParams: gamma_bar must lie in (0,1)");
    if (!eta_tilde.allFinite()) throw ConfigError("ErasureParams: eta_tilde has non-finite entries");
}

void RelaxationConfig::validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw ConfigError("RelaxationConfig: temperature must be finite and positive");
    if (!(control_scale >= 0.0))
        throw ConfigError("RelaxationConfig: control_scale must be nonnegative");
}

double cost(double gamma) {
    if (gamma < 0.0 || gamma >= 1.0) throw std::domain_error("cost: gamma must lie in [0,1)");
    return gamma / (1.0 - gamma);
}

Vector gamma_from_eta(const ErasureParams& params) {
    params.validate();
    const double log_c = std::log(params.budget());
    const double lse = logsumexp(params.eta_tilde);
    Vector gamma(params.eta_tilde.size());
    for (Index t = 0; t < gamma.size(); ++t)
        gamma[t] = sigmoid(log_c + params.eta_tilde[t] - lse);
    return gamma;
}

Vector MaskSample::relaxed(double temperature) const {
    return (z / temperature).unaryExpr([](double v) { return sigmoid(v); });
}

Vector MaskSample::relaxed_tilde(double temperature) const {
    return (z_tilde / temperature).unaryExpr([](double v) { return sigmoid(v); });
}

MaskSample sample_mask(const Vector& gamma, Rng& rng) {
    MaskSample s;
    const Index t_len = gamma.size();
    s.hard.resize(t_len);
    s.z.resize(t_len);
    for (Index t = 0; t < t_len; ++t) {
        const double u = uniform_open(rng);
        s.z[t] = logit(1.0 - gamma[t]) + logit(u);
        s.hard[t] = s.z[t] >= 0.0 ? 1.0 : 0.0;
    }
    return s;
}

ConditionalResample conditional_resample(const Vector& gamma, const Vector& hard, Rng& rng) {
    const Index t_len = gamma.size();
    if (hard.size() != t_len)
        throw ShapeError("conditional_resample: mask length mismatch");
    ConditionalResample out;
    out.z_tilde.resize(t_len);
    out.dz_dphi.resize(t_len);
    for (Index t = 0; t < t_len; ++t) {
        const double p = 1.0 - gamma[t];  // keep probability, sigmoid(phi_t)
        const double v = uniform_open(rng);
        double u_prime;
        if (hard[t] >= 0.5) {
            u_prime = (1.0 - p) + v * p;
            out.dz_dphi[t] = 1.0 + (v - 1.0) * p * (1.0 - p) / (u_prime * (1.0 - u_prime));
        } else {
            u_prime = v * (1.0 - p);
            out.dz_dphi[t] = 1.0 - v * p * (1.0 - p) / (u_prime * (1.0 - u_prime));
        }
        out.z_tilde[t] = logit(p) + logit(u_prime);
    }
    return out;
}

}  // namespace leaklock
