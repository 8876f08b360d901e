#include "leaklock/cmi.hpp"

#include <cmath>
#include <stdexcept>

namespace leaklock {

namespace {

// Binary entropy of a Bernoulli(p) in nats, safe at the endpoints.
double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

}  // namespace

double cmi_oracle(double sigma, int n, long samples, uint64_t seed) {
    if (n < 1) throw std::domain_error("cmi_oracle: n must be >= 1");
    if (sigma <= 0.0) throw std::domain_error("cmi_oracle: sigma must be positive");
    if (samples < 1) throw std::domain_error("cmi_oracle: samples must be >= 1");

    Rng rng(seed);
    const double inv_var = 1.0 / (sigma * sigma);
    double acc = 0.0;
    for (long s = 0; s < samples; ++s) {
        const double y = (rng() & 1u) ? 1.0 : -1.0;
        double sum_rest = 0.0;
        for (int i = 1; i < n; ++i) sum_rest += y + sigma * gaussian(rng);
        const double x1 = y + sigma * gaussian(rng);
        const double h_without = binary_entropy(sigmoid(2.0 * sum_rest * inv_var));
        const double h_with = binary_entropy(sigmoid(2.0 * (sum_rest + x1) * inv_var));
        acc += h_without - h_with;
    }
    return acc / static_cast<double>(samples);
}

}  // namespace leaklock
