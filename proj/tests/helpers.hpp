#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "leaklock/mlp.hpp"

namespace leaklock::test {

inline Mlp random_mlp(std::vector<Index> dims, uint64_t seed) {
    Mlp model(std::move(dims));
    Rng rng(seed);
    xavier_init(model, rng);
    return model;
}

inline Matrix random_matrix(Index rows, Index cols, uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = gaussian(rng);
    return m;
}

inline std::vector<int> random_labels(Index n, int cardinality, uint64_t seed) {
    Rng rng(seed);
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng() % cardinality);
    return labels;
}

// Central finite difference of a scalar function at x.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

struct RunningStats {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double std_error() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

// Ordinary least squares of y on x; returns (slope, intercept, r_squared).
struct LinearFit {
    double slope = 0.0, intercept = 0.0, r_squared = 0.0;
};
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (fit.slope * x[i] + fit.intercept);
        ss_res += e * e;
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

}  // namespace leaklock::test
