#pragma once

#include <span>
#include <vector>

#include "leaklock/dataset.hpp"

namespace leaklock {

/// Per-class Gaussian templates over a small window of features, uniform
/// class prior, with trace-scaled ridge shrinkage on each covariance.
struct GmmTemplate {
    Index dim = 0;
    int n_classes = 0;
    double shrinkage = 1e-3;
    std::vector<Vector> means;
    std::vector<Matrix> covariances;          // after shrinkage; SPD
    std::vector<Eigen::LLT<Eigen::MatrixXd>> cholesky;
    std::vector<double> log_norm;             // -0.5 (d log 2pi + log|Sigma|)

    /// Row of per-class log N(x; mu_y, Sigma_y) (no prior term).
    Vector class_log_likelihoods(const Vector& x) const;
    /// log p(y|x) under the uniform prior.
    double posterior_log_prob(const Vector& x, int y) const;
};

/// Fit class means and shrunk covariances: Sigma_y = S_y + rho*(tr(S_y)/d)*I.
/// Every class in [0, n_classes) needs at least dim+1 samples.
GmmTemplate fit_gmm(const Matrix& data, std::span<const int> labels, int n_classes,
                    double shrinkage = 1e-3);

/// MI estimate in nats: log K + mean over held-out (x, y) of log p(y|x),
/// clipped below at zero. The held-out split must be disjoint from the fit
/// split for the estimate to be meaningful.
double gmm_mutual_information(const GmmTemplate& tmpl, const Matrix& data,
                              std::span<const int> labels);

/// "Omniscient" sliding-window leakage profile: per window of width W
/// (stride 1) and per share column, fit templates on half the rows and
/// estimate MI on the other half; average across shares. Length T - W + 1.
Vector ogmm_assessment(const TraceDataset& dataset, Index window = 5, uint64_t seed = 0);

}  // namespace leaklock
