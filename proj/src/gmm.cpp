#include "leaklock/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace leaklock {

Vector GmmTemplate::class_log_likelihoods(const Vector& x) const {
    Vector ll(n_classes);
    for (int y = 0; y < n_classes; ++y) {
        const Vector d = x - means[y];
        const Vector sol = cholesky[y].solve(d);
        ll[y] = log_norm[y] - 0.5 * d.dot(sol);
    }
    return ll;
}

double GmmTemplate::posterior_log_prob(const Vector& x, int y) const {
    const Vector ll = class_log_likelihoods(x);
    return ll[y] - logsumexp(ll);
}

GmmTemplate fit_gmm(const Matrix& data, std::span<const int> labels, int n_classes,
                    double shrinkage) {
    if (data.rows() != static_cast<Index>(labels.size()))
        throw ShapeError("fit_gmm: label count mismatch");
    const Index d = data.cols();

    std::vector<Index> counts(n_classes, 0);
    for (int y : labels) {
        if (y < 0 || y >= n_classes) throw ConfigError("fit_gmm: label out of range");
        ++counts[y];
    }
    std::vector<int> missing;
    for (int y = 0; y < n_classes; ++y)
        if (counts[y] < d + 1) missing.push_back(y);
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "fit_gmm: classes with fewer than dim+1 samples:";
        for (int y : missing) msg << ' ' << y;
        throw ConfigError(msg.str());
    }

    GmmTemplate tmpl;
    tmpl.dim = d;
    tmpl.n_classes = n_classes;
    tmpl.shrinkage = shrinkage;
    tmpl.means.assign(n_classes, Vector::Zero(d));
    tmpl.covariances.assign(n_classes, Matrix::Zero(d, d));

    for (Index r = 0; r < data.rows(); ++r) tmpl.means[labels[r]] += data.row(r).transpose();
    for (int y = 0; y < n_classes; ++y) tmpl.means[y] /= static_cast<double>(counts[y]);
    for (Index r = 0; r < data.rows(); ++r) {
        const Vector c = data.row(r).transpose() - tmpl.means[labels[r]];
        tmpl.covariances[labels[r]] += c * c.transpose();
    }

    tmpl.cholesky.resize(n_classes);
    tmpl.log_norm.resize(n_classes);
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    for (int y = 0; y < n_classes; ++y) {
        Matrix& cov = tmpl.covariances[y];
        cov /= static_cast<double>(counts[y] - 1);
        cov += shrinkage * (cov.trace() / static_cast<double>(d)) *
               Matrix::Identity(d, d);
        tmpl.cholesky[y].compute(cov);
        if (tmpl.cholesky[y].info() != Eigen::Success)
            throw ConfigError("fit_gmm: covariance not positive definite after shrinkage");
        double log_det = 0.0;
        for (Index i = 0; i < d; ++i)
            log_det += 2.0 * std::log(tmpl.cholesky[y].matrixL()(i, i));
        tmpl.log_norm[y] = -0.5 * (static_cast<double>(d) * log_2pi + log_det);
    }
    return tmpl;
}

double gmm_mutual_information(const GmmTemplate& tmpl, const Matrix& data,
                              std::span<const int> labels) {
    if (data.rows() != static_cast<Index>(labels.size()))
        throw ShapeError("gmm_mutual_information: label count mismatch");
    if (data.cols() != tmpl.dim) throw ShapeError("gmm_mutual_information: dim mismatch");
    double acc = 0.0;
    for (Index r = 0; r < data.rows(); ++r)
        acc += tmpl.posterior_log_prob(data.row(r).transpose(), labels[r]);
    const double mi = std::log(static_cast<double>(tmpl.n_classes)) +
                      acc / static_cast<double>(data.rows());
    return std::max(0.0, mi);
}

Vector ogmm_assessment(const TraceDataset& dataset, Index window, uint64_t seed) {
    dataset.validate();
    const auto shares = dataset.share_columns();
    if (shares.empty()) throw ConfigError("ogmm_assessment: dataset has no share_ columns");
    if (window < 1 || window > dataset.t())
        throw ConfigError("ogmm_assessment: invalid window size");

    // Deterministic half split for fit vs held-out MI estimation.
    std::vector<Index> order(dataset.n());
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const Index n_fit = dataset.n() / 2;

    const Index n_windows = dataset.t() - window + 1;
    Vector profile = Vector::Zero(n_windows);

    for (const auto& name : shares) {
        const auto* col = dataset.find_aux(name);
        int n_classes = 0;
        for (uint16_t v : *col) n_classes = std::max(n_classes, static_cast<int>(v) + 1);

        std::vector<int> fit_labels(n_fit), held_labels(dataset.n() - n_fit);
        for (Index i = 0; i < n_fit; ++i) fit_labels[i] = (*col)[order[i]];
        for (Index i = n_fit; i < dataset.n(); ++i) held_labels[i - n_fit] = (*col)[order[i]];

        Matrix fit_data(n_fit, window), held_data(dataset.n() - n_fit, window);
        for (Index w = 0; w < n_windows; ++w) {
            for (Index i = 0; i < n_fit; ++i)
                fit_data.row(i) = dataset.traces.row(order[i]).segment(w, window);
            for (Index i = n_fit; i < dataset.n(); ++i)
                held_data.row(i - n_fit) = dataset.traces.row(order[i]).segment(w, window);
            const GmmTemplate tmpl = fit_gmm(fit_data, fit_labels, n_classes);
            profile[w] += gmm_mutual_information(tmpl, held_data, held_labels);
        }
    }
    profile /= static_cast<double>(shares.size());
    return profile;
}

}  // namespace leaklock
