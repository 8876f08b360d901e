#include "leaklock/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "leaklock/aes.hpp"
#include "leaklock/gmm.hpp"
#include "leaklock/supervised.hpp"

namespace leaklock {

namespace {

Vector fractional_ranks(const Vector& v) {
    const Index n = v.size();
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return v[a] < v[b]; });
    Vector ranks(n);
    Index i = 0;
    while (i < n) {
        Index j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Index k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeError("spearman: length mismatch");
    if (a.size() < 2) throw ShapeError("spearman: need at least 2 entries");
    const Vector ra = fractional_ranks(a);
    const Vector rb = fractional_ranks(b);
    const Vector ca = ra.array() - ra.mean();
    const Vector cb = rb.array() - rb.mean();
    const double na = ca.norm();
    const double nb = cb.norm();
    if (na == 0.0 || nb == 0.0) {
        std::cerr << "spearman: constant input, returning 0\n";
        return 0.0;
    }
    return ca.dot(cb) / (na * nb);
}

double compare_to_ogmm(const Vector& assessment, const Vector& profile, Index window) {
    const Index n_windows = assessment.size() - window + 1;
    if (n_windows != profile.size())
        throw ShapeError("compare_to_ogmm: profile length does not match window count");
    Vector averaged(n_windows);
    for (Index w = 0; w < n_windows; ++w) averaged[w] = assessment.segment(w, window).mean();
    return spearman(averaged, profile);
}

void OcclusionCurve::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("OcclusionCurve: cannot open " + path);
    out << "unmasked,mean_rank,direction\n";
    const char* dir = direction == OcclusionDirection::Forward ? "forward" : "reverse";
    char buf[40];
    for (size_t i = 0; i < unmasked_counts.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", mean_ranks[i]);
        out << unmasked_counts[i] << ',' << buf << ',' << dir << '\n';
    }
    if (!out) throw IoError("OcclusionCurve: write failed for " + path);
}

OcclusionCurve occlusion_test(const Mlp& model, const TraceDataset& dataset,
                              const LeakageAssessment& assessment,
                              OcclusionDirection direction) {
    dataset.validate();
    const Index t = dataset.t();
    if (assessment.scores.size() != t)
        throw ShapeError("occlusion_test: assessment length != T");
    if (model.input_dim() != 2 * t)
        throw ShapeError("occlusion_test: model input dim must be 2*T");

    std::vector<Index> order(t);
    std::iota(order.begin(), order.end(), Index{0});
    const auto& s = assessment.scores;
    if (direction == OcclusionDirection::Forward)
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return s[a] > s[b]; });
    else
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return s[a] < s[b]; });

    const Index n = dataset.n();
    Matrix input = Matrix::Zero(n, 2 * t);

    OcclusionCurve curve;
    curve.direction = direction;
    curve.unmasked_counts.reserve(t + 1);
    curve.mean_ranks.reserve(t + 1);

    for (Index k = 0; k <= t; ++k) {
        if (k > 0) {
            const Index idx = order[k - 1];
            input.col(idx) = dataset.traces.col(idx);
            input.col(t + idx).setOnes();
        }
        curve.unmasked_counts.push_back(k);
        curve.mean_ranks.push_back(
            validation_rank(mlp_forward(model, input), dataset.labels));
    }
    curve.auc = std::accumulate(curve.mean_ranks.begin(), curve.mean_ranks.end(), 0.0) /
                static_cast<double>(curve.mean_ranks.size());
    return curve;
}

std::vector<int> key_rank_accumulation(const Mlp& model, const TraceDataset& attack,
                                       uint8_t true_key) {
    attack.validate();
    if (attack.label_cardinality != 256)
        throw ConfigError("key_rank_accumulation: needs 256-class labels");
    const auto* plaintexts = attack.find_aux("w");
    if (!plaintexts) throw ConfigError("key_rank_accumulation: missing plaintext column 'w'");

    const Matrix log_probs = mlp_forward(model, attack.traces);
    Vector accum = Vector::Zero(256);
    std::vector<int> ranks;
    ranks.reserve(attack.n());
    for (Index i = 0; i < attack.n(); ++i) {
        const auto w = static_cast<uint8_t>((*plaintexts)[i]);
        for (int k = 0; k < 256; ++k)
            accum[k] += log_probs(i, sbox(static_cast<uint8_t>(k) ^ w));
        int rank = 0;
        for (int k = 0; k < 256; ++k)
            if (accum[k] >= accum[true_key]) ++rank;
        ranks.push_back(rank);
    }
    return ranks;
}

uint8_t template_attack(const TraceDataset& profiling, const TraceDataset& attack,
                        const std::vector<Index>& points_of_interest) {
    profiling.validate();
    attack.validate();
    if (attack.n() == 0) throw ConfigError("template_attack: empty attack set");
    if (profiling.label_cardinality != 256 || attack.label_cardinality != 256)
        throw ConfigError("template_attack: needs 256-class labels");
    for (Index p : points_of_interest)
        if (p < 0 || p >= profiling.t())
            throw ConfigError("template_attack: point of interest out of range");
    const auto* plaintexts = attack.find_aux("w");
    if (!plaintexts) throw ConfigError("template_attack: missing plaintext column 'w'");

    const Index d = static_cast<Index>(points_of_interest.size());
    Matrix prof_data(profiling.n(), d);
    for (Index r = 0; r < profiling.n(); ++r)
        for (Index c = 0; c < d; ++c) prof_data(r, c) = profiling.traces(r, points_of_interest[c]);
    const GmmTemplate tmpl = fit_gmm(prof_data, profiling.labels, 256);

    Vector log_counts(256);
    std::vector<Index> counts(256, 0);
    for (int y : profiling.labels) ++counts[y];
    for (int y = 0; y < 256; ++y) log_counts[y] = std::log(static_cast<double>(counts[y]));

    Vector score = Vector::Zero(256);
    Vector x(d);
    for (Index i = 0; i < attack.n(); ++i) {
        for (Index c = 0; c < d; ++c) x[c] = attack.traces(i, points_of_interest[c]);
        const Vector ll = tmpl.class_log_likelihoods(x);
        const auto w = static_cast<uint8_t>((*plaintexts)[i]);
        for (int k = 0; k < 256; ++k) {
            const uint8_t y = sbox(static_cast<uint8_t>(k) ^ w);
            score[k] += ll[y] + log_counts[y];
        }
    }
    Index best = 0;
    score.maxCoeff(&best);
    return static_cast<uint8_t>(best);
}

}  // namespace leaklock
