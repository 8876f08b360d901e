#include "leaklock/baselines.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "leaklock/aes.hpp"

namespace leaklock {

void LeakageAssessment::validate() const {
    if (!scores.allFinite())
        throw ConfigError("LeakageAssessment: non-finite score");
    if ((scores.array() < 0.0).any())
        throw ConfigError("LeakageAssessment: negative score");
}

namespace {

struct ClassMoments {
    std::vector<int> class_ids;
    Matrix means;   // class x T
    Matrix vars;    // class x T (population-style, n-denominator)
    std::vector<Index> counts;
};

ClassMoments class_moments(const TraceDataset& dataset) {
    dataset.validate();
    std::map<int, Index> class_index;
    for (int y : dataset.labels) class_index.emplace(y, 0);
    ClassMoments m;
    Index next = 0;
    for (auto& [y, idx] : class_index) {
        idx = next++;
        m.class_ids.push_back(y);
    }
    const Index k = next;
    const Index t = dataset.t();
    m.means = Matrix::Zero(k, t);
    m.vars = Matrix::Zero(k, t);
    m.counts.assign(k, 0);
    for (Index r = 0; r < dataset.n(); ++r) {
        const Index c = class_index[dataset.labels[r]];
        m.means.row(c) += dataset.traces.row(r);
        ++m.counts[c];
    }
    for (Index c = 0; c < k; ++c) m.means.row(c) /= static_cast<double>(m.counts[c]);
    for (Index r = 0; r < dataset.n(); ++r) {
        const Index c = class_index[dataset.labels[r]];
        m.vars.row(c) += (dataset.traces.row(r) - m.means.row(c)).array().square().matrix();
    }
    for (Index c = 0; c < k; ++c) m.vars.row(c) /= static_cast<double>(m.counts[c]);
    return m;
}

}  // namespace

LeakageAssessment snr(const TraceDataset& dataset) {
    const ClassMoments m = class_moments(dataset);
    const Index k = m.means.rows();
    const Index n = dataset.n();
    const Index t = dataset.t();

    Vector class_weights(k);
    for (Index c = 0; c < k; ++c)
        class_weights[c] = static_cast<double>(m.counts[c]) / static_cast<double>(n);

    LeakageAssessment out;
    out.method = "snr";
    out.scores = Vector::Zero(t);
    bool warned = false;
    for (Index j = 0; j < t; ++j) {
        double grand = 0.0;
        for (Index c = 0; c < k; ++c) grand += class_weights[c] * m.means(c, j);
        double signal = 0.0;
        double noise = 0.0;
        for (Index c = 0; c < k; ++c) {
            const double d = m.means(c, j) - grand;
            signal += class_weights[c] * d * d;
            noise += class_weights[c] * m.vars(c, j);
        }
        if (noise <= 0.0) {
            if (!warned) {
                std::cerr << "snr: zero within-class variance at timestep " << j
                          << "; score set to 0\n";
                warned = true;
            }
            out.scores[j] = 0.0;
        } else {
            out.scores[j] = signal / noise;
        }
    }
    return out;
}

LeakageAssessment sosd(const TraceDataset& dataset) {
    const ClassMoments m = class_moments(dataset);
    const Index k = m.means.rows();
    LeakageAssessment out;
    out.method = "sosd";
    out.scores = Vector::Zero(dataset.t());
    for (Index a = 0; a < k; ++a)
        for (Index b = a + 1; b < k; ++b)
            out.scores += (m.means.row(a) - m.means.row(b)).array().square().matrix().transpose();
    return out;
}

LeakageAssessment cpa(const TraceDataset& dataset) {
    dataset.validate();
    const Index n = dataset.n();
    const Index t = dataset.t();

    Vector hw(n);
    for (Index r = 0; r < n; ++r) {
        const int y = dataset.labels[r];
        hw[r] = dataset.label_cardinality == 2
                    ? static_cast<double>(y)
                    : static_cast<double>(hamming_weight(static_cast<uint8_t>(y)));
    }

    const double hw_mean = hw.mean();
    const Vector hw_c = hw.array() - hw_mean;
    const double hw_ss = hw_c.squaredNorm();

    LeakageAssessment out;
    out.method = "cpa";
    out.scores = Vector::Zero(t);
    if (hw_ss <= 0.0) {
        std::cerr << "cpa: power model is constant over the dataset; scores set to 0\n";
        return out;
    }
    bool warned = false;
    for (Index j = 0; j < t; ++j) {
        const Vector x = dataset.traces.col(j);
        const Vector x_c = x.array() - x.mean();
        const double x_ss = x_c.squaredNorm();
        if (x_ss <= 0.0) {
            if (!warned) {
                std::cerr << "cpa: constant feature at timestep " << j << "; score set to 0\n";
                warned = true;
            }
            continue;
        }
        out.scores[j] = std::abs(hw_c.dot(x_c)) / std::sqrt(hw_ss * x_ss);
    }
    return out;
}

void save_assessment(const LeakageAssessment& assessment, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_assessment: cannot open " + path);
    out << "t,score,method,seed\n";
    char buf[40];
    for (Index i = 0; i < assessment.scores.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", assessment.scores[i]);
        out << i << ',' << buf << ',' << assessment.method << ',' << assessment.seed << '\n';
    }
    if (!out) throw IoError("save_assessment: write failed for " + path);
}

LeakageAssessment load_assessment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_assessment: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "t,score,method,seed")
        throw IoError("load_assessment: bad header in " + path);
    LeakageAssessment out;
    std::vector<double> scores;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string t_field, score_field, method_field, seed_field;
        if (!std::getline(ss, t_field, ',') || !std::getline(ss, score_field, ',') ||
            !std::getline(ss, method_field, ',') || !std::getline(ss, seed_field))
            throw IoError("load_assessment: malformed row in " + path);
        scores.push_back(std::stod(score_field));
        out.method = method_field;
        out.seed = std::stoull(seed_field);
    }
    out.scores = Eigen::Map<Vector>(scores.data(), static_cast<Index>(scores.size()));
    return out;
}

}  // namespace leaklock
