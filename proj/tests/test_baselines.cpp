#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "leaklock/attribution.hpp"
#include "leaklock/baselines.hpp"
#include "leaklock/supervised.hpp"
#include "leaklock/toy.hpp"

using namespace leaklock;
using namespace leaklock::test;

namespace {

TraceDataset make_dataset(Matrix traces, std::vector<int> labels, int k) {
    TraceDataset ds;
    ds.traces = std::move(traces);
    ds.labels = std::move(labels);
    ds.label_cardinality = k;
    return ds;
}

TraceDataset gaussian_binary(Index n, double mu, double sigma, uint64_t seed) {
    // one leaky feature x ~ N(y_pm * mu, sigma^2), plus one pure-noise feature
    Rng rng(seed);
    Matrix traces(n, 2);
    std::vector<int> labels(static_cast<size_t>(n));
    for (Index r = 0; r < n; ++r) {
        const int y = static_cast<int>(rng() % 2);
        labels[static_cast<size_t>(r)] = y;
        traces(r, 0) = gaussian(rng);
        traces(r, 1) = (y == 0 ? -mu : mu) + sigma * gaussian(rng);
    }
    return make_dataset(std::move(traces), std::move(labels), 2);
}

}  // namespace

TEST_CASE("snr: matches the population value on a planted signal") {
    // means +-1, within-class variance 0.25 -> population SNR exactly 4
    const TraceDataset ds = gaussian_binary(100000, 1.0, 0.5, 1);
    const LeakageAssessment a = snr(ds);
    CHECK(a.method == "snr");
    CHECK(a.scores[1] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(a.scores[0] <= 3.0 / std::sqrt(100000.0) * 10.0);
}

TEST_CASE("snr: scale invariant, zero-variance feature warns and scores 0") {
    TraceDataset ds = gaussian_binary(5000, 1.0, 0.5, 2);
    const double base = snr(ds).scores[1];
    ds.traces.col(1) *= 37.0;
    CHECK(snr(ds).scores[1] == doctest::Approx(base).epsilon(1e-9));

    ds.traces.col(0).setConstant(3.0);
    CHECK(snr(ds).scores[0] == 0.0);
}

TEST_CASE("sosd: squared mean gap") {
    const TraceDataset ds = gaussian_binary(100000, 1.0, 0.5, 3);
    const LeakageAssessment a = sosd(ds);
    CHECK(a.scores[1] == doctest::Approx(4.0).epsilon(0.05));
    // shift invariance
    TraceDataset shifted = ds;
    shifted.traces.array() += 11.0;
    CHECK(sosd(shifted).scores[1] == doctest::Approx(a.scores[1]).epsilon(1e-9));
}

TEST_CASE("cpa: perfect linear leakage gives |corr| = 1") {
    Rng rng(4);
    Matrix traces(200, 2);
    std::vector<int> labels(200);
    for (Index r = 0; r < 200; ++r) {
        const int y = static_cast<int>(rng() % 2);
        labels[static_cast<size_t>(r)] = y;
        traces(r, 0) = gaussian(rng);
        traces(r, 1) = 2.0 * y - 1.0;  // exact affine function of the label
    }
    TraceDataset ds = make_dataset(std::move(traces), std::move(labels), 2);
    const LeakageAssessment a = cpa(ds);
    CHECK(a.scores[1] == doctest::Approx(1.0).epsilon(1e-9));
    // negated leakage has the same absolute correlation
    ds.traces.col(1) *= -1.0;
    CHECK(cpa(ds).scores[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.scores[0] <= 3.0 / std::sqrt(200.0));

    // constant feature: correlation undefined -> 0 with a warning
    ds.traces.col(0).setConstant(1.0);
    CHECK(cpa(ds).scores[0] == 0.0);
}

TEST_CASE("first-order statistics are permutation equivariant and deterministic") {
    const TraceDataset ds = gen_toy_redundant([] {
        ToyConfig c;
        c.variant = ToyConfig::Variant::Redundant;
        c.n_leaky = 3;
        c.n = 2000;
        c.seed = 5;
        return c;
    }());

    TraceDataset swapped = ds;
    swapped.traces.col(0).swap(swapped.traces.col(2));
    for (auto fn : {snr, sosd, cpa}) {
        const Vector a = fn(ds).scores;
        const Vector b = fn(swapped).scores;
        CHECK(a[0] == b[2]);
        CHECK(a[2] == b[0]);
        CHECK(a[1] == b[1]);
        CHECK((fn(ds).scores - a).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("first-order statistics miss purely second-order leakage") {
    ToyConfig cfg;
    cfg.variant = ToyConfig::Variant::SecondOrder;
    cfg.sigma2 = 0.1;
    cfg.n = 100000;
    cfg.seed = 6;
    const TraceDataset ds = gen_toy_second_order(cfg);

    // feature 1 leaks first-order, features 2 and 3 only jointly
    for (auto fn : {snr, sosd, cpa}) {
        const Vector s = fn(ds).scores;
        CHECK(s[1] >= 10.0 * std::max(s[0], 1e-12));
        CHECK(s[2] <= 0.01 * s[1]);
        CHECK(s[3] <= 0.01 * s[1]);
    }
}

TEST_CASE("attribute: zero model yields zero scores; unknown method throws") {
    Mlp model({3, 5, 2});
    for (auto& w : model.weights) w.setZero();
    const TraceDataset ds = make_dataset(random_matrix(8, 3, 7), {0, 1, 0, 1, 0, 1, 0, 1}, 2);
    for (const char* m : {"gradvis", "saliency", "occlusion1", "inputxgrad", "lrp"}) {
        const LeakageAssessment a = attribute(m, model, ds);
        CHECK(a.method == m);
        CHECK(a.scores.cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK_THROWS_AS(attribute("shapley", model, ds), ConfigError);
}

TEST_CASE("attribute: a model that ignores a feature assigns it no relevance") {
    const TraceDataset ds = gaussian_binary(6000, 1.0, 0.5, 8);
    DatasetSampler source(ds);
    SupervisedConfig cfg;
    cfg.hidden = {16};
    cfg.steps = 2000;
    cfg.batch_size = 256;
    cfg.weight_decay = 1e-3;  // drives weights on the uninformative feature down
    cfg.seed = 9;
    const SupervisedResult res = train_supervised(source, gaussian_binary(1000, 1.0, 0.5, 10), cfg);

    for (const char* m : {"gradvis", "saliency", "occlusion1", "inputxgrad", "lrp"}) {
        const Vector s = attribute(m, res.model, ds).scores;
        INFO("method ", std::string(m));
        CHECK(s[0] <= 0.1 * s[1]);
    }
}

TEST_CASE("lrp_relevance: conservation against the chosen logit") {
    // with zero biases the epsilon rule conserves relevance layer to layer
    Mlp model = random_mlp({4, 8, 6, 3}, 11);
    for (auto& b : model.biases) b.setZero();
    const Matrix inputs = random_matrix(10, 4, 12);
    const auto labels = random_labels(10, 3, 13);

    ForwardCache cache;
    mlp_forward_cached(model, inputs, cache);
    // recover the pre-softmax logit for the labeled class
    const Matrix logits =
        cache.activations.back() * model.weights.back().transpose();

    const Matrix rel = lrp_relevance(model, inputs, labels);
    for (Index r = 0; r < inputs.rows(); ++r) {
        const double target = logits(r, labels[static_cast<size_t>(r)]);
        CHECK(rel_err(rel.row(r).sum(), target) <= 0.01);
    }
}

TEST_CASE("assessment CSV roundtrip") {
    LeakageAssessment a;
    a.scores = Vector(4);
    a.scores << 0.0, 1.5, 2.25e-7, 3.0;
    a.method = "snr";
    a.seed = 42;
    const auto path = std::filesystem::temp_directory_path() / "leaklock_assessment.csv";
    save_assessment(a, path.string());
    const LeakageAssessment back = load_assessment(path.string());
    std::filesystem::remove(path);
    CHECK(back.method == "snr");
    CHECK(back.seed == 42);
    CHECK((back.scores - a.scores).cwiseAbs().maxCoeff() == 0.0);
}
