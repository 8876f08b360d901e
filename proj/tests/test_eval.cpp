#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "leaklock/adversarial.hpp"
#include "leaklock/aes.hpp"
#include "leaklock/baselines.hpp"
#include "leaklock/gmm.hpp"
#include "leaklock/metrics.hpp"
#include "leaklock/supervised.hpp"
#include "leaklock/synth_aes.hpp"
#include "leaklock/toy.hpp"

using namespace leaklock;
using namespace leaklock::test;

namespace {

// draw (x, y): y uniform in {0,1}, x ~ N(2y-1, sigma^2)
void draw_binary_gaussian(Index n, double sigma, uint64_t seed, Matrix& x,
                          std::vector<int>& y) {
    Rng rng(seed);
    x.resize(n, 1);
    y.resize(static_cast<size_t>(n));
    for (Index r = 0; r < n; ++r) {
        const int label = static_cast<int>(rng() % 2);
        y[static_cast<size_t>(r)] = label;
        x(r, 0) = (2.0 * label - 1.0) + sigma * gaussian(rng);
    }
}

// I(Y;X) in nats for the symmetric binary Gaussian channel, by quadrature
double binary_gaussian_mi(double sigma) {
    const double lo = -1.0 - 10.0 * sigma, hi = 1.0 + 10.0 * sigma;
    const int steps = 200000;
    const double h = (hi - lo) / steps;
    auto pdf = [&](double x, double mu) {
        const double z = (x - mu) / sigma;
        return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
    };
    double mi = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double x = lo + i * h;
        const double p0 = pdf(x, -1.0), p1 = pdf(x, 1.0);
        const double px = 0.5 * (p0 + p1);
        if (px <= 0.0) continue;
        const double q = p1 / (p0 + p1);
        double cond = 0.0;
        if (q > 0.0) cond -= q * std::log(q);
        if (q < 1.0) cond -= (1.0 - q) * std::log(1.0 - q);
        const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
        mi += w * h * px * (std::log(2.0) - cond);
    }
    return mi;
}

SyntheticAesConfig small_aes(uint64_t seed, Index n = 20000) {
    SyntheticAesConfig cfg;
    cfg.n = n;
    cfg.t = 20;
    cfg.n_ops = 10;
    cfg.n_lkg = 1;
    cfg.var_resid = 0.1;
    cfg.seed = seed;
    return cfg;
}

// rewrite the plaintext column so every trace is consistent with a fixed key
void fix_key(TraceDataset& ds, uint8_t key) {
    auto* w = const_cast<std::vector<uint16_t>*>(ds.find_aux("w"));
    REQUIRE(w != nullptr);
    for (size_t i = 0; i < w->size(); ++i)
        (*w)[i] = static_cast<uint16_t>(inv_sbox(static_cast<uint8_t>(ds.labels[i])) ^ key);
}

}  // namespace

TEST_CASE("fit_gmm: recovers planted class means") {
    Matrix x;
    std::vector<int> y;
    draw_binary_gaussian(10000, 0.5, 1, x, y);
    const GmmTemplate tmpl = fit_gmm(x, y, 2);
    CHECK(tmpl.means[0][0] == doctest::Approx(-1.0).epsilon(0.05));
    CHECK(tmpl.means[1][0] == doctest::Approx(1.0).epsilon(0.05));
    CHECK(tmpl.covariances[0](0, 0) == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("fit_gmm: duplicated features stay positive definite") {
    Matrix x;
    std::vector<int> y;
    draw_binary_gaussian(500, 0.5, 2, x, y);
    Matrix dup(x.rows(), 2);
    dup.col(0) = x.col(0);
    dup.col(1) = x.col(0);  // rank-1 sample covariance
    const GmmTemplate tmpl = fit_gmm(dup, y, 2);
    Vector probe(2);
    probe << 0.3, 0.4;
    const Vector ll = tmpl.class_log_likelihoods(probe);
    CHECK(std::isfinite(ll[0]));
    CHECK(std::isfinite(ll[1]));
}

TEST_CASE("fit_gmm: every class must be populated") {
    Matrix x(4, 1);
    x << 0.0, 1.0, 2.0, 3.0;
    std::vector<int> y = {0, 0, 2, 2};
    CHECK_THROWS_AS(fit_gmm(x, y, 3), ConfigError);
}

TEST_CASE("gmm_mutual_information: matches quadrature on the binary channel") {
    for (double sigma : {0.5, 1.0, 2.0}) {
        Matrix fit_x, held_x;
        std::vector<int> fit_y, held_y;
        draw_binary_gaussian(100000, sigma, 3, fit_x, fit_y);
        draw_binary_gaussian(100000, sigma, 4, held_x, held_y);
        const GmmTemplate tmpl = fit_gmm(fit_x, fit_y, 2);
        const double est = gmm_mutual_information(tmpl, held_x, held_y);
        const double truth = binary_gaussian_mi(sigma);
        INFO("sigma ", sigma);
        CHECK(std::abs(est - truth) <= 0.1 * truth);
        CHECK(est <= std::log(2.0) + 1e-12);
    }
}

TEST_CASE("gmm_mutual_information: independent data scores about zero") {
    Matrix x;
    std::vector<int> y;
    draw_binary_gaussian(20000, 1.0, 5, x, y);
    Rng rng(6);
    for (size_t i = y.size(); i > 1; --i) std::swap(y[i - 1], y[rng() % i]);
    Matrix held_x;
    std::vector<int> held_y;
    draw_binary_gaussian(20000, 1.0, 7, held_x, held_y);
    Rng rng2(8);
    for (size_t i = held_y.size(); i > 1; --i) std::swap(held_y[i - 1], held_y[rng2() % i]);
    const GmmTemplate tmpl = fit_gmm(x, y, 2);
    CHECK(gmm_mutual_information(tmpl, held_x, held_y) <= 0.01);
}

TEST_CASE("gmm_mutual_information: fit-split estimate is optimistic") {
    // a tiny fit split overfits, so its in-sample estimate is optimistic
    Matrix x;
    std::vector<int> y;
    draw_binary_gaussian(40, 2.0, 9, x, y);
    Matrix held_x;
    std::vector<int> held_y;
    draw_binary_gaussian(20000, 2.0, 10, held_x, held_y);
    const GmmTemplate tmpl = fit_gmm(x, y, 2);
    CHECK(gmm_mutual_information(tmpl, x, y) >
          gmm_mutual_information(tmpl, held_x, held_y));
}

TEST_CASE("ogmm: peaks at the leaky window on unprotected traces") {
    SynthAes gen(small_aes(11));
    const TraceDataset ds = gen.generate();
    REQUIRE(gen.ground_truth().size() == 1);
    const Index gt = gen.ground_truth()[0];

    const Index window = 5;
    const Vector profile = ogmm_assessment(ds, window, 12);
    CHECK(profile.size() == ds.t() - window + 1);
    Index peak = 0;
    profile.maxCoeff(&peak);
    // the peak window must contain the leaky timestep
    CHECK(peak <= gt);
    CHECK(gt < peak + window);
}

TEST_CASE("ogmm: sees both shares under boolean masking") {
    SyntheticAesConfig cfg = small_aes(13, 40000);
    cfg.boolean_masking = true;
    SynthAes gen(cfg);
    const TraceDataset ds = gen.generate();
    REQUIRE(gen.ground_truth().size() == 2);

    const Index window = 5;
    const Vector profile = ogmm_assessment(ds, window, 14);
    std::vector<double> sorted(profile.data(), profile.data() + profile.size());
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (Index gt : gen.ground_truth()) {
        // some window containing the share must rise well above the median
        double best = 0.0;
        for (Index w = std::max(Index{0}, gt - window + 1);
             w <= std::min(gt, profile.size() - 1); ++w)
            best = std::max(best, profile[w]);
        CHECK(best >= median + 0.05);
    }
}

TEST_CASE("ogmm: flat on leak-free traces, errors without share columns") {
    SyntheticAesConfig cfg = small_aes(15);
    cfg.n_lkg = 0;
    const TraceDataset ds = gen_synthetic_aes(cfg);
    const Vector profile = ogmm_assessment(ds, 5, 16);
    CHECK(profile.maxCoeff() <= 0.05);

    TraceDataset bare = ds;
    bare.aux.erase(std::remove_if(bare.aux.begin(), bare.aux.end(),
                                  [](const auto& c) { return c.first.rfind("share_", 0) == 0; }),
                   bare.aux.end());
    CHECK_THROWS_AS(ogmm_assessment(bare, 5, 17), ConfigError);
}

TEST_CASE("ogmm: invariant to the order of share columns") {
    SyntheticAesConfig cfg = small_aes(18, 10000);
    cfg.boolean_masking = true;
    TraceDataset ds = gen_synthetic_aes(cfg);
    const Vector a = ogmm_assessment(ds, 5, 19);
    std::swap(ds.aux[2], ds.aux[3]);  // share_m <-> share_my
    const Vector b = ogmm_assessment(ds, 5, 19);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("spearman: hand-checked values and invariances") {
    Vector a(4), b(4);
    a << 1, 2, 3, 4;
    b << 2, 1, 4, 3;
    CHECK(spearman(a, b) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(spearman(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    Vector rev = a.reverse();
    CHECK(spearman(a, rev) == doctest::Approx(-1.0).epsilon(1e-12));

    Vector constant = Vector::Ones(4);
    CHECK(spearman(a, constant) == 0.0);

    // invariant under strictly monotone transforms
    Vector expb = b.array().exp();
    CHECK(spearman(a, expb) == doctest::Approx(spearman(a, b)).epsilon(1e-12));
    CHECK_THROWS_AS(spearman(a, Vector::Ones(3)), ShapeError);
}

TEST_CASE("compare_to_ogmm: window-mean alignment") {
    Rng rng(20);
    Vector assessment(20);
    for (Index i = 0; i < 20; ++i) assessment[i] = uniform_open(rng);
    const Index window = 5;
    Vector profile(16);
    for (Index w = 0; w < 16; ++w) profile[w] = assessment.segment(w, window).mean();
    CHECK(compare_to_ogmm(assessment, profile, window) == doctest::Approx(1.0).epsilon(1e-12));

    // monotone transform of the profile preserves the correlation
    Vector squashed = profile.array().tanh();
    CHECK(compare_to_ogmm(assessment, squashed, window) == doctest::Approx(1.0).epsilon(1e-12));

    // an unrelated profile is near zero on average
    RunningStats stats;
    for (int trial = 0; trial < 200; ++trial) {
        Vector random_profile(16);
        for (Index i = 0; i < 16; ++i) random_profile[i] = gaussian(rng);
        stats.add(compare_to_ogmm(assessment, random_profile, window));
    }
    CHECK(std::abs(stats.mean) <= 0.1);
    CHECK_THROWS_AS(compare_to_ogmm(assessment, Vector::Ones(4), window), ShapeError);
}

TEST_CASE("occlusion_test: endpoints, shape, and direction agreement") {
    ToyConfig tcfg;
    tcfg.variant = ToyConfig::Variant::Redundant;
    tcfg.sigma2 = 0.25;
    tcfg.n_leaky = 2;
    tcfg.n = 3000;
    tcfg.seed = 21;
    ToyStream stream(tcfg);
    const TraceDataset val = gen_toy_redundant([&] {
        ToyConfig c = tcfg;
        c.seed = 22;
        c.n = 1500;
        return c;
    }());

    MaskedSupervisedConfig mcfg;
    mcfg.hidden = {32};
    mcfg.steps = 1500;
    mcfg.batch_size = 256;
    mcfg.seed = 23;
    const Mlp model = train_masked_supervised(stream, val, mcfg);

    const LeakageAssessment assessment = snr(val);
    const OcclusionCurve fwd = occlusion_test(model, val, assessment,
                                              OcclusionDirection::Forward);
    const OcclusionCurve rev = occlusion_test(model, val, assessment,
                                              OcclusionDirection::Reverse);

    const Index t = val.t();
    CHECK(fwd.unmasked_counts.size() == static_cast<size_t>(t + 1));
    CHECK(fwd.unmasked_counts.front() == 0);
    CHECK(fwd.unmasked_counts.back() == t);
    // the all-masked and all-unmasked evaluations do not depend on the order
    CHECK(fwd.mean_ranks.front() == rev.mean_ranks.front());
    CHECK(fwd.mean_ranks.back() == rev.mean_ranks.back());
    // unmasking everything beats unmasking nothing on a leaky dataset
    CHECK(fwd.mean_ranks.back() < fwd.mean_ranks.front());
    // unmasking the leakiest timesteps first pays off earlier
    CHECK(fwd.auc <= rev.auc);
    const double mean = std::accumulate(fwd.mean_ranks.begin(), fwd.mean_ranks.end(), 0.0) /
                        static_cast<double>(fwd.mean_ranks.size());
    CHECK(fwd.auc == doctest::Approx(mean).epsilon(1e-12));

    LeakageAssessment bad = assessment;
    bad.scores = Vector::Ones(t + 3);
    CHECK_THROWS_AS(occlusion_test(model, val, bad, OcclusionDirection::Forward), ShapeError);
}

TEST_CASE("key_rank_accumulation: recovers the key from strong leakage") {
    SynthAes gen(small_aes(24, 40000));
    const TraceDataset full = gen.generate();
    auto parts = split(full, {0.9, 0.1}, 25);

    DatasetSampler source(parts[0]);
    SupervisedConfig cfg;
    cfg.hidden = {64};
    cfg.steps = 4000;
    cfg.batch_size = 512;
    cfg.seed = 26;
    const SupervisedResult res = train_supervised(source, parts[1], cfg);
    REQUIRE_FALSE(res.record.failed);

    TraceDataset attack = take_rows(full, [] {
        std::vector<Index> rows(200);
        std::iota(rows.begin(), rows.end(), Index{0});
        return rows;
    }());
    const uint8_t true_key = 0x5a;
    fix_key(attack, true_key);

    const std::vector<int> ranks = key_rank_accumulation(res.model, attack, true_key);
    REQUIRE(ranks.size() == 200);
    CHECK(*std::min_element(ranks.begin(), ranks.begin() + 50) == 1);
    CHECK(ranks.back() == 1);

    // a constant model cannot distinguish hypotheses: every key ties
    Mlp flat({20, 4, 256});
    for (auto& w : flat.weights) w.setZero();
    const std::vector<int> flat_ranks = key_rank_accumulation(flat, attack, true_key);
    CHECK(flat_ranks.back() == 256);

    // the final rank does not depend on trace order
    TraceDataset reversed = take_rows(attack, [] {
        std::vector<Index> rows(200);
        std::iota(rows.begin(), rows.end(), Index{0});
        std::reverse(rows.begin(), rows.end());
        return rows;
    }());
    CHECK(key_rank_accumulation(res.model, reversed, true_key).back() == ranks.back());
}

TEST_CASE("template_attack: recovers the key at the leaky point") {
    SynthAes gen(small_aes(27, 30000));
    const TraceDataset profiling = gen.generate();
    const Index gt = gen.ground_truth().at(0);

    TraceDataset attack = take_rows(profiling, [] {
        std::vector<Index> rows(300);
        std::iota(rows.begin(), rows.end(), Index{0});
        return rows;
    }());
    const uint8_t true_key = 0xc3;
    fix_key(attack, true_key);

    CHECK(template_attack(profiling, attack, {gt}) == true_key);

    // duplicating the attack set cannot change the argmax
    TraceDataset doubled = take_rows(attack, [] {
        std::vector<Index> rows(600);
        for (Index i = 0; i < 600; ++i) rows[static_cast<size_t>(i)] = i % 300;
        return rows;
    }());
    CHECK(template_attack(profiling, doubled, {gt}) == true_key);

    TraceDataset empty = take_rows(attack, {});
    CHECK_THROWS_AS(template_attack(profiling, empty, {gt}), ConfigError);
    CHECK_THROWS_AS(template_attack(profiling, attack, {999}), ConfigError);
}
