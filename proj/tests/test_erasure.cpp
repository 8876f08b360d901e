#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "leaklock/adversarial.hpp"
#include "leaklock/estimators.hpp"
#include "leaklock/toy.hpp"

using namespace leaklock;
using namespace leaklock::test;

namespace {

ErasureParams make_params(Vector eta, double gamma_bar = 0.5) {
    ErasureParams p;
    p.eta_tilde = std::move(eta);
    p.gamma_bar = gamma_bar;
    return p;
}

double budget_sum(const Vector& gamma) {
    double acc = 0.0;
    for (Index i = 0; i < gamma.size(); ++i) acc += cost(gamma[i]);
    return acc;
}

}  // namespace

TEST_CASE("cost: values and domain") {
    CHECK(cost(0.0) == 0.0);
    CHECK(cost(0.5) == 1.0);
    CHECK(cost(0.9) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK_THROWS_AS(cost(1.0), std::domain_error);
    CHECK(cost(0.3) < cost(0.31));  // strictly increasing
}

TEST_CASE("gamma_from_eta: uniform at zero, shift invariant, hand-checked case") {
    const ErasureParams zero = make_params(Vector::Zero(7), 0.3);
    const Vector gamma = gamma_from_eta(zero);
    for (Index i = 0; i < 7; ++i) CHECK(std::abs(gamma[i] - 0.3) <= 1e-12);

    Vector eta(4);
    eta << 0.3, -1.2, 2.0, 0.0;
    const Vector base = gamma_from_eta(make_params(eta));
    const Vector shifted = gamma_from_eta(make_params(eta.array() + 5.0));
    CHECK((base - shifted).cwiseAbs().maxCoeff() <= 1e-12);

    Vector two(2);
    two << std::log(3.0), 0.0;
    const Vector g2 = gamma_from_eta(make_params(two, 0.5));
    CHECK(g2[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(g2[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(budget_sum(g2) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gamma_from_eta: budget identity and coordinate monotonicity") {
    Rng rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index t = 2 + rng() % 12;
        Vector eta(t);
        for (Index i = 0; i < t; ++i) eta[i] = 3.0 * gaussian(rng);
        const double gamma_bar = 0.05 + 0.9 * uniform_open(rng);
        const ErasureParams p = make_params(eta, gamma_bar);
        const Vector gamma = gamma_from_eta(p);
        CHECK(std::abs(budget_sum(gamma) - p.budget()) <= 1e-9);
    }

    Vector eta = Vector::Zero(5);
    const Vector before = gamma_from_eta(make_params(eta));
    eta[2] += 0.5;
    const Vector after = gamma_from_eta(make_params(eta));
    CHECK(after[2] > before[2]);
}

TEST_CASE("sample_mask: keep rates match 1 - gamma") {
    Rng rng(2);
    const int draws = 100000;

    Vector half = Vector::Constant(1, 0.5);
    int kept = 0;
    for (int i = 0; i < draws; ++i) kept += sample_mask(half, rng).hard[0] >= 0.5;
    const double se = std::sqrt(0.25 / draws);
    CHECK(std::abs(kept / static_cast<double>(draws) - 0.5) <= 3.0 * se);

    Vector nearly_one = Vector::Constant(1, 1.0 - 1e-12);
    for (int i = 0; i < 1000; ++i) CHECK(sample_mask(nearly_one, rng).hard[0] == 0.0);

    Vector gamma(4);
    gamma << 0.1, 0.35, 0.7, 0.95;
    Vector keep_count = Vector::Zero(4);
    for (int i = 0; i < draws; ++i) keep_count += sample_mask(gamma, rng).hard;
    for (Index j = 0; j < 4; ++j) {
        const double p = 1.0 - gamma[j];
        const double se_j = std::sqrt(p * (1.0 - p) / draws);
        CHECK(std::abs(keep_count[j] / draws - p) <= 3.0 * se_j);
    }
}

TEST_CASE("sample_mask: hard mask is the sign of z") {
    Rng rng(3);
    Vector gamma(3);
    gamma << 0.2, 0.5, 0.8;
    for (int i = 0; i < 100; ++i) {
        const MaskSample s = sample_mask(gamma, rng);
        for (Index j = 0; j < 3; ++j) CHECK(s.hard[j] == (s.z[j] >= 0.0 ? 1.0 : 0.0));
    }
}

TEST_CASE("conditional_resample: respects the conditioning event") {
    Rng rng(4);
    Vector gamma(2);
    gamma << 0.3, 0.7;
    Vector hard(2);
    hard << 1.0, 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto res = conditional_resample(gamma, hard, rng);
        CHECK(res.z_tilde[0] >= 0.0);
        CHECK(res.z_tilde[1] < 0.0);
    }
}

TEST_CASE("conditional_resample: matches rejection sampling in distribution") {
    const double gamma_val = 0.35;
    Vector gamma = Vector::Constant(1, gamma_val);
    Vector hard = Vector::Constant(1, 1.0);
    const int n = 100000;

    Rng rng(5);
    std::vector<double> resampled(n);
    for (int i = 0; i < n; ++i) resampled[i] = conditional_resample(gamma, hard, rng).z_tilde[0];

    // independent oracle: draw z unconditionally, keep those with hard(z) = 1
    std::vector<double> rejected;
    Rng rng2(6);
    while (rejected.size() < static_cast<size_t>(n)) {
        const MaskSample s = sample_mask(gamma, rng2);
        if (s.hard[0] >= 0.5) rejected.push_back(s.z[0]);
    }

    std::sort(resampled.begin(), resampled.end());
    std::sort(rejected.begin(), rejected.end());
    // two-sample KS statistic
    double ks = 0.0;
    size_t i = 0, j = 0;
    while (i < resampled.size() && j < rejected.size()) {
        if (resampled[i] <= rejected[j])
            ++i;
        else
            ++j;
        ks = std::max(ks, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / n));
    }
    CHECK(ks <= 0.01);
}

TEST_CASE("masked_objective: full mask reduces to the plain supervised value") {
    const Index t = 5;
    const Mlp model = random_mlp({2 * t, 12, 3}, 10);
    const Matrix traces = random_matrix(20, t, 11);
    const auto labels = random_labels(20, 3, 12);
    Rng rng(13);
    const MaskedObjective obj = masked_objective(model, traces, labels, Vector::Ones(t),
                                                 NoiseFill::Gaussian, rng);
    Matrix input(20, 2 * t);
    input.leftCols(t) = traces;
    input.rightCols(t).setOnes();
    CHECK(obj.value == doctest::Approx(-nll_loss(mlp_forward(model, input), labels))
                           .epsilon(1e-12));
}

TEST_CASE("masked_objective: zero mask with zero fill ignores the trace") {
    const Index t = 4;
    const Mlp model = random_mlp({2 * t, 10, 2}, 14);
    const auto labels = random_labels(16, 2, 15);
    Rng rng(16);
    const double a = masked_objective(model, random_matrix(16, t, 17), labels,
                                      Vector::Zero(t), NoiseFill::Zero, rng)
                         .value;
    const double b = masked_objective(model, random_matrix(16, t, 18), labels,
                                      Vector::Zero(t), NoiseFill::Zero, rng)
                         .value;
    CHECK(a == b);
}

TEST_CASE("masked_objective: alpha gradient matches finite differences") {
    const Index t = 6;
    const Mlp model = random_mlp({2 * t, 14, 4}, 19);
    const Matrix traces = random_matrix(12, t, 20);
    const auto labels = random_labels(12, 4, 21);
    Vector alpha(t);
    alpha << 0.9, 0.2, 0.55, 0.7, 0.05, 1.0;

    Rng rng(22);
    const MaskedObjective obj =
        masked_objective(model, traces, labels, alpha, NoiseFill::Zero, rng);
    for (Index j = 0; j < t; ++j) {
        const double saved = alpha[j];
        const double fd = central_diff(
            [&](double v) {
                alpha[j] = v;
                Rng r(0);
                const double val =
                    masked_objective(model, traces, labels, alpha, NoiseFill::Zero, r).value;
                alpha[j] = saved;
                return val;
            },
            saved);
        CHECK(rel_err(obj.grad_alpha[j], fd) <= 1e-4);
    }
}

TEST_CASE("exact_gradient: single-timestep closed form") {
    const Index t = 1;
    const Mlp model = random_mlp({2, 6, 2}, 23);
    const Matrix traces = random_matrix(10, t, 24);
    const auto labels = random_labels(10, 2, 25);
    const ErasureParams p = make_params(Vector::Zero(1), 0.4);
    const Vector gamma = gamma_from_eta(p);

    const Matrix zero_fill = Matrix::Zero(10, 1);
    const double f0 = masked_value(model, traces, labels, Vector::Zero(1), zero_fill);
    const double f1 = masked_value(model, traces, labels, Vector::Ones(1), zero_fill);

    const ExactGradient exact = exact_gradient(model, traces, labels, p);
    CHECK(exact.objective ==
          doctest::Approx(gamma[0] * f0 + (1.0 - gamma[0]) * f1).epsilon(1e-12));
    CHECK(exact.grad_gamma[0] == doctest::Approx(f0 - f1).epsilon(1e-10));
}

TEST_CASE("exact_gradient: uniform objective has zero gradient") {
    const Index t = 3;
    Mlp model({2 * t, 4, 2});
    for (auto& w : model.weights) w.setZero();
    const Matrix traces = random_matrix(8, t, 26);
    const auto labels = random_labels(8, 2, 27);
    Vector eta(3);
    eta << 0.4, -0.2, 1.0;
    const ExactGradient exact = exact_gradient(model, traces, labels, make_params(eta));
    CHECK(exact.grad_eta.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(exact.grad_gamma.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("exact_gradient: eta gradient matches finite differences") {
    const Index t = 4;
    const Mlp model = random_mlp({2 * t, 10, 3}, 28);
    const Matrix traces = random_matrix(10, t, 29);
    const auto labels = random_labels(10, 3, 30);
    Vector eta(t);
    eta << 0.1, -0.6, 0.9, 0.0;
    ErasureParams p = make_params(eta);

    const ExactGradient exact = exact_gradient(model, traces, labels, p);
    for (Index j = 0; j < t; ++j) {
        const double saved = p.eta_tilde[j];
        const double fd = central_diff(
            [&](double v) {
                p.eta_tilde[j] = v;
                const double val = exact_gradient(model, traces, labels, p).objective;
                p.eta_tilde[j] = saved;
                return val;
            },
            saved);
        CHECK(std::abs(exact.grad_eta[j] - fd) <= 1e-6);
    }
    CHECK_THROWS_AS(
        exact_gradient(model, random_matrix(2, 17, 1), random_labels(2, 3, 1),
                       make_params(Vector::Zero(17))),
        ConfigError);
}

TEST_CASE("rebar with kappa=0 equals reinforce on the same randomness") {
    const Index t = 4;
    const Mlp model = random_mlp({2 * t, 8, 2}, 31);
    const Matrix traces = random_matrix(12, t, 32);
    const auto labels = random_labels(12, 2, 33);
    Vector eta(t);
    eta << 0.2, -0.4, 0.0, 0.6;
    const ErasureParams p = make_params(eta);

    RelaxationConfig cfg;
    cfg.control_scale = 0.0;
    cfg.noise_fill = NoiseFill::Zero;
    Rng rng_a(34), rng_b(34);
    const Vector a = rebar_gradient(model, traces, labels, p, cfg, rng_a);
    const Vector b = reinforce_gradient(model, traces, labels, p, NoiseFill::Zero, rng_b);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rebar and reinforce are unbiased against enumeration") {
    const Index t = 4;
    const Mlp model = random_mlp({2 * t, 8, 3}, 35);
    const Matrix traces = random_matrix(8, t, 36);
    const auto labels = random_labels(8, 3, 37);
    Vector eta(t);
    eta << 0.3, -0.5, 0.1, 0.0;
    const ErasureParams p = make_params(eta);
    const ExactGradient exact = exact_gradient(model, traces, labels, p);

    RelaxationConfig cfg;
    cfg.noise_fill = NoiseFill::Zero;  // deterministic objective for the oracle
    const int samples = 20000;

    Rng rng(38);
    std::vector<RunningStats> rebar_stats(t), reinforce_stats(t);
    for (int s = 0; s < samples; ++s) {
        const Vector g = rebar_gradient(model, traces, labels, p, cfg, rng);
        for (Index j = 0; j < t; ++j) rebar_stats[j].add(g[j]);
    }
    Rng rng2(39);
    for (int s = 0; s < samples; ++s) {
        const Vector g = reinforce_gradient(model, traces, labels, p, NoiseFill::Zero, rng2);
        for (Index j = 0; j < t; ++j) reinforce_stats[j].add(g[j]);
    }
    for (Index j = 0; j < t; ++j) {
        CHECK(std::abs(rebar_stats[j].mean - exact.grad_eta[j]) <=
              3.0 * rebar_stats[j].std_error());
        CHECK(std::abs(reinforce_stats[j].mean - exact.grad_eta[j]) <=
              3.0 * reinforce_stats[j].std_error());
    }

    // the control variate should not hurt overall
    double rebar_var = 0.0, reinforce_var = 0.0;
    for (Index j = 0; j < t; ++j) {
        rebar_var += rebar_stats[j].variance();
        reinforce_var += reinforce_stats[j].variance();
    }
    CHECK(rebar_var <= reinforce_var);
}

TEST_CASE("reinforce: score function is zero-mean under a constant objective") {
    const Index t = 3;
    Mlp model({2 * t, 4, 2});
    for (auto& w : model.weights) w.setZero();
    const Matrix traces = random_matrix(6, t, 40);
    const auto labels = random_labels(6, 2, 41);
    const ErasureParams p = make_params(Vector::Zero(t));

    Rng rng(42);
    std::vector<RunningStats> stats(t);
    for (int s = 0; s < 20000; ++s) {
        const Vector g = reinforce_gradient(model, traces, labels, p, NoiseFill::Zero, rng);
        for (Index j = 0; j < t; ++j) stats[j].add(g[j]);
    }
    for (Index j = 0; j < t; ++j)
        CHECK(std::abs(stats[j].mean) <= std::max(3.0 * stats[j].std_error(), 1e-12));
}

TEST_CASE("relaxed mask approaches the hard mask as temperature drops") {
    Rng rng(43);
    Vector gamma(3);
    gamma << 0.3, 0.5, 0.7;
    const MaskSample s = sample_mask(gamma, rng);
    const Vector soft = s.relaxed(1e-6);
    CHECK((soft - s.hard).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("objective gradient pushes erasure toward the leaky coordinate") {
    // Redundant toy with one leaky feature: after training a masked
    // classifier, the exact objective gradient wrt gamma is negative at the
    // leaky coordinate (erasing hurts) and near zero at the noise coordinate.
    ToyConfig cfg;
    cfg.variant = ToyConfig::Variant::Redundant;
    cfg.sigma2 = 0.25;
    cfg.n_leaky = 1;
    cfg.n = 4000;
    cfg.seed = 44;
    const TraceDataset val = gen_toy_redundant(cfg);

    ToyStream stream(cfg);
    MaskedSupervisedConfig train_cfg;
    train_cfg.hidden = {32};
    train_cfg.steps = 1500;
    train_cfg.batch_size = 256;
    train_cfg.fill = NoiseFill::Zero;
    train_cfg.seed = 45;
    const Mlp model = train_masked_supervised(stream, val, train_cfg);

    const ErasureParams p = make_params(Vector::Zero(2));
    const ExactGradient exact =
        exact_gradient(model, val.traces, val.labels, p);
    CHECK(exact.grad_gamma[1] < 0.0);
    CHECK(std::abs(exact.grad_gamma[0]) < 0.1 * std::abs(exact.grad_gamma[1]));
}
