#include "leaklock/adversarial.hpp"

#include <cmath>
#include <limits>

#include "leaklock/optim.hpp"
#include "leaklock/supervised.hpp"

namespace leaklock {

void AllConfig::validate() const {
    if (!(gamma_bar > 0.0 && gamma_bar < 1.0))
        throw ConfigError("AllConfig: gamma_bar must lie in (0,1)");
    if (ratio < 1) throw ConfigError("AllConfig: ratio must be >= 1");
    if (train_steps <= 0) throw ConfigError("AllConfig: train_steps must be positive");
    if (pretrain_steps < 0) throw ConfigError("AllConfig: pretrain_steps must be nonnegative");
    if (batch_size <= 0) throw ConfigError("AllConfig: batch size must be positive");
    if (hidden.empty()) throw ConfigError("AllConfig: need at least one hidden layer");
    relax.validate();
}

namespace {

/// Per-row hard-masked input: row i = concat(x_i .* b_i + e_i .* (1-b_i), b_i)
/// with fresh Bernoulli masks and fill noise per row.
Matrix per_row_masked_input(const Matrix& traces, const Vector& gamma, NoiseFill fill,
                            Rng& rng) {
    const Index n = traces.rows();
    const Index t = traces.cols();
    Matrix input(n, 2 * t);
    for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < t; ++c) {
            const double u = uniform_open(rng);
            const bool keep = logit(1.0 - gamma[c]) + logit(u) >= 0.0;
            const double e = fill == NoiseFill::Gaussian ? gaussian(rng) : 0.0;
            input(r, c) = keep ? traces(r, c) : e;
            input(r, t + c) = keep ? 1.0 : 0.0;
        }
    }
    return input;
}

double masked_val_rank(const Mlp& model, const TraceDataset& val, const Vector& gamma,
                       NoiseFill fill, uint64_t seed, double* val_loss) {
    Rng rng(seed);
    const Matrix input = per_row_masked_input(val.traces, gamma, fill, rng);
    const Matrix log_probs = mlp_forward(model, input);
    if (val_loss) *val_loss = nll_loss(log_probs, val.labels);
    return validation_rank(log_probs, val.labels);
}

}  // namespace

AllResult train_all(BatchSource& train, const TraceDataset& val, const AllConfig& cfg) {
    cfg.validate();
    val.validate();

    const Index t = train.feature_dim();
    const int n_classes = train.label_cardinality();

    std::vector<Index> dims;
    dims.push_back(2 * t);
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(n_classes);

    Rng rng(cfg.seed);
    AllResult out;
    out.model = Mlp(dims);
    xavier_init(out.model, rng);

    out.params.eta_tilde = Vector::Zero(t);
    out.params.gamma_bar = cfg.gamma_bar;

    AdamWConfig theta_cfg;
    theta_cfg.lr = cfg.lr_theta;
    theta_cfg.weight_decay = cfg.weight_decay;
    auto theta_params = mlp_param_refs(out.model);
    AdamW theta_opt(theta_cfg, theta_params);

    AdamWConfig eta_cfg;
    eta_cfg.lr = cfg.lr_eta;
    eta_cfg.weight_decay = 0.0;
    std::vector<ParamRef> eta_params = {
        {out.params.eta_tilde.data(), out.params.eta_tilde.size(), false}};
    AdamW eta_opt(eta_cfg, eta_params);

    const Vector gamma_frozen = Vector::Constant(t, cfg.gamma_bar);
    const double chance_rank_cutoff = 0.95 * (n_classes + 1) / 2.0;

    auto theta_step = [&](const Vector& gamma) -> double {
        auto batch = train.next_batch(cfg.batch_size, rng);
        const Matrix input = per_row_masked_input(batch.x, gamma, cfg.relax.noise_fill, rng);
        BackwardOptions opts;
        opts.input_grads = false;
        BackwardResult back = mlp_backward(out.model, input, batch.labels, opts);
        auto grads = mlp_grad_refs(back.grad_params);
        theta_opt.step(theta_params, grads);
        return back.loss;
    };

    for (long step = 1; step <= cfg.pretrain_steps; ++step) theta_step(gamma_frozen);

    if (cfg.pretrain_steps > 0) {
        // evaluate with everything visible: at high gamma_bar even a perfect
        // classifier stays near chance on gamma_bar-masked validation rows,
        // so the masked rank cannot tell "learned" from "stuck at random"
        const double rank =
            masked_val_rank(out.model, val, Vector::Zero(t), cfg.relax.noise_fill, rng(), nullptr);
        if (rank > chance_rank_cutoff) {
            out.record.failed = true;
            out.record.failure_reason =
                "classifier at chance after pretraining (val rank " + std::to_string(rank) +
                " > " + std::to_string(chance_rank_cutoff) + ")";
            out.final_gamma = gamma_from_eta(out.params);
            out.record.final_model = out.model;
            out.record.best_model = out.model;
            return out;
        }
    }

    for (long step = 1; step <= cfg.train_steps; ++step) {
        const Vector gamma = gamma_from_eta(out.params);

        RunRecord::MetricRow row;
        row.step = step;
        row.loss = theta_step(gamma);

        for (long k = 0; k < cfg.ratio; ++k) {
            auto batch = train.next_batch(cfg.batch_size, rng);
            Vector grad = rebar_gradient(out.model, batch.x, batch.labels, out.params,
                                         cfg.relax, rng);
            std::vector<ParamRef> grad_ref = {{grad.data(), grad.size(), false}};
            eta_opt.step(eta_params, grad_ref);
        }

        if (step % cfg.val_interval == 0 || step == cfg.train_steps) {
            row.has_val = true;
            row.val_rank = masked_val_rank(out.model, val, gamma_from_eta(out.params),
                                           cfg.relax.noise_fill, rng(), &row.val_loss);
        }
        out.record.metrics.push_back(row);

        if (step % cfg.gamma_log_interval == 0 || step == cfg.train_steps) {
            if (out.record.gamma_log.empty() || out.record.gamma_log.back().first != step)
                out.record.gamma_log.emplace_back(step, gamma_from_eta(out.params));
        }
    }

    out.final_gamma = gamma_from_eta(out.params);
    out.record.final_model = out.model;
    out.record.best_model = out.model;
    out.record.best_step = cfg.train_steps;
    return out;
}

Mlp train_masked_supervised(BatchSource& train, const TraceDataset& val,
                            const MaskedSupervisedConfig& cfg) {
    if (cfg.steps <= 0) throw ConfigError("train_masked_supervised: steps must be positive");
    const Index t = train.feature_dim();

    std::vector<Index> dims;
    dims.push_back(2 * t);
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(train.label_cardinality());

    Rng rng(cfg.seed);
    Mlp model(dims);
    xavier_init(model, rng);

    AdamWConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    opt_cfg.weight_decay = cfg.weight_decay;
    auto params = mlp_param_refs(model);
    AdamW opt(opt_cfg, params);

    const Vector gamma = Vector::Constant(t, cfg.gamma_bar);
    Mlp best = model;
    double best_rank = std::numeric_limits<double>::infinity();

    for (long step = 1; step <= cfg.steps; ++step) {
        auto batch = train.next_batch(cfg.batch_size, rng);
        const Matrix input = per_row_masked_input(batch.x, gamma, cfg.fill, rng);
        BackwardOptions opts;
        opts.input_grads = false;
        BackwardResult back = mlp_backward(model, input, batch.labels, opts);
        auto grads = mlp_grad_refs(back.grad_params);
        opt.step(params, grads);

        if (step % cfg.val_interval == 0 || step == cfg.steps) {
            const double rank =
                masked_val_rank(model, val, gamma, cfg.fill, rng(), nullptr);
            if (rank < best_rank) {
                best_rank = rank;
                best = model;
            }
        }
    }
    return best;
}

double pointwise_mi(const Mlp& model, const Vector& trace, int label,
                    const Vector& alpha_full, const Vector& alpha_sub) {
    const Index t = trace.size();
    if (alpha_full.size() != t || alpha_sub.size() != t)
        throw ShapeError("pointwise_mi: alpha length mismatch");
    auto log_prob = [&](const Vector& alpha) {
        Matrix input(1, 2 * t);
        for (Index c = 0; c < t; ++c) {
            input(0, c) = trace[c] * alpha[c];
            input(0, t + c) = alpha[c];
        }
        return mlp_forward(model, input)(0, label);
    };
    return log_prob(alpha_full) - log_prob(alpha_sub);
}

}  // namespace leaklock
