#include "leaklock/supervised.hpp"

#include <cmath>
#include <limits>

namespace leaklock {

void SupervisedConfig::validate() const {
    if (steps <= 0) throw ConfigError("SupervisedConfig: steps must be positive");
    if (batch_size <= 0) throw ConfigError("SupervisedConfig: batch size must be positive");
    if (val_interval <= 0) throw ConfigError("SupervisedConfig: val interval must be positive");
    if (hidden.empty()) throw ConfigError("SupervisedConfig: need at least one hidden layer");
}

double validation_rank(const Matrix& log_probs, std::span<const int> labels) {
    if (log_probs.rows() != static_cast<Index>(labels.size()))
        throw ShapeError("validation_rank: label count mismatch");
    double total = 0.0;
    for (Index r = 0; r < log_probs.rows(); ++r) {
        const double correct = log_probs(r, labels[r]);
        int rank = 0;
        for (Index c = 0; c < log_probs.cols(); ++c)
            if (log_probs(r, c) >= correct) ++rank;
        total += rank;
    }
    return total / static_cast<double>(log_probs.rows());
}

double validation_rank(const Mlp& model, const TraceDataset& dataset) {
    return validation_rank(mlp_forward(model, dataset.traces), dataset.labels);
}

double validation_loss(const Mlp& model, const TraceDataset& dataset) {
    return nll_loss(mlp_forward(model, dataset.traces), dataset.labels);
}

SupervisedResult train_supervised(BatchSource& train, const TraceDataset& val,
                                  const SupervisedConfig& cfg) {
    cfg.validate();
    val.validate();

    std::vector<Index> dims;
    dims.push_back(train.feature_dim());
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(train.label_cardinality());

    Rng rng(cfg.seed);
    Mlp model(dims);
    xavier_init(model, rng);

    AdamWConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    opt_cfg.beta1 = cfg.beta1;
    opt_cfg.weight_decay = cfg.weight_decay;
    auto params = mlp_param_refs(model);
    AdamW opt(opt_cfg, params);

    LrSchedule schedule;
    schedule.kind = cfg.schedule;
    schedule.base_rate = cfg.lr;
    schedule.total_steps = cfg.steps;

    SupervisedResult out;
    out.record.best_val_rank = std::numeric_limits<double>::infinity();

    int consecutive_bad = 0;
    for (long step = 1; step <= cfg.steps; ++step) {
        auto batch = train.next_batch(cfg.batch_size, rng);
        BackwardOptions opts;
        opts.input_grads = false;
        BackwardResult back = mlp_backward(model, batch.x, batch.labels, opts);

        if (!std::isfinite(back.loss)) {
            if (++consecutive_bad >= 10) {
                out.record.failed = true;
                out.record.failure_reason = "diverged: persistently non-finite loss";
                break;
            }
        } else {
            consecutive_bad = 0;
        }

        auto grads = mlp_grad_refs(back.grad_params);
        opt.step(params, grads, schedule.rate(step - 1));

        RunRecord::MetricRow row;
        row.step = step;
        row.loss = back.loss;
        if (step % cfg.val_interval == 0 || step == cfg.steps) {
            const Matrix log_probs = mlp_forward(model, val.traces);
            row.has_val = true;
            row.val_rank = validation_rank(log_probs, val.labels);
            row.val_loss = nll_loss(log_probs, val.labels);
            if (row.val_rank < out.record.best_val_rank) {
                out.record.best_val_rank = row.val_rank;
                out.record.best_step = step;
                out.record.best_model = model;
            }
        }
        out.record.metrics.push_back(row);
    }

    out.record.final_model = model;
    if (out.record.best_step < 0) out.record.best_model = model;
    out.model = out.record.best_model;
    return out;
}

size_t select_best_trial(const std::vector<TrialSummary>& trials) {
    if (trials.empty()) throw ConfigError("select_best_trial: no trials");
    double best_rank = std::numeric_limits<double>::infinity();
    for (const auto& t : trials) best_rank = std::min(best_rank, t.min_val_rank);
    const double cutoff = 1.01 * best_rank;
    size_t best = trials.size();
    for (size_t i = 0; i < trials.size(); ++i) {
        if (trials[i].min_val_rank > cutoff) continue;
        if (best == trials.size() || trials[i].val_loss < trials[best].val_loss) best = i;
    }
    return best;
}

}  // namespace leaklock
