#pragma once

#include <vector>

#include "leaklock/dataset.hpp"
#include "leaklock/mlp.hpp"
#include "leaklock/optim.hpp"
#include "leaklock/run_record.hpp"

namespace leaklock {

struct SupervisedConfig {
    std::vector<Index> hidden = {500};
    double lr = 1e-3;
    double beta1 = 0.9;
    double weight_decay = 0.0;
    LrSchedule::Kind schedule = LrSchedule::Kind::Constant;
    long steps = 10000;
    Index batch_size = 1000;
    long val_interval = 100;
    uint64_t seed = 0;

    void validate() const;
};

struct SupervisedResult {
    Mlp model;  // checkpoint with the minimal validation rank
    RunRecord record;
};

/// Minibatch NLL training with AdamW-style updates; validation every
/// val_interval steps; the checkpoint with minimal validation rank is
/// retained. Persistently non-finite loss marks the run failed.
SupervisedResult train_supervised(BatchSource& train, const TraceDataset& val,
                                  const SupervisedConfig& cfg);

/// Mean over the dataset of the number of labels given at least as much
/// probability as the correct one (ties counted; 1 is best).
double validation_rank(const Mlp& model, const TraceDataset& dataset);
double validation_rank(const Matrix& log_probs, std::span<const int> labels);

double validation_loss(const Mlp& model, const TraceDataset& dataset);

struct TrialSummary {
    double min_val_rank = 0.0;
    double val_loss = 0.0;
};

/// Discards trials whose minimum rank exceeds 1.01x the best, then picks the
/// minimal validation loss; ties resolve to the lowest index.
size_t select_best_trial(const std::vector<TrialSummary>& trials);

}  // namespace leaklock
