#pragma once

#include <vector>

#include "leaklock/dataset.hpp"
#include "leaklock/erasure.hpp"
#include "leaklock/estimators.hpp"
#include "leaklock/run_record.hpp"

namespace leaklock {

struct AllConfig {
    std::vector<Index> hidden = {500};
    double lr_theta = 1e-3;
    double lr_eta = 1e-3;
    double gamma_bar = 0.5;
    double weight_decay = 0.0;  // classifier only; eta gets none
    long ratio = 2;             // eta steps per theta step
    long pretrain_steps = 0;
    long train_steps = 10000;
    Index batch_size = 1000;
    long gamma_log_interval = 100;
    long val_interval = 100;
    RelaxationConfig relax;
    uint64_t seed = 0;

    void validate() const;
};

struct AllResult {
    Mlp model;
    ErasureParams params;
    Vector final_gamma;  // the leakage assessment
    RunRecord record;    // gamma trajectory lives in record.gamma_log
};

/// Alternating minimax loop: an optional classifier pretrain phase with the
/// erasure probabilities frozen at gamma_bar, then per outer step one
/// classifier ascent step on a freshly masked minibatch followed by `ratio`
/// REBAR descent steps on eta_tilde, each on an independent minibatch.
/// Aborts if the classifier is still at chance after pretraining.
AllResult train_all(BatchSource& train, const TraceDataset& val, const AllConfig& cfg);

/// Trains a 2T-input classifier on per-row Bernoulli(1 - gamma_bar) masks
/// with gaussian fill and a fixed mask rate; used as the occluded evaluator
/// in the occlusion tests. Checkpoint selection matches train_supervised but
/// validation uses masked inputs.
struct MaskedSupervisedConfig {
    std::vector<Index> hidden = {500};
    double lr = 1e-3;
    double weight_decay = 0.0;
    double gamma_bar = 0.5;
    long steps = 10000;
    Index batch_size = 1000;
    long val_interval = 100;
    NoiseFill fill = NoiseFill::Gaussian;
    uint64_t seed = 0;
};
Mlp train_masked_supervised(BatchSource& train, const TraceDataset& val,
                            const MaskedSupervisedConfig& cfg);

/// log p(y | x masked by alpha_full) - log p(y | x masked by alpha_sub),
/// zero fill; the model sees concat(masked trace, alpha).
double pointwise_mi(const Mlp& model, const Vector& trace, int label,
                    const Vector& alpha_full, const Vector& alpha_sub);

}  // namespace leaklock
