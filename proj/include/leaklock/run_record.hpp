#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "leaklock/common.hpp"
#include "leaklock/mlp.hpp"

namespace leaklock {

/// Bookkeeping for one training run: losses per step, periodic validation
/// metrics, erasure-probability snapshots, and the retained checkpoints.
struct RunRecord {
    std::string config_toml;

    struct MetricRow {
        int64_t step = 0;
        double loss = 0.0;
        bool has_val = false;
        double val_rank = 0.0;
        double val_loss = 0.0;
    };
    std::vector<MetricRow> metrics;

    std::vector<std::pair<int64_t, Vector>> gamma_log;

    bool failed = false;
    std::string failure_reason;

    int64_t best_step = -1;
    double best_val_rank = 0.0;
    Mlp best_model;
    Mlp final_model;

    void validate() const;  // monotone step indices
};

/// Persists a run as a directory: config.toml, metrics.csv
/// (step,loss,val_rank,val_loss), gamma.csv (step,g1..gT), and
/// checkpoints/{best,final}.llmd.
void save_run_record(const RunRecord& record, const std::string& dir);
RunRecord load_run_record(const std::string& dir);

}  // namespace leaklock
