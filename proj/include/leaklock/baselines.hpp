#pragma once

#include <string>
#include <vector>

#include "leaklock/dataset.hpp"

namespace leaklock {

/// Per-timestep leakiness scores from one localization method.
struct LeakageAssessment {
    Vector scores;
    std::string method;
    uint64_t seed = 0;

    void validate() const;  // finite, nonnegative
};

/// Var_Y E[X|Y] / E_Y Var[X|Y] per timestep. Zero within-class variance at a
/// timestep yields score 0 with a warning on stderr.
LeakageAssessment snr(const TraceDataset& dataset);

/// Sum over observed class pairs of squared mean differences per timestep.
LeakageAssessment sosd(const TraceDataset& dataset);

/// |Pearson correlation(HammingWeight(y), x_t)| per timestep; binary labels
/// use the label itself as the power model.
LeakageAssessment cpa(const TraceDataset& dataset);

// Assessment CSV with header "t,score,method,seed".
void save_assessment(const LeakageAssessment& assessment, const std::string& path);
LeakageAssessment load_assessment(const std::string& path);

}  // namespace leaklock
