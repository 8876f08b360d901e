#pragma once

#include <string>
#include <vector>

#include "leaklock/baselines.hpp"
#include "leaklock/dataset.hpp"
#include "leaklock/mlp.hpp"

namespace leaklock {

/// Spearman rank correlation with average-tie fractional ranks; a constant
/// input yields 0 with a warning.
double spearman(const Vector& a, const Vector& b);

/// Spearman between the assessment averaged over each width-W window
/// (stride 1) and a sliding-window profile of length T - W + 1.
double compare_to_ogmm(const Vector& assessment, const Vector& profile, Index window);

enum class OcclusionDirection { Forward, Reverse };

struct OcclusionCurve {
    OcclusionDirection direction = OcclusionDirection::Forward;
    std::vector<Index> unmasked_counts;  // 0..T
    std::vector<double> mean_ranks;
    double auc = 0.0;  // mean of the rank values

    void save_csv(const std::string& path) const;
};

/// Rank-vs-unmasked-count curve for a masked-input classifier (input dim 2T).
/// Starts all-occluded; unmasks highest-scored-first (forward) or
/// lowest-first (reverse), ties broken toward the lower timestep.
OcclusionCurve occlusion_test(const Mlp& model, const TraceDataset& dataset,
                              const LeakageAssessment& assessment,
                              OcclusionDirection direction);

/// Rank of the true key among 256 hypotheses after each accumulated attack
/// trace, scoring log p(Sbox(k xor w) | x) with the model. Needs aux column
/// "w" and |Y| = 256.
std::vector<int> key_rank_accumulation(const Mlp& model, const TraceDataset& attack,
                                       uint8_t true_key);

/// Classical Gaussian template attack over the given points of interest:
/// per-class templates fit on the profiling set, key byte predicted as the
/// argmax of summed log-likelihoods plus log class counts.
uint8_t template_attack(const TraceDataset& profiling, const TraceDataset& attack,
                        const std::vector<Index>& points_of_interest);

}  // namespace leaklock
