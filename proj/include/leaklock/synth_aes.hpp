#pragma once

#include "leaklock/dataset.hpp"

namespace leaklock {

struct SyntheticAesConfig {
  Index n = 100000;
  Index t = 101;
  int n_bits = 8;
  int n_ops = 32;
  int n_lkg = 1;
  double var_data = 1.0;
  double var_op = 1.0;
  double var_resid = 1.0;
  double lowpass_beta = 0.0;
  int max_no_ops = 0;
  int shuffle_locations = 1;
  bool boolean_masking = false;
  uint64_t seed = 0;

  void validate() const;
};

/// Causal exponentially-decaying moving average: out_0 = x_0,
/// out_t = beta * out_{t-1} + (1 - beta) * x_t.
void lowpass_filter(Eigen::Ref<Eigen::RowVectorXd> trace, double beta);

/// Synthetic AES power traces under the Hamming weight leakage model.
/// Per-dataset structure (operation schedule, per-operation power, leaky
/// timestep placement) is drawn once from the seed; traces are then i.i.d.
/// Countermeasures are applied in the order masking, shuffling, no-op
/// insertion, low-pass filtering.
class SynthAes : public BatchSource {
 public:
  explicit SynthAes(const SyntheticAesConfig& cfg);

  /// Leaky timesteps after countermeasures: every candidate slot, expanded
  /// by the possible no-op shifts.
  const std::vector<Index>& ground_truth() const { return ground_truth_; }

  /// Full dataset with key/plaintext/share aux columns, reproducible from
  /// the config seed.
  TraceDataset generate() const;

  Batch next_batch(Index n, Rng& rng) override;
  Index feature_dim() const override { return cfg_.t; }
  int label_cardinality() const override { return 256; }

 private:
  struct TraceAux {
    uint8_t key = 0, plaintext = 0, mask = 0, masked_value = 0;
    int label = 0;
  };
  void fill_trace(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> row, TraceAux& aux) const;

  SyntheticAesConfig cfg_;
  Vector op_power_;  // fixed operation-dependent component, length T
  // placements_[event][share] lists the candidate timesteps for one leaky
  // instruction; one candidate per trace is chosen when shuffling.
  std::vector<std::vector<std::vector<Index>>> placements_;
  std::vector<Index> ground_truth_;
};

TraceDataset gen_synthetic_aes(const SyntheticAesConfig& cfg);

}  // namespace leaklock
