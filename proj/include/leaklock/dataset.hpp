#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leaklock/common.hpp"

namespace leaklock {

/// N traces of T samples each, with integer labels and optional auxiliary
/// integer columns (plaintext/key bytes, Boolean-masking shares).
/// Aux columns whose names start with "share_" feed the oGMM assessment.
struct TraceDataset {
  Matrix traces;  // N x T
  std::vector<int> labels;
  int label_cardinality = 0;
  std::vector<std::pair<std::string, std::vector<uint16_t>>> aux;
  std::vector<Index> ground_truth;  // leaky timesteps, when known

  Index n() const { return traces.rows(); }
  Index t() const { return traces.cols(); }

  const std::vector<uint16_t>* find_aux(const std::string& name) const;
  std::vector<std::string> share_columns() const;
  void validate() const;
};

struct StandardizeStats {
  Vector mean;
  Vector std;                   // 1.0 for flagged-constant features
  std::vector<bool> constant;   // features with zero variance on the fit split
};

StandardizeStats standardize_fit(const TraceDataset& dataset);
void standardize_apply(TraceDataset& dataset, const StandardizeStats& stats);

/// Reproducible shuffled partition; fractions must sum to 1 and every part
/// must be non-empty.
std::vector<TraceDataset> split(const TraceDataset& dataset,
                                const std::vector<double>& fractions, uint64_t seed);

TraceDataset take_rows(const TraceDataset& dataset, const std::vector<Index>& rows);

// "SCLD" dataset file with trailing CRC32.
void save_dataset(const TraceDataset& dataset, const std::string& path);
TraceDataset load_dataset(const std::string& path);

/// A minibatch provider; finite datasets resample rows, synthetic streams
/// draw fresh traces for every batch.
class BatchSource {
 public:
  struct Batch {
    Matrix x;
    std::vector<int> labels;
  };

  virtual ~BatchSource() = default;
  virtual Batch next_batch(Index n, Rng& rng) = 0;
  virtual Index feature_dim() const = 0;
  virtual int label_cardinality() const = 0;
};

class DatasetSampler : public BatchSource {
 public:
  explicit DatasetSampler(const TraceDataset& dataset) : ds_(dataset) {}
  Batch next_batch(Index n, Rng& rng) override;
  Index feature_dim() const override { return ds_.t(); }
  int label_cardinality() const override { return ds_.label_cardinality; }

 private:
  const TraceDataset& ds_;
};

}  // namespace leaklock
