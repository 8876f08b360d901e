#pragma once

#include "leaklock/dataset.hpp"

namespace leaklock {

/// Toy Gaussian datasets. Labels Y in {-1,+1} are stored as {0,1} with the
/// fixed mapping -1 -> 0, +1 -> 1.
struct ToyConfig {
  enum class Variant { SecondOrder, Redundant };
  Variant variant = Variant::SecondOrder;
  double sigma2 = 0.5;  // first-order noise variance
  Index n_leaky = 1;    // redundant variant only
  Index n = 100000;
  uint64_t seed = 0;

  void validate() const;
};

/// T=4 features: X_rand, X_1o, X_2o1 = (Y xor M) + noise, X_2o2 = M + noise.
/// Share columns share_m and share_my store M and Y xor M as {0,1}.
TraceDataset gen_toy_second_order(const ToyConfig& cfg);

/// T = n_leaky + 1 features: X_0 nonleaky, X_1..X_n ~ N(Y, sigma2) i.i.d.
TraceDataset gen_toy_redundant(const ToyConfig& cfg);

TraceDataset gen_toy(const ToyConfig& cfg);

/// Streaming source emulating unlimited data: every batch is a fresh draw
/// from the toy distribution.
class ToyStream : public BatchSource {
 public:
  explicit ToyStream(const ToyConfig& cfg) : cfg_(cfg) { cfg_.validate(); }
  Batch next_batch(Index n, Rng& rng) override;
  Index feature_dim() const override;
  int label_cardinality() const override { return 2; }

 private:
  ToyConfig cfg_;
};

}  // namespace leaklock
