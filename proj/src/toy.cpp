#include "leaklock/toy.hpp"

namespace leaklock {

void ToyConfig::validate() const {
  if (sigma2 <= 0.0) throw ConfigError("toy sigma2 must be positive");
  if (variant == Variant::Redundant && n_leaky < 1)
    throw ConfigError("redundant toy needs n_leaky >= 1");
  if (n < 1) throw ConfigError("toy dataset size must be positive");
}

namespace {

// XOR on {-1,+1}: +1 when the operands differ.
int xor_pm(int a, int b) { return a == b ? -1 : 1; }

void fill_second_order_row(double sigma, Rng& rng, Eigen::Ref<Eigen::RowVectorXd> row,
                           int& label, int& m01, int& my01) {
  std::uniform_int_distribution<int> coin(0, 1);
  const int y = coin(rng) ? 1 : -1;
  const int m = coin(rng) ? 1 : -1;
  const int ym = xor_pm(y, m);
  row(0) = gaussian(rng);
  row(1) = y + sigma * gaussian(rng);
  row(2) = ym + gaussian(rng);
  row(3) = m + gaussian(rng);
  label = y > 0 ? 1 : 0;
  m01 = m > 0 ? 1 : 0;
  my01 = ym > 0 ? 1 : 0;
}

void fill_redundant_row(double sigma, Index n_leaky, Rng& rng,
                        Eigen::Ref<Eigen::RowVectorXd> row, int& label) {
  std::uniform_int_distribution<int> coin(0, 1);
  const int y = coin(rng) ? 1 : -1;
  row(0) = gaussian(rng);
  for (Index j = 0; j < n_leaky; ++j) row(1 + j) = y + sigma * gaussian(rng);
  label = y > 0 ? 1 : 0;
}

}  // namespace

TraceDataset gen_toy_second_order(const ToyConfig& cfg) {
  cfg.validate();
  if (cfg.variant != ToyConfig::Variant::SecondOrder)
    throw ConfigError("config variant is not second_order");
  const double sigma = std::sqrt(cfg.sigma2);
  Rng rng(cfg.seed);

  TraceDataset ds;
  ds.traces.resize(cfg.n, 4);
  ds.labels.resize(cfg.n);
  ds.label_cardinality = 2;
  ds.aux.emplace_back("share_m", std::vector<uint16_t>(cfg.n));
  ds.aux.emplace_back("share_my", std::vector<uint16_t>(cfg.n));
  ds.ground_truth = {1, 2, 3};
  for (Index i = 0; i < cfg.n; ++i) {
    int m01 = 0, my01 = 0;
    fill_second_order_row(sigma, rng, ds.traces.row(i), ds.labels[i], m01, my01);
    ds.aux[0].second[i] = static_cast<uint16_t>(m01);
    ds.aux[1].second[i] = static_cast<uint16_t>(my01);
  }
  return ds;
}

TraceDataset gen_toy_redundant(const ToyConfig& cfg) {
  cfg.validate();
  if (cfg.variant != ToyConfig::Variant::Redundant)
    throw ConfigError("config variant is not redundant");
  const double sigma = std::sqrt(cfg.sigma2);
  Rng rng(cfg.seed);

  TraceDataset ds;
  ds.traces.resize(cfg.n, cfg.n_leaky + 1);
  ds.labels.resize(cfg.n);
  ds.label_cardinality = 2;
  for (Index j = 1; j <= cfg.n_leaky; ++j) ds.ground_truth.push_back(j);
  for (Index i = 0; i < cfg.n; ++i)
    fill_redundant_row(sigma, cfg.n_leaky, rng, ds.traces.row(i), ds.labels[i]);
  return ds;
}

TraceDataset gen_toy(const ToyConfig& cfg) {
  return cfg.variant == ToyConfig::Variant::SecondOrder ? gen_toy_second_order(cfg)
                                                        : gen_toy_redundant(cfg);
}

Index ToyStream::feature_dim() const {
  return cfg_.variant == ToyConfig::Variant::SecondOrder ? 4 : cfg_.n_leaky + 1;
}

BatchSource::Batch ToyStream::next_batch(Index n, Rng& rng) {
  Batch batch;
  batch.x.resize(n, feature_dim());
  batch.labels.resize(n);
  const double sigma = std::sqrt(cfg_.sigma2);
  for (Index i = 0; i < n; ++i) {
    if (cfg_.variant == ToyConfig::Variant::SecondOrder) {
      int m01 = 0, my01 = 0;
      fill_second_order_row(sigma, rng, batch.x.row(i), batch.labels[i], m01, my01);
    } else {
      fill_redundant_row(sigma, cfg_.n_leaky, rng, batch.x.row(i), batch.labels[i]);
    }
  }
  return batch;
}

}  // namespace leaklock
