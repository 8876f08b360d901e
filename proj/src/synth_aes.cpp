#include "leaklock/synth_aes.hpp"

#include <algorithm>
#include <numeric>

#include "leaklock/aes.hpp"

namespace leaklock {

void SyntheticAesConfig::validate() const {
  if (n < 1 || t < 1) throw ConfigError("synthetic AES needs n >= 1 and t >= 1");
  if (n_bits != 8) throw ConfigError("synthetic AES supports n_bits = 8 only");
  if (n_ops < 1) throw ConfigError("n_ops must be >= 1");
  if (n_lkg < 0) throw ConfigError("n_lkg must be >= 0");
  if (var_data < 0.0 || var_op < 0.0 || var_resid < 0.0)
    throw ConfigError("variances must be nonnegative");
  if (lowpass_beta < 0.0 || lowpass_beta >= 1.0) throw ConfigError("lowpass beta must be in [0,1)");
  if (max_no_ops < 0) throw ConfigError("max_no_ops must be >= 0");
  if (shuffle_locations < 1) throw ConfigError("shuffle_locations must be >= 1");
  const Index slots = static_cast<Index>(n_lkg) * shuffle_locations * (boolean_masking ? 2 : 1);
  if (slots > t) throw ConfigError("leaky placements exceed trace length");
}

void lowpass_filter(Eigen::Ref<Eigen::RowVectorXd> trace, double beta) {
  if (beta < 0.0 || beta >= 1.0) throw ConfigError("lowpass beta must be in [0,1)");
  if (beta == 0.0) return;
  for (Index t = 1; t < trace.size(); ++t)
    trace(t) = beta * trace(t - 1) + (1.0 - beta) * trace(t);
}

SynthAes::SynthAes(const SyntheticAesConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);

  // Fixed operation schedule: one power level per operation id.
  std::uniform_int_distribution<int> op_pick(0, cfg_.n_ops - 1);
  std::normal_distribution<double> op_noise(0.0, std::sqrt(cfg_.var_op));
  Vector per_op(cfg_.n_ops);
  for (int o = 0; o < cfg_.n_ops; ++o) per_op(o) = op_noise(rng);
  op_power_.resize(cfg_.t);
  for (Index t = 0; t < cfg_.t; ++t) op_power_(t) = per_op(op_pick(rng));

  // Leaky slots, sampled without replacement across all events/shares/locations.
  const int shares = cfg_.boolean_masking ? 2 : 1;
  std::vector<Index> all(cfg_.t);
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), rng);
  size_t next = 0;
  placements_.resize(cfg_.n_lkg);
  for (auto& event : placements_) {
    event.resize(shares);
    for (auto& share_slots : event) {
      share_slots.resize(cfg_.shuffle_locations);
      for (auto& s : share_slots) s = all[next++];
    }
  }

  std::vector<bool> seen(cfg_.t, false);
  for (const auto& event : placements_)
    for (const auto& share_slots : event)
      for (Index s : share_slots)
        for (int j = 0; j <= cfg_.max_no_ops; ++j)
          if (s + j < cfg_.t) seen[s + j] = true;
  for (Index t = 0; t < cfg_.t; ++t)
    if (seen[t]) ground_truth_.push_back(t);
}

void SynthAes::fill_trace(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> row, TraceAux& aux) const {
  std::uniform_int_distribution<int> byte_pick(0, 255);
  std::normal_distribution<double> resid(0.0, std::sqrt(cfg_.var_resid));
  const double sigma_data = std::sqrt(cfg_.var_data);
  auto data_term = [&](uint8_t d) { return sigma_data * (4.0 - hamming_weight(d)) / std::sqrt(2.0); };

  aux.key = static_cast<uint8_t>(byte_pick(rng));
  aux.plaintext = static_cast<uint8_t>(byte_pick(rng));
  const uint8_t y = sbox(aux.key ^ aux.plaintext);
  aux.label = y;
  aux.mask = static_cast<uint8_t>(byte_pick(rng));
  aux.masked_value = static_cast<uint8_t>(y ^ aux.mask);

  std::vector<uint8_t> data(cfg_.t);
  for (Index t = 0; t < cfg_.t; ++t) data[t] = static_cast<uint8_t>(byte_pick(rng));
  std::uniform_int_distribution<int> loc_pick(0, cfg_.shuffle_locations - 1);
  for (const auto& event : placements_) {
    if (cfg_.boolean_masking) {
      data[event[0][loc_pick(rng)]] = aux.mask;
      data[event[1][loc_pick(rng)]] = aux.masked_value;
    } else {
      data[event[0][loc_pick(rng)]] = y;
    }
  }

  for (Index t = 0; t < cfg_.t; ++t) row(t) = data_term(data[t]) + op_power_(t) + resid(rng);

  if (cfg_.max_no_ops > 0) {
    std::uniform_int_distribution<int> shift_pick(0, cfg_.max_no_ops);
    const int j = shift_pick(rng);
    if (j > 0) {
      std::normal_distribution<double> op_noise(0.0, std::sqrt(cfg_.var_op));
      for (Index t = cfg_.t - 1; t >= j; --t) row(t) = row(t - j);
      // Head padding mimics a non-leaky timestep: random data + fresh
      // operation draw + residual noise.
      for (Index t = 0; t < j; ++t)
        row(t) = data_term(static_cast<uint8_t>(byte_pick(rng))) + op_noise(rng) + resid(rng);
    }
  }

  lowpass_filter(row, cfg_.lowpass_beta);
}

TraceDataset SynthAes::generate() const {
  Rng rng(cfg_.seed + 0x9e3779b97f4a7c15ULL);  // distinct stream from the structure draws
  TraceDataset ds;
  ds.traces.resize(cfg_.n, cfg_.t);
  ds.labels.resize(cfg_.n);
  ds.label_cardinality = 256;
  ds.ground_truth = ground_truth_;
  ds.aux.emplace_back("k", std::vector<uint16_t>(cfg_.n));
  ds.aux.emplace_back("w", std::vector<uint16_t>(cfg_.n));
  if (cfg_.boolean_masking) {
    ds.aux.emplace_back("share_m", std::vector<uint16_t>(cfg_.n));
    ds.aux.emplace_back("share_my", std::vector<uint16_t>(cfg_.n));
  } else {
    ds.aux.emplace_back("share_y", std::vector<uint16_t>(cfg_.n));
  }

  TraceAux aux;
  for (Index i = 0; i < cfg_.n; ++i) {
    fill_trace(rng, ds.traces.row(i), aux);
    ds.labels[i] = aux.label;
    ds.aux[0].second[i] = aux.key;
    ds.aux[1].second[i] = aux.plaintext;
    if (cfg_.boolean_masking) {
      ds.aux[2].second[i] = aux.mask;
      ds.aux[3].second[i] = aux.masked_value;
    } else {
      ds.aux[2].second[i] = static_cast<uint16_t>(aux.label);
    }
  }
  return ds;
}

BatchSource::Batch SynthAes::next_batch(Index n, Rng& rng) {
  Batch batch;
  batch.x.resize(n, cfg_.t);
  batch.labels.resize(n);
  TraceAux aux;
  for (Index i = 0; i < n; ++i) {
    fill_trace(rng, batch.x.row(i), aux);
    batch.labels[i] = aux.label;
  }
  return batch;
}

TraceDataset gen_synthetic_aes(const SyntheticAesConfig& cfg) { return SynthAes(cfg).generate(); }

}  // namespace leaklock
