#include "leaklock/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

namespace leaklock {

const std::vector<uint16_t>* TraceDataset::find_aux(const std::string& name) const {
  for (const auto& [n, col] : aux)
    if (n == name) return &col;
  return nullptr;
}

std::vector<std::string> TraceDataset::share_columns() const {
  std::vector<std::string> names;
  for (const auto& [name, col] : aux)
    if (name.starts_with("share_")) names.push_back(name);
  return names;
}

void TraceDataset::validate() const {
  if (static_cast<Index>(labels.size()) != n()) throw ShapeError("label count != trace count");
  for (int y : labels)
    if (y < 0 || y >= label_cardinality) throw std::domain_error("label out of range");
  for (const auto& [name, col] : aux)
    if (static_cast<Index>(col.size()) != n())
      throw ShapeError("aux column '" + name + "' length != trace count");
  for (Index t : ground_truth)
    if (t < 0 || t >= this->t()) throw ShapeError("ground-truth index out of range");
}

StandardizeStats standardize_fit(const TraceDataset& dataset) {
  const Index n = dataset.n(), t = dataset.t();
  if (n < 2) throw ConfigError("standardize_fit needs at least two traces");
  StandardizeStats stats;
  stats.mean = dataset.traces.colwise().mean();
  stats.std = Vector::Zero(t);
  stats.constant.assign(t, false);
  for (Index j = 0; j < t; ++j) {
    const double var =
        (dataset.traces.col(j).array() - stats.mean(j)).square().sum() / static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      stats.std(j) = sd;
    } else {
      stats.std(j) = 1.0;
      stats.constant[j] = true;
    }
  }
  return stats;
}

void standardize_apply(TraceDataset& dataset, const StandardizeStats& stats) {
  if (stats.mean.size() != dataset.t()) throw ShapeError("standardize stats dim mismatch");
  for (Index j = 0; j < dataset.t(); ++j) {
    if (stats.constant[j]) {
      dataset.traces.col(j).setZero();
    } else {
      dataset.traces.col(j) = (dataset.traces.col(j).array() - stats.mean(j)) / stats.std(j);
    }
  }
}

TraceDataset take_rows(const TraceDataset& dataset, const std::vector<Index>& rows) {
  TraceDataset out;
  out.traces.resize(static_cast<Index>(rows.size()), dataset.t());
  out.labels.resize(rows.size());
  out.label_cardinality = dataset.label_cardinality;
  out.ground_truth = dataset.ground_truth;
  for (const auto& [name, col] : dataset.aux)
    out.aux.emplace_back(name, std::vector<uint16_t>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    out.traces.row(static_cast<Index>(i)) = dataset.traces.row(rows[i]);
    out.labels[i] = dataset.labels[rows[i]];
    for (size_t a = 0; a < dataset.aux.size(); ++a)
      out.aux[a].second[i] = dataset.aux[a].second[rows[i]];
  }
  return out;
}

std::vector<TraceDataset> split(const TraceDataset& dataset,
                                const std::vector<double>& fractions, uint64_t seed) {
  const double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

  std::vector<Index> order(dataset.n());
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<TraceDataset> parts;
  Index start = 0;
  for (size_t i = 0; i < fractions.size(); ++i) {
    Index count = (i + 1 == fractions.size())
                      ? dataset.n() - start
                      : static_cast<Index>(std::llround(fractions[i] * dataset.n()));
    if (count <= 0) throw ConfigError("split produces an empty part");
    std::vector<Index> rows(order.begin() + start, order.begin() + start + count);
    parts.push_back(take_rows(dataset, rows));
    start += count;
  }
  return parts;
}

namespace {

constexpr char kMagic[4] = {'S', 'C', 'L', 'D'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kFlagGroundTruth = 1u;

void append_bytes(std::vector<char>& buf, const void* src, size_t n) {
  const char* p = static_cast<const char*>(src);
  buf.insert(buf.end(), p, p + n);
}

template <typename T>
void append_value(std::vector<char>& buf, T value) {
  append_bytes(buf, &value, sizeof(T));
}

uint32_t buffer_crc(const char* data, size_t n) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

struct Reader {
  const std::vector<char>& buf;
  size_t pos = 0;
  void read(void* dst, size_t n) {
    if (pos + n > buf.size()) throw IoError("dataset file truncated");
    std::memcpy(dst, buf.data() + pos, n);
    pos += n;
  }
  template <typename T>
  T value() {
    T v;
    read(&v, sizeof(T));
    return v;
  }
};

}  // namespace

void save_dataset(const TraceDataset& dataset, const std::string& path) {
  dataset.validate();
  std::vector<char> buf;
  append_bytes(buf, kMagic, 4);
  append_value<uint32_t>(buf, kVersion);
  append_value<uint64_t>(buf, static_cast<uint64_t>(dataset.n()));
  append_value<uint64_t>(buf, static_cast<uint64_t>(dataset.t()));
  append_value<uint32_t>(buf, static_cast<uint32_t>(dataset.label_cardinality));
  append_value<uint32_t>(buf, dataset.ground_truth.empty() ? 0u : kFlagGroundTruth);

  for (Index i = 0; i < dataset.n(); ++i)
    for (Index j = 0; j < dataset.t(); ++j)
      append_value<float>(buf, static_cast<float>(dataset.traces(i, j)));
  for (int y : dataset.labels) append_value<uint16_t>(buf, static_cast<uint16_t>(y));

  append_value<uint32_t>(buf, static_cast<uint32_t>(dataset.aux.size()));
  for (const auto& [name, col] : dataset.aux) {
    append_value<uint32_t>(buf, static_cast<uint32_t>(name.size()));
    append_bytes(buf, name.data(), name.size());
    for (uint16_t v : col) append_value<uint16_t>(buf, v);
  }

  append_value<uint64_t>(buf, static_cast<uint64_t>(dataset.ground_truth.size()));
  for (Index t : dataset.ground_truth) append_value<uint64_t>(buf, static_cast<uint64_t>(t));

  append_value<uint32_t>(buf, buffer_crc(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open dataset for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed to write dataset: " + path);
}

TraceDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 + sizeof(uint32_t)) throw IoError("dataset file too short: " + path);

  uint32_t stored = 0;
  std::memcpy(&stored, buf.data() + buf.size() - sizeof(uint32_t), sizeof(uint32_t));
  if (buffer_crc(buf.data(), buf.size() - sizeof(uint32_t)) != stored)
    throw IoError("dataset CRC mismatch: " + path);
  buf.resize(buf.size() - sizeof(uint32_t));

  Reader r{buf};
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad dataset magic: " + path);
  if (r.value<uint32_t>() != kVersion) throw IoError("unsupported dataset version");
  const auto n = static_cast<Index>(r.value<uint64_t>());
  const auto t = static_cast<Index>(r.value<uint64_t>());
  TraceDataset ds;
  ds.label_cardinality = static_cast<int>(r.value<uint32_t>());
  r.value<uint32_t>();  // flags; ground-truth presence is re-derived from the list

  ds.traces.resize(n, t);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < t; ++j) ds.traces(i, j) = static_cast<double>(r.value<float>());
  ds.labels.resize(n);
  for (Index i = 0; i < n; ++i) ds.labels[i] = static_cast<int>(r.value<uint16_t>());

  const uint32_t n_aux = r.value<uint32_t>();
  for (uint32_t a = 0; a < n_aux; ++a) {
    const uint32_t name_len = r.value<uint32_t>();
    std::string name(name_len, '\0');
    r.read(name.data(), name_len);
    std::vector<uint16_t> col(n);
    for (Index i = 0; i < n; ++i) col[i] = r.value<uint16_t>();
    ds.aux.emplace_back(std::move(name), std::move(col));
  }

  const uint64_t n_gt = r.value<uint64_t>();
  for (uint64_t i = 0; i < n_gt; ++i) ds.ground_truth.push_back(static_cast<Index>(r.value<uint64_t>()));

  if (r.pos != buf.size()) throw IoError("trailing bytes in dataset: " + path);
  ds.validate();
  return ds;
}

BatchSource::Batch DatasetSampler::next_batch(Index n, Rng& rng) {
  Batch batch;
  batch.x.resize(n, ds_.t());
  batch.labels.resize(n);
  std::uniform_int_distribution<Index> pick(0, ds_.n() - 1);
  for (Index i = 0; i < n; ++i) {
    const Index r = pick(rng);
    batch.x.row(i) = ds_.traces.row(r);
    batch.labels[i] = ds_.labels[r];
  }
  return batch;
}

}  // namespace leaklock
