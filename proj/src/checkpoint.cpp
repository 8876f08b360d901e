#include "leaklock/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <vector>

namespace leaklock {

namespace {

constexpr char kMagic[4] = {'L', 'L', 'M', 'D'};
constexpr uint32_t kVersion = 1;

void append_bytes(std::vector<char>& buf, const void* src, size_t n) {
  const char* p = static_cast<const char*>(src);
  buf.insert(buf.end(), p, p + n);
}

template <typename T>
void append_value(std::vector<char>& buf, T value) {
  append_bytes(buf, &value, sizeof(T));
}

uint32_t buffer_crc(const std::vector<char>& buf) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
}

struct Reader {
  const std::vector<char>& buf;
  size_t pos = 0;

  void read(void* dst, size_t n) {
    if (pos + n > buf.size()) throw IoError("checkpoint truncated");
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

void save_checkpoint(const Mlp& model, const std::string& path) {
  std::vector<char> buf;
  append_bytes(buf, kMagic, 4);
  append_value<uint32_t>(buf, kVersion);
  append_value<uint32_t>(buf, static_cast<uint32_t>(model.layer_dims.size()));
  for (Index d : model.layer_dims) append_value<uint32_t>(buf, static_cast<uint32_t>(d));
  for (size_t l = 0; l < model.weights.size(); ++l) {
    append_bytes(buf, model.weights[l].data(), sizeof(double) * model.weights[l].size());
    append_bytes(buf, model.biases[l].data(), sizeof(double) * model.biases[l].size());
  }
  const uint32_t crc = buffer_crc(buf);
  append_value<uint32_t>(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed to write checkpoint: " + path);
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 + sizeof(uint32_t) * 3) throw IoError("checkpoint too short: " + path);

  std::vector<char> body(buf.begin(), buf.end() - sizeof(uint32_t));
  uint32_t stored = 0;
  std::memcpy(&stored, buf.data() + buf.size() - sizeof(uint32_t), sizeof(uint32_t));
  if (buffer_crc(body) != stored) throw IoError("checkpoint CRC mismatch: " + path);

  Reader r{body};
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad checkpoint magic: " + path);
  const uint32_t version = r.value<uint32_t>();
  if (version != kVersion) throw IoError("unsupported checkpoint version");
  const uint32_t n_dims = r.value<uint32_t>();
  if (n_dims < 2) throw IoError("checkpoint has fewer than two layer dims");
  std::vector<Index> dims(n_dims);
  for (auto& d : dims) d = static_cast<Index>(r.value<uint32_t>());

  Mlp model(dims);
  for (size_t l = 0; l < model.weights.size(); ++l) {
    r.read(model.weights[l].data(), sizeof(double) * model.weights[l].size());
    r.read(model.biases[l].data(), sizeof(double) * model.biases[l].size());
  }
  if (r.pos != body.size()) throw IoError("trailing bytes in checkpoint: " + path);
  return model;
}

}  // namespace leaklock
