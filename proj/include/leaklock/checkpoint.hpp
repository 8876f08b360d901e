#pragma once

#include <string>

#include "leaklock/mlp.hpp"

namespace leaklock {

// "LLMD" model checkpoint: magic, u32 version, u32 dim count, u32 dims,
// per-layer f64 weight/bias arrays (little endian), trailing CRC32.
void save_checkpoint(const Mlp& model, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace leaklock
