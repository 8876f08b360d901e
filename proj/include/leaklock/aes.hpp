#pragma once

#include <cstdint>

namespace leaklock {

int hamming_weight(uint8_t b);
uint8_t sbox(uint8_t b);
uint8_t inv_sbox(uint8_t b);

}  // namespace leaklock
