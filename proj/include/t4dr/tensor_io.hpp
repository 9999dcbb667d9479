#pragma once

#include <string>

#include "t4dr/tensor.hpp"

namespace t4dr {

// Binary tensor container, little-endian:
//   magic "T4DR" | u8 version (1) | u8 dtype (0 = f64) | u32 rank | rank x u64 dims | payload
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace t4dr
