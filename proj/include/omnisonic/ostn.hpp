#pragma once

#include <string>

#include "omnisonic/tensor.hpp"

namespace omnisonic {

// OSTN tensor container: magic "OSTN", u32 rank, rank u32 dims, then
// row-major f32 payload. All integers and floats little-endian.
void write_ostn(const std::string& path, const Tensor& t);
Tensor read_ostn(const std::string& path);

}  // namespace omnisonic
