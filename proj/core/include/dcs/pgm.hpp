#pragma once

#include <string>

#include "dcs/tensor.hpp"

namespace dcs {

// 16-bit P5 PGM (big-endian payload per the PGM standard). Values are
// mapped linearly from [range_min, range_max] to [0, 65535] and the
// mapping is documented in a header comment line.
void write_pgm16(const std::string& path, const Tensor4& map, double range_min, double range_max);

// Parses a 16-bit P5 PGM back to a 1x1xHxW tensor with the inverse mapping.
Tensor4 read_pgm16(const std::string& path, double range_min, double range_max);

}  // namespace dcs
