#pragma once

#include <stdexcept>
#include <string>

#include "dcs/tensor.hpp"

namespace dcs {

// DTEN binary format, little-endian throughout:
//   magic   4 bytes "DTEN"
//   version u32 = 1
//   rank    u32 = 4
//   dims    4 x u32 (n, c, h, w)
//   payload n*c*h*w x f32 IEEE-754, NCHW row-major
// Values are narrowed to 32-bit on write and widened on read.

class TensorFormatError : public std::runtime_error {
 public:
  TensorFormatError(const std::string& msg, std::size_t byte_offset);
  std::size_t byte_offset() const { return offset_; }

 private:
  std::size_t offset_;
};

Tensor4 read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor4& t);

}  // namespace dcs
