#include "dcs/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace dcs {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'E', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kRank = 4;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, std::size_t offset, const char* field) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    std::ostringstream os;
    os << "truncated header reading " << field;
    throw TensorFormatError(os.str(), offset);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

TensorFormatError::TensorFormatError(const std::string& msg, std::size_t byte_offset)
    : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
      offset_(byte_offset) {}

Tensor4 read_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TensorFormatError("cannot open '" + path + "'", 0);

  char magic[4];
  if (!is.read(magic, 4)) throw TensorFormatError("truncated header reading magic", 0);
  if (std::memcmp(magic, kMagic, 4) != 0) throw TensorFormatError("bad magic", 0);

  const std::uint32_t version = get_u32(is, 4, "version");
  if (version != kVersion)
    throw TensorFormatError("unsupported version " + std::to_string(version), 4);
  const std::uint32_t rank = get_u32(is, 8, "rank");
  if (rank != kRank) throw TensorFormatError("unsupported rank " + std::to_string(rank), 8);

  std::uint32_t dims[4];
  for (int i = 0; i < 4; ++i) dims[i] = get_u32(is, 12 + 4 * i, "dims");
  for (int i = 0; i < 4; ++i) {
    if (dims[i] < 1) throw TensorFormatError("zero dimension", 12 + 4 * i);
  }

  const std::size_t count =
      static_cast<std::size_t>(dims[0]) * dims[1] * dims[2] * dims[3];
  std::vector<float> payload(count);
  if (!is.read(reinterpret_cast<char*>(payload.data()), count * sizeof(float))) {
    const std::size_t got = static_cast<std::size_t>(is.gcount());
    throw TensorFormatError("truncated payload", 28 + got);
  }
  static_assert(std::endian::native == std::endian::little,
                "DTEN payload IO assumes a little-endian host");

  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = static_cast<double>(payload[i]);
  Tensor4 t(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]),
            static_cast<int>(dims[3]), std::move(data));
  t.require_finite("read_tensor");
  return t;
}

void write_tensor(const std::string& path, const Tensor4& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TensorFormatError("cannot open '" + path + "' for writing", 0);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, kRank);
  put_u32(os, static_cast<std::uint32_t>(t.n()));
  put_u32(os, static_cast<std::uint32_t>(t.c()));
  put_u32(os, static_cast<std::uint32_t>(t.h()));
  put_u32(os, static_cast<std::uint32_t>(t.w()));
  std::vector<float> payload(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) payload[i] = static_cast<float>(t[i]);
  os.write(reinterpret_cast<const char*>(payload.data()), payload.size() * sizeof(float));
  if (!os) throw TensorFormatError("write failed for '" + path + "'", 28);
}

}  // namespace dcs
