#include "dcs/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dcs {

void write_pgm16(const std::string& path, const Tensor4& map, double range_min,
                 double range_max) {
  if (map.n() != 1 || map.c() != 1)
    throw std::invalid_argument("write_pgm16: expected a 1x1xHxW tensor, got " + map.dims_str());
  if (!(range_max > range_min))
    throw std::invalid_argument("write_pgm16: range_max must exceed range_min");

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_pgm16: cannot open '" + path + "'");
  os << "P5\n";
  os << "# linear map [" << range_min << "," << range_max << "] -> [0,65535]\n";
  os << map.w() << " " << map.h() << "\n65535\n";

  const double scale = 65535.0 / (range_max - range_min);
  std::vector<unsigned char> row(static_cast<std::size_t>(map.w()) * 2);
  for (int y = 0; y < map.h(); ++y) {
    for (int x = 0; x < map.w(); ++x) {
      const double v = std::clamp(map.at(0, 0, y, x), range_min, range_max);
      const auto q = static_cast<std::uint16_t>(std::lround((v - range_min) * scale));
      row[2 * x] = static_cast<unsigned char>(q >> 8);
      row[2 * x + 1] = static_cast<unsigned char>(q & 0xff);
    }
    os.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!os) throw std::runtime_error("write_pgm16: write failed for '" + path + "'");
}

Tensor4 read_pgm16(const std::string& path, double range_min, double range_max) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_pgm16: cannot open '" + path + "'");

  auto next_token = [&]() -> std::string {
    std::string tok;
    char ch;
    while (is.get(ch)) {
      if (ch == '#') {
        std::string dummy;
        std::getline(is, dummy);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(ch);
    }
    return tok;
  };

  if (next_token() != "P5") throw std::runtime_error("read_pgm16: not a P5 file");
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (maxval != 65535) throw std::runtime_error("read_pgm16: expected 16-bit maxval");

  Tensor4 out(1, 1, h, w);
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 2);
  if (!is.read(reinterpret_cast<char*>(buf.data()), buf.size()))
    throw std::runtime_error("read_pgm16: truncated payload");
  const double scale = (range_max - range_min) / 65535.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 2;
      const unsigned q = (static_cast<unsigned>(buf[i]) << 8) | buf[i + 1];
      out.at(0, 0, y, x) = range_min + q * scale;
    }
  }
  return out;
}

}  // namespace dcs
