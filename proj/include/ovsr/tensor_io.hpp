#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovsr/tensor.hpp"

namespace ovsr {

// Binary tensor dump: "OVSRT1", u32 rank (always 4), rank x u32 extents, then
// the payload as little-endian f64 regardless of the in-memory precision.
inline constexpr std::array<char, 6> kTensorMagic{'O', 'V', 'S', 'R', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "tensor dumps assume a little-endian host");

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(kTensorMagic.data(), kTensorMagic.size());
  const std::uint32_t rank = 4;
  os.write(reinterpret_cast<const char*>(&rank), sizeof rank);
  const Shape& s = t.shape();
  for (std::int64_t d : {s.n, s.c, s.h, s.w}) {
    const auto u = static_cast<std::uint32_t>(d);
    os.write(reinterpret_cast<const char*>(&u), sizeof u);
  }
  for (Scalar v : t.data()) {
    const auto f = static_cast<double>(v);
    os.write(reinterpret_cast<const char*>(&f), sizeof f);
  }
  if (!os) throw FormatError("failed writing tensor dump");
}

inline Tensor read_tensor(std::istream& is) {
  std::array<char, 6> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kTensorMagic) throw FormatError("bad tensor magic");
  std::uint32_t rank = 0;
  is.read(reinterpret_cast<char*>(&rank), sizeof rank);
  if (!is || rank != 4) throw FormatError("unsupported tensor rank " + std::to_string(rank));
  std::array<std::uint32_t, 4> dims{};
  is.read(reinterpret_cast<char*>(dims.data()), sizeof dims);
  if (!is) throw FormatError("truncated tensor header");
  const Shape shape{dims[0], dims[1], dims[2], dims[3]};
  std::vector<double> raw(static_cast<std::size_t>(shape.numel()));
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(double)));
  if (!is) throw FormatError("truncated tensor payload");
  return Tensor(shape, std::vector<Scalar>(raw.begin(), raw.end()));
}

inline void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path);
  write_tensor(os, t);
}

inline Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return read_tensor(is);
}

}  // namespace ovsr
