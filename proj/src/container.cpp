#include "beamosd/container.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace beamosd {

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ofstream& f, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(f, bits);
}

std::uint32_t get_u32(std::ifstream& f, const std::string& what) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw DataError("read_btns: truncated file reading " + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::ifstream& f, const std::string& what) {
  std::uint64_t lo = get_u32(f, what);
  std::uint64_t hi = get_u32(f, what);
  return lo | (hi << 32);
}

}  // namespace

void write_btns(const std::string& path, const std::vector<NamedTensor>& tensors) {
  for (const auto& t : tensors) {
    require(!t.name.empty(), "write_btns: tensor needs a name");
    require(!t.dims.empty(), "write_btns: tensor needs dimensions");
    require(t.size() == t.data.size(),
            "write_btns: '" + t.name + "' dims do not match payload size");
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("write_btns: cannot open " + path);
  f.write("BTNS", 4);
  put_u32(f, 1);
  put_u32(f, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(f, static_cast<std::uint32_t>(t.name.size()));
    f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(f, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u64(f, d);
    for (float v : t.data) put_f32(f, v);
  }
  if (!f) throw DataError("write_btns: write failed for " + path);
}

std::vector<NamedTensor> read_btns(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_btns: cannot open " + path);
  f.seekg(0, std::ios::end);
  const std::uint64_t file_size = static_cast<std::uint64_t>(f.tellg());
  f.seekg(0, std::ios::beg);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "BTNS", 4) != 0)
    throw DataError("read_btns: " + path + " is not a BTNS file");
  const std::uint32_t version = get_u32(f, "version");
  if (version != 1)
    throw DataError("read_btns: unsupported version " + std::to_string(version));
  const std::uint32_t count = get_u32(f, "tensor count");

  std::vector<NamedTensor> tensors(count);
  for (auto& t : tensors) {
    const std::uint32_t name_len = get_u32(f, "name length");
    t.name.resize(name_len);
    if (!f.read(t.name.data(), name_len))
      throw DataError("read_btns: truncated file reading a tensor name");
    const std::uint32_t ndim = get_u32(f, "ndim of " + t.name);
    if (ndim < 1 || ndim > 8)
      throw DataError("read_btns: implausible ndim for " + t.name);
    t.dims.resize(ndim);
    std::uint64_t total = 1;
    for (auto& d : t.dims) {
      d = get_u64(f, "dims of " + t.name);
      if (d == 0 || total > std::numeric_limits<std::uint64_t>::max() / d)
        throw DataError("read_btns: bad dimensions for " + t.name);
      total *= d;
    }
    // Validate against the file length before allocating anything; a header
    // must not be able to demand more memory than the file can back.
    if (total > file_size / 4)
      throw DataError("read_btns: truncated file reading payload of " + t.name);
    t.data.resize(total);
    for (auto& v : t.data) {
      const std::uint32_t bits = get_u32(f, "payload of " + t.name);
      std::memcpy(&v, &bits, 4);
    }
  }
  return tensors;
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors,
                               const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw DataError("find_tensor: no tensor named '" + name + "'");
}

}  // namespace beamosd
