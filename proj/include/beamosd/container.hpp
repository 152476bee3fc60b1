#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beamosd/common.hpp"

namespace beamosd {

// Named-tensor flat file, used for feature files and checkpoints.
// Layout: magic "BTNS", u32 version = 1, u32 tensor_count, then per tensor:
// u32 name_len, name bytes, u32 ndim, ndim x u64 dims, float32
// little-endian row-major payload.
struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  std::uint64_t size() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

void write_btns(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_btns(const std::string& path);

// Lookup helper; throws DataError when the name is missing.
const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors,
                               const std::string& name);

}  // namespace beamosd
