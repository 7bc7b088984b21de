#pragma once

// Checkpoint container: magic "SCUT", format version (uint32 LE), tensor
// count (uint32 LE), then per tensor: name length (uint16) + UTF-8 name,
// rank (uint8), dims (uint32 each), float32 little-endian payload.

#include <cstdint>
#include <string>
#include <vector>

namespace semcom::ckpt {

constexpr std::uint32_t kFormatVersion = 1;

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;
};

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

}  // namespace semcom::ckpt
