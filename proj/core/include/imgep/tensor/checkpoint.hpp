#pragma once

#include <filesystem>
#include <vector>

#include "imgep/tensor/tensor.hpp"

namespace imgep::tensor {

// File magic "IMGC" read as a little-endian u32.
inline constexpr std::uint32_t kCheckpointMagic = 0x43474D49;

/// Little-endian checkpoint:
///   u32 magic, u32 tensor_count,
///   per tensor: u32 rank, u64 dims[rank], f64 values[prod(dims)].
/// Float tensors are widened to f64 on write.
template <typename T>
void write_checkpoint(const std::filesystem::path& path, const std::vector<Tensor<T>>& tensors);

template <typename T>
std::vector<Tensor<T>> read_checkpoint(const std::filesystem::path& path);

}  // namespace imgep::tensor
