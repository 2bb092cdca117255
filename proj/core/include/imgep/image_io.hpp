#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "imgep/render.hpp"

namespace imgep {

// File magic "IMDS" read as a little-endian u32.
inline constexpr std::uint32_t kDatasetMagic = 0x53444D49;

/// Image dataset file: 16-byte little-endian header (u32 magic, u32 count,
/// u32 height, u32 width) followed by count * height * width row-major
/// 8-bit intensities. All images must share one size.
void write_image_dataset(const std::filesystem::path& path, const std::vector<Image>& images);
std::vector<Image> read_image_dataset(const std::filesystem::path& path);

}  // namespace imgep
