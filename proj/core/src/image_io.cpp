#include "imgep/image_io.hpp"

#include <array>
#include <bit>
#include <fstream>

#include "imgep/error.hpp"

namespace imgep {

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                        static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::ifstream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw IoError("dataset header truncated: " + path.string());
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_image_dataset(const std::filesystem::path& path, const std::vector<Image>& images) {
  const int h = images.empty() ? 0 : images.front().height();
  const int w = images.empty() ? 0 : images.front().width();
  for (const auto& img : images) {
    if (img.height() != h || img.width() != w) throw ArgumentError("dataset images must share one size");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dataset: " + path.string());
  put_u32(out, kDatasetMagic);
  put_u32(out, static_cast<std::uint32_t>(images.size()));
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(w));
  for (const auto& img : images) {
    auto bytes = img.bytes();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw IoError("dataset write failed: " + path.string());
}

std::vector<Image> read_image_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path.string());
  if (get_u32(in, path) != kDatasetMagic) throw IoError("not an image dataset: " + path.string());
  auto count = get_u32(in, path);
  auto h = static_cast<int>(get_u32(in, path));
  auto w = static_cast<int>(get_u32(in, path));
  std::vector<Image> images;
  images.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Image img(h, w);
    auto bytes = img.bytes();
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
      throw IoError("dataset truncated: " + path.string());
    }
    images.push_back(std::move(img));
  }
  return images;
}

}  // namespace imgep
