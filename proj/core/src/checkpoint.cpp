#include "imgep/tensor/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "imgep/error.hpp"

namespace imgep::tensor {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename U>
void put(std::ofstream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U get(std::ifstream& in, const std::filesystem::path& path) {
  U v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(U))) throw IoError("checkpoint truncated: " + path.string());
  return v;
}

}  // namespace

template <typename T>
void write_checkpoint(const std::filesystem::path& path, const std::vector<Tensor<T>>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  put<std::uint32_t>(out, kCheckpointMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    for (T v : t.values()) put<double>(out, static_cast<double>(v));
  }
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

template <typename T>
std::vector<Tensor<T>> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  if (get<std::uint32_t>(in, path) != kCheckpointMagic) throw IoError("not a checkpoint file: " + path.string());
  auto count = get<std::uint32_t>(in, path);
  std::vector<Tensor<T>> tensors;
  tensors.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    auto rank = get<std::uint32_t>(in, path);
    if (rank > 8) throw IoError("checkpoint tensor rank too large: " + path.string());
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(in, path));
    std::size_t n = element_count(shape);
    std::vector<T> values(n);
    for (auto& v : values) v = static_cast<T>(get<double>(in, path));
    tensors.emplace_back(std::move(shape), std::move(values));
  }
  return tensors;
}

template void write_checkpoint(const std::filesystem::path&, const std::vector<Tensor<float>>&);
template void write_checkpoint(const std::filesystem::path&, const std::vector<Tensor<double>>&);
template std::vector<Tensor<float>> read_checkpoint(const std::filesystem::path&);
template std::vector<Tensor<double>> read_checkpoint(const std::filesystem::path&);

}  // namespace imgep::tensor
