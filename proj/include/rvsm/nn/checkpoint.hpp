#pragma once

// Binary checkpoint:
//   "RVSM" | u32 version | u32 tensor count
//   per tensor: u32 name length | name | u32 rank | u32 dims[rank]
//   then every tensor's data as little-endian float32, in table order.
// Tensors are named "<layer>.weight" and "<layer>.bias".

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "rvsm/error.hpp"
#include "rvsm/parameters.hpp"

namespace rvsm::nn {

inline constexpr std::array<char, 4> kCheckpointMagic{'R', 'V', 'S', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream& os, double v) {
  put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline double get_f32(std::istream& is) { return std::bit_cast<float>(get_u32(is)); }

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const ParameterSet& params) {
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_u32(os, kCheckpointVersion);
  std::vector<std::pair<std::string, const Tensor*>> table;
  for (const auto& l : params.layers()) {
    table.emplace_back(l.name + ".weight", &l.weight);
    table.emplace_back(l.name + ".bias", &l.bias);
  }
  detail::put_u32(os, static_cast<std::uint32_t>(table.size()));
  for (const auto& [name, t] : table) {
    detail::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(t->rank()));
    for (auto d : t->shape()) detail::put_u32(os, static_cast<std::uint32_t>(d));
  }
  for (const auto& entry : table)
    for (double v : *entry.second) detail::put_f32(os, v);
}

inline ParameterSet read_checkpoint(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kCheckpointMagic)
    throw FormatError("not an RVSM checkpoint (bad magic)");
  const auto version = detail::get_u32(is);
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = detail::get_u32(is);
  if (count % 2 != 0 || count > 4096) throw FormatError("corrupt checkpoint tensor table");
  std::vector<std::pair<std::string, Shape>> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = detail::get_u32(is);
    if (len > 1024) throw FormatError("corrupt checkpoint tensor name");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw FormatError("checkpoint truncated");
    const auto rank = detail::get_u32(is);
    if (rank == 0 || rank > 8) throw FormatError("corrupt checkpoint tensor rank in " + name);
    Shape shape(rank);
    for (auto& d : shape) {
      d = detail::get_u32(is);
      if (d == 0) throw FormatError("zero dimension in checkpoint tensor " + name);
    }
    table.emplace_back(std::move(name), std::move(shape));
  }
  std::vector<LayerParameters> layers;
  for (std::size_t i = 0; i < table.size(); i += 2) {
    const auto& [wname, wshape] = table[i];
    const auto& [bname, bshape] = table[i + 1];
    const auto suffix = std::string(".weight");
    if (wname.size() <= suffix.size() || wname.compare(wname.size() - suffix.size(), suffix.size(), suffix) != 0)
      throw FormatError("expected a weight tensor, found " + wname);
    const std::string layer = wname.substr(0, wname.size() - suffix.size());
    if (bname != layer + ".bias") throw FormatError("expected " + layer + ".bias, found " + bname);
    layers.push_back({layer, Tensor(wshape), Tensor(bshape)});
  }
  for (auto& l : layers) {
    for (double& v : l.weight) v = detail::get_f32(is);
    for (double& v : l.bias) v = detail::get_f32(is);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint data");
  return ParameterSet(std::move(layers));
}

inline void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(os, params);
  if (!os) throw IoError("failed writing checkpoint " + path.string());
}

inline ParameterSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint " + path.string());
  return read_checkpoint(is);
}

/// Copies checkpoint tensors into `params`, requiring identical names and shapes.
inline void assign_parameters(ParameterSet& params, const ParameterSet& loaded) {
  if (loaded.layers().size() != params.layers().size())
    throw FormatError("checkpoint has " + std::to_string(loaded.layers().size()) +
                      " layers, network has " + std::to_string(params.layers().size()));
  for (std::size_t i = 0; i < loaded.layers().size(); ++i) {
    auto& dst = params.layers()[i];
    const auto& src = loaded.layers()[i];
    if (dst.name != src.name || !dst.weight.same_shape(src.weight) || !dst.bias.same_shape(src.bias))
      throw FormatError("checkpoint layer " + src.name + " does not match network layer " + dst.name);
    dst.weight = src.weight;
    dst.bias = src.bias;
  }
}

}  // namespace rvsm::nn
