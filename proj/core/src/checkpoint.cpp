#include "lanedef/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "lanedef/errors.hpp"

namespace lanedef {

namespace {

constexpr std::array<char, 4> kMagic{'L', 'D', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw UsageError("checkpoint: unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  const NetSpec& spec = net.spec();
  os.write(kMagic.data(), kMagic.size());
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(spec.input_dim));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(spec.hidden.size()));
  for (int h : spec.hidden) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(h));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(spec.heads.size()));
  for (int h : spec.heads) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(h));
  write_le<std::uint8_t>(os, spec.value_head ? 1 : 0);
  for (const auto& l : net.params().layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) write_le<double>(os, l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) write_le<double>(os, l.bias(r));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("checkpoint: cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic)
    throw UsageError("checkpoint: bad magic in " + path.string());
  if (const auto v = read_le<std::uint32_t>(is); v != kVersion)
    throw UsageError("checkpoint: unsupported version " + std::to_string(v));

  constexpr std::uint32_t kSane = 1u << 16;
  auto read_count = [&] {
    const auto n = read_le<std::uint32_t>(is);
    if (n > kSane) throw UsageError("checkpoint: implausible dimension");
    return static_cast<int>(n);
  };
  NetSpec spec;
  spec.input_dim = read_count();
  spec.hidden.resize(static_cast<std::size_t>(read_count()));
  for (int& h : spec.hidden) h = read_count();
  spec.heads.resize(static_cast<std::size_t>(read_count()));
  for (int& h : spec.heads) h = read_count();
  spec.value_head = read_le<std::uint8_t>(is) != 0;

  Mlp net(spec);
  for (auto& l : net.params().layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = read_le<double>(is);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = read_le<double>(is);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw UsageError("checkpoint: trailing bytes");
  return net;
}

}  // namespace lanedef
