#include "mgnm/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mgnm::ckpt {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'N', 'M'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_le(std::ofstream& f, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& f, const std::string& path) {
  unsigned char buf[sizeof(T)];
  if (!f.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw std::runtime_error(path + ": truncated checkpoint");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_f32(std::ofstream& f, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_le<std::uint32_t>(f, bits);
}

float read_f32(std::ifstream& f, const std::string& path) {
  std::uint32_t bits = read_le<std::uint32_t>(f, path);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void save(const model::ModelParameters& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(kMagic, 4);
  write_le<std::uint16_t>(f, kVersion);
  for (const auto& [name, t] : params.tensors) {
    write_le<std::uint16_t>(f, static_cast<std::uint16_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    f.put(static_cast<char>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) write_le<std::uint32_t>(f, static_cast<std::uint32_t>(t.dim(i)));
    for (std::int64_t i = 0; i < t.size(); ++i) write_f32(f, static_cast<float>(t[i]));
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

model::ModelParameters load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not a model checkpoint");
  const std::uint16_t version = read_le<std::uint16_t>(f, path);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));
  model::ModelParameters params;
  for (;;) {
    int peeked = f.peek();
    if (peeked == std::char_traits<char>::eof()) break;
    const std::uint16_t name_len = read_le<std::uint16_t>(f, path);
    std::string name(name_len, '\0');
    if (!f.read(name.data(), name_len)) throw std::runtime_error(path + ": truncated name");
    const int rank = f.get();
    if (rank < 0 || rank > 8) throw std::runtime_error(path + ": bad tensor rank");
    std::vector<int> shape;
    std::int64_t n = 1;
    for (int i = 0; i < rank; ++i) {
      shape.push_back(static_cast<int>(read_le<std::uint32_t>(f, path)));
      n *= shape.back();
    }
    Tensor t(shape);
    for (std::int64_t i = 0; i < n; ++i) t[i] = static_cast<double>(read_f32(f, path));
    params.tensors[name] = std::move(t);
  }
  if (params.tensors.empty()) throw std::runtime_error(path + ": empty checkpoint");
  return params;
}

}  // namespace mgnm::ckpt
