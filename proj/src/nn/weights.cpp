#include "umri/nn/weights.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "weight serialization assumes a little-endian host");

namespace umri {

namespace {

constexpr char kMagic[6] = {'U', 'M', 'R', 'I', 'W', '1'};

template <typename T>
constexpr std::uint8_t dtype_byte() {
  return sizeof(T) == 4 ? 0 : 1;
}

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open " + path);
    std::error_code ec;
    file_size_ = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("cannot stat " + path);
  }

  std::size_t remaining() const { return file_size_ - offset_; }

  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw FormatError(path_ + ": truncated at byte offset " +
                        std::to_string(offset_ + static_cast<std::size_t>(in_.gcount())));
    offset_ += n;
  }

  template <typename V>
  V read_value() {
    V v;
    read(&v, sizeof(V));
    return v;
  }

  std::size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t offset_ = 0;
};

}  // namespace

template <typename T>
void save_weights(const ModelWeights<T>& weights, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t count = weights.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& [name, entry] : weights.entries()) {
    const std::uint32_t path_len = static_cast<std::uint32_t>(name.size());
    out.write(reinterpret_cast<const char*>(&path_len), sizeof(path_len));
    out.write(name.data(), path_len);
    const auto& shape = entry.tensor.shape();
    const std::uint32_t rank = static_cast<std::uint32_t>(shape.size());
    out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
    for (int d : shape) {
      const std::uint64_t dim = static_cast<std::uint64_t>(d);
      out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    }
    const std::uint8_t frozen = entry.frozen ? 1 : 0;
    const std::uint8_t dtype = dtype_byte<T>();
    out.write(reinterpret_cast<const char*>(&frozen), 1);
    out.write(reinterpret_cast<const char*>(&dtype), 1);
    out.write(reinterpret_cast<const char*>(entry.tensor.data()),
              static_cast<std::streamsize>(entry.tensor.numel() * sizeof(T)));
  }
  if (!out) throw IoError("write failed for " + path);
}

template <typename T>
ModelWeights<T> load_weights(const std::string& path) {
  Reader r(path);
  char magic[6];
  r.read(magic, sizeof(magic));
  if (!std::equal(magic, magic + 6, kMagic))
    throw FormatError(path + ": bad magic, not a weight file");
  const std::uint64_t count = r.template read_value<std::uint64_t>();
  ModelWeights<T> weights;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t path_len = r.template read_value<std::uint32_t>();
    if (path_len > 4096)
      throw FormatError(path + ": implausible path length at byte offset " +
                        std::to_string(r.offset() - sizeof(std::uint32_t)));
    std::string name(path_len, '\0');
    r.read(name.data(), path_len);
    const std::uint32_t rank = r.template read_value<std::uint32_t>();
    if (rank > 8)
      throw FormatError(path + ": implausible rank at byte offset " +
                        std::to_string(r.offset() - sizeof(std::uint32_t)));
    Shape shape(rank);
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint64_t dim = r.template read_value<std::uint64_t>();
      if (dim == 0 || dim > (1ull << 32))
        throw FormatError(path + ": bad dimension at byte offset " +
                          std::to_string(r.offset() - sizeof(std::uint64_t)));
      shape[d] = static_cast<int>(dim);
      numel *= dim;
    }
    const std::uint8_t frozen = r.template read_value<std::uint8_t>();
    const std::uint8_t dtype = r.template read_value<std::uint8_t>();
    if (dtype > 1)
      throw FormatError(path + ": unknown dtype byte at offset " + std::to_string(r.offset() - 1));
    std::vector<T> data(numel);
    if (dtype == dtype_byte<T>()) {
      r.read(data.data(), numel * sizeof(T));
    } else if (dtype == 0) {
      std::vector<float> tmp(numel);
      r.read(tmp.data(), numel * sizeof(float));
      for (std::size_t j = 0; j < numel; ++j) data[j] = static_cast<T>(tmp[j]);
    } else {
      std::vector<double> tmp(numel);
      r.read(tmp.data(), numel * sizeof(double));
      for (std::size_t j = 0; j < numel; ++j) data[j] = static_cast<T>(tmp[j]);
    }
    weights.add(name, std::move(shape), std::move(data), frozen != 0);
  }
  return weights;
}

template void save_weights<float>(const ModelWeights<float>&, const std::string&);
template void save_weights<double>(const ModelWeights<double>&, const std::string&);
template ModelWeights<float> load_weights<float>(const std::string&);
template ModelWeights<double> load_weights<double>(const std::string&);

}  // namespace umri
