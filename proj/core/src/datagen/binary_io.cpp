#include "lily/io.hpp"

#include "lily/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lily::io {
namespace {

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

template <typename T>
void write_array(const std::filesystem::path& path, std::span<const T> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (T v : values) {
    const T le = to_little(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof(T));
  }
  if (!out) throw Error("write failed for " + path.string());
}

template <typename T>
std::vector<T> read_array(const std::filesystem::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw LoadError(LoadError::Kind::kIo, "cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected * sizeof(T)) {
    throw LoadError(LoadError::Kind::kSizeMismatch, path.filename().string() + ": expected " +
                                                        std::to_string(expected * sizeof(T)) + " bytes, found " +
                                                        std::to_string(bytes));
  }
  in.seekg(0);
  std::vector<T> values(expected);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw LoadError(LoadError::Kind::kIo, "read failed for " + path.string());
  for (T& v : values) v = to_little(v);
  return values;
}

}  // namespace

void write_f64(const std::filesystem::path& path, std::span<const double> values) { write_array(path, values); }
void write_i32(const std::filesystem::path& path, std::span<const std::int32_t> values) { write_array(path, values); }

std::vector<double> read_f64(const std::filesystem::path& path, std::size_t expected) {
  return read_array<double>(path, expected);
}
std::vector<std::int32_t> read_i32(const std::filesystem::path& path, std::size_t expected) {
  return read_array<std::int32_t>(path, expected);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadError::Kind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

}  // namespace lily::io
