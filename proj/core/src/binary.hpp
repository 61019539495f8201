#pragma once

// Little-endian byte packing shared by the columnar cloud format and the
// checkpoint container.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include "shellseg/error.hpp"

namespace shellseg::detail {

template <typename T>
T byteswap_if_big(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    std::reverse(raw, raw + sizeof(T));
    std::memcpy(&value, raw, sizeof(T));
  }
  return value;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    value = byteswap_if_big(value);
    const auto* p = reinterpret_cast<const char*>(&value);
    buffer_.append(p, sizeof(T));
  }

  void put_bytes(std::string_view bytes) { buffer_.append(bytes); }

  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    buffer_.append(s);
  }

  std::string& buffer() { return buffer_; }
  std::string take() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::uint64_t base_offset = 0)
      : bytes_(bytes), base_(base_offset) {}

  template <typename T>
  T get(const char* what) {
    require(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return byteswap_if_big(value);
  }

  std::string_view get_bytes(std::size_t n, const char* what) {
    require(n, what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    return std::string(get_bytes(n, what));
  }

  void require(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated payload reading ") + what, offset());
    }
  }

  std::uint64_t offset() const { return base_ + pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

}  // namespace shellseg::detail
