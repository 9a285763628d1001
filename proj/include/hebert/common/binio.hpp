#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "hebert/common/error.hpp"

namespace hebert {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

/// Append-only little-endian byte sink.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  void put_bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void put_magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_array(std::span<const T> xs) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(xs.data());
    buf_.insert(buf_.end(), p, p + xs.size_bytes());
  }

  void put_blob(std::span<const std::uint8_t> b) {
    put<std::uint64_t>(b.size());
    put_bytes(b);
  }

  std::vector<std::uint8_t>& bytes() { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader. Truncation raises a Format error
/// tagged with the owning module.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string module)
      : data_(data), module_(std::move(module)) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::memcmp(data_.data() + pos_, m.data(), m.size()) != 0)
      fail(module_, ErrorCode::Format, "bad magic, expected " + std::string(m));
    pos_ += m.size();
  }

  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void get_array(std::span<T> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  }

  std::span<const std::uint8_t> get_blob() { return get_bytes(static_cast<std::size_t>(get<std::uint64_t>())); }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(module_, ErrorCode::Format, "truncated input");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string module_;
};

std::vector<std::uint8_t> read_file(const std::string& path, std::string_view module);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes, std::string_view module);

}  // namespace hebert
