// fuseid/binio.hpp

// Copyright 2026  The Fuseid Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef FUSEID_BINIO_HPP_
#define FUSEID_BINIO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "fuseid/common.hpp"

// All container formats in this project are little-endian on disk.
// Scalars are copied bytewise; on a big-endian host they are byte-swapped.

namespace fuseid {

static_assert(sizeof(float) == 4, "IEEE-754 binary32 float required");

namespace detail {

template <typename T>
inline T byteswap_if_needed(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char* bytes = reinterpret_cast<unsigned char*>(&value);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    return value;
  }
}

}  // namespace detail

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_)
      throw Error(ErrorCode::kIo, Msg() << "cannot open for writing: " << path);
  }

  template <typename T>
  void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    value = detail::byteswap_if_needed(value);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void put_bytes(const void* data, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
  }

  void put_string(const std::string& s) { put_bytes(s.data(), s.size()); }

  void put_floats(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      put_bytes(values.data(), values.size() * sizeof(float));
    } else {
      for (float v : values) put(v);
    }
  }

  // Flushes and reports any stream failure. Call before relying on the file.
  void close() {
    out_.close();
    if (!out_)
      throw Error(ErrorCode::kIo, Msg() << "write failed: " << path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_)
      throw Error(ErrorCode::kIo, Msg() << "cannot open for reading: " << path);
  }

  template <typename T>
  T get() {
    static_assert(std::is_arithmetic_v<T>);
    T value;
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    check_read(sizeof(T));
    return detail::byteswap_if_needed(value);
  }

  void get_bytes(void* data, std::size_t n) {
    in_.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n));
    check_read(n);
  }

  std::string get_string(std::size_t n) {
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }

  void get_floats(std::span<float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      get_bytes(values.data(), values.size() * sizeof(float));
    } else {
      for (float& v : values) v = get<float>();
    }
  }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

  const std::string& path() const { return path_; }

 private:
  void check_read(std::size_t wanted) {
    if (in_.gcount() != static_cast<std::streamsize>(wanted) || in_.fail())
      throw Error(ErrorCode::kFormat,
                  Msg() << "truncated file: " << path_);
  }

  std::string path_;
  std::ifstream in_;
};

}  // namespace fuseid

#endif  // FUSEID_BINIO_HPP_
