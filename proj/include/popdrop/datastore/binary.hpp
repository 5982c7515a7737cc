// Copyright 2026 The popdrop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian byte buffers for the binary containers.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/rng.hpp"

namespace popdrop::datastore {

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  // Appends an FNV-1a checksum of everything written so far.
  void seal() { u64(fnv1a64(std::string_view(buf_.data(), buf_.size()))); }

  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string what) : buf_(std::move(data)), what_(std::move(what)) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    std::string_view out(buf_.data() + pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    return std::string(bytes(n));
  }

  void expect_magic(std::string_view magic) {
    require(buf_.size() >= magic.size() && std::string_view(buf_.data(), magic.size()) == magic,
            ErrorCode::parse_error, what_ + ": not a " + std::string(magic) + " container");
    pos_ = magic.size();
  }

  // Verifies and strips the trailing checksum written by ByteWriter::seal.
  void verify_seal() {
    require(buf_.size() >= 8, ErrorCode::parse_error, what_ + ": truncated");
    const std::size_t body = buf_.size() - 8;
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i)
      stored |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[body + i])) << (8 * i);
    require(stored == fnv1a64(std::string_view(buf_.data(), body)), ErrorCode::parse_error,
            what_ + ": checksum mismatch (file corrupted or truncated)");
    buf_.resize(body);
  }

  void expect_end() const {
    require(pos_ == buf_.size(), ErrorCode::parse_error,
            what_ + ": " + std::to_string(buf_.size() - pos_) + " unexpected trailing bytes");
  }

  std::size_t offset() const { return pos_; }

 private:
  void need(std::size_t n) const {
    require(buf_.size() - pos_ >= n, ErrorCode::parse_error,
            what_ + ": unexpected end of data at byte " + std::to_string(pos_));
  }

  std::vector<char> buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open '" + path + "' for reading");
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::string read_text_file(const std::string& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot open '" + path + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  require(static_cast<bool>(out), ErrorCode::io_error, "write to '" + path + "' failed");
}

inline void write_file(const std::string& path, const std::vector<char>& data) {
  write_file(path, std::string_view(data.data(), data.size()));
}

}  // namespace popdrop::datastore
