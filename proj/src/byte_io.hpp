/*
 * Copyright 2026 The ToFu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// Little-endian cursor helpers shared by the TTF1 and TFW1 codecs.

#ifndef TOFU_SRC_BYTE_IO_HPP_
#define TOFU_SRC_BYTE_IO_HPP_

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tofu/errors.hpp"

namespace tofu::detail {

static_assert(std::endian::native == std::endian::little,
              "byte codecs assume a little-endian host");

class ByteWriter {
 public:
  void bytes(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f32s(std::span<const float> v) { raw(v.data(), v.size_bytes()); }
  void text(std::string_view s) { raw(s.data(), s.size()); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint16_t u16() {
    std::uint16_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::vector<float> f32s(std::size_t count) {
    need(count * sizeof(float));
    std::vector<float> v(count);
    raw(v.data(), count * sizeof(float));
    return v;
  }
  std::string text(std::size_t n) {
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  void expect_magic(std::string_view magic) {
    const std::size_t have = std::min(bytes_.size(), magic.size());
    if (std::memcmp(bytes_.data(), magic.data(), have) != 0) {
      throw FormatError(what_ + ": bad magic, expected \"" +
                        std::string(magic) + "\"");
    }
    if (have < magic.size()) {
      throw TruncationError(what_ + ": file ends inside the magic number",
                            bytes_.size());
    }
    pos_ = magic.size();
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw TruncationError(what_ + ": needed " + std::to_string(n) +
                                " bytes at offset " + std::to_string(pos_) +
                                " of a " + std::to_string(bytes_.size()) +
                                "-byte file",
                            pos_);
    }
  }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

}  // namespace tofu::detail

#endif  // TOFU_SRC_BYTE_IO_HPP_
