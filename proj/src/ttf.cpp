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
#include "tofu/ttf.hpp"

#include <fstream>
#include <iterator>

#include "byte_io.hpp"

namespace tofu {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

}  // namespace detail

std::vector<std::uint8_t> encode_ttf(std::span<const std::uint32_t> dims,
                                     std::span<const float> data) {
  if (dims.size() > 255) throw InvalidInput("TTF1 supports at most 255 dims");
  std::size_t count = 1;
  for (auto d : dims) count *= d;
  if (count != data.size()) {
    throw DimensionError("TTF1 payload of " + std::to_string(data.size()) +
                         " values does not match its dims");
  }
  detail::ByteWriter w;
  w.text("TTF1");
  w.u8(static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) w.u32(d);
  w.f32s(data);
  return w.take();
}

DenseArray decode_ttf(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "TTF1");
  r.expect_magic("TTF1");
  DenseArray out;
  const std::uint8_t ndim = r.u8();
  std::size_t count = 1;
  for (std::uint8_t i = 0; i < ndim; ++i) {
    const std::uint32_t d = r.u32();
    if (d != 0 && count > bytes.size() / d) {
      throw TruncationError("TTF1: dims describe more data than the " +
                                std::to_string(bytes.size()) + "-byte file",
                            r.position());
    }
    out.dims.push_back(d);
    count *= d;
  }
  out.data = r.f32s(count);
  if (r.remaining() != 0) {
    throw FormatError("TTF1: " + std::to_string(r.remaining()) +
                      " trailing bytes after payload at byte " +
                      std::to_string(r.position()));
  }
  return out;
}

TokenTensorf to_token_tensor(const DenseArray& array) {
  if (array.dims.size() == 2) {
    return TokenTensorf(1, array.dims[0], array.dims[1], array.data);
  }
  if (array.dims.size() == 3) {
    return TokenTensorf(array.dims[0], array.dims[1], array.dims[2],
                        array.data);
  }
  throw DimensionError("token tensor must have rank 2 or 3, got rank " +
                       std::to_string(array.dims.size()));
}

std::vector<std::uint8_t> encode_ttf(const TokenTensorf& tensor) {
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(tensor.batch()),
                                 static_cast<std::uint32_t>(tensor.tokens()),
                                 static_cast<std::uint32_t>(tensor.channels())};
  return encode_ttf(dims, tensor.data());
}

void write_ttf(const std::filesystem::path& path, const TokenTensorf& tensor) {
  detail::write_file(path, encode_ttf(tensor));
}

TokenTensorf read_ttf(const std::filesystem::path& path) {
  return to_token_tensor(decode_ttf(detail::read_file(path)));
}

}  // namespace tofu
