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
// TTF1 token tensor files: magic "TTF1", u8 ndim, ndim little-endian u32
// extents, then the row-major little-endian f32 payload. Nothing may follow
// the payload.

#ifndef TOFU_TTF_HPP_
#define TOFU_TTF_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tofu/tensor.hpp"

namespace tofu {

struct DenseArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

std::vector<std::uint8_t> encode_ttf(std::span<const std::uint32_t> dims,
                                     std::span<const float> data);
DenseArray decode_ttf(std::span<const std::uint8_t> bytes);

/// Rank-2 arrays load as a batch of one; any other rank besides 3 is rejected.
TokenTensorf to_token_tensor(const DenseArray& array);

std::vector<std::uint8_t> encode_ttf(const TokenTensorf& tensor);

void write_ttf(const std::filesystem::path& path, const TokenTensorf& tensor);
TokenTensorf read_ttf(const std::filesystem::path& path);

}  // namespace tofu

#endif  // TOFU_TTF_HPP_
