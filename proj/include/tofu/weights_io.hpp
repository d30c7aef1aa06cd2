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
// TFW1 weight files:
//
//   "TFW1"  u32 tensor count
//   per tensor: u16 name length, UTF-8 name, u8 ndim, ndim x u32, f32 payload
//   u32 config length, config JSON
//
// All integers and floats little-endian. Block tensors are named
// blocks.{l}.{attn.qkv,attn.proj,mlp.fc1,mlp.fc2}.{weight,bias} and
// blocks.{l}.{norm1,norm2}.{gamma,beta}; an optional classifier adds
// norm.gamma, norm.beta, head.weight and head.bias. Weights are stored
// input-major (in_features x out_features).

#ifndef TOFU_WEIGHTS_IO_HPP_
#define TOFU_WEIGHTS_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tofu/vit.hpp"

namespace tofu {

std::vector<std::uint8_t> encode_weights(const VitModel<float>& model);
VitModel<float> decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const std::filesystem::path& path,
                  const VitModel<float>& model);
VitModel<float> load_weights(const std::filesystem::path& path);

}  // namespace tofu

#endif  // TOFU_WEIGHTS_IO_HPP_
