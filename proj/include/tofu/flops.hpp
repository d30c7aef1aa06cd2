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
// Analytical cost of a ViT forward, counting one multiply-accumulate as one
// FLOP. Per layer, with n tokens entering ATTN and m entering the MLP:
//
//   attn = 4 n C^2 + 2 n^2 C      (qkv + proj, then QK^T and AV)
//   mlp  = 2 ratio m C^2
//
// plus the patch embedding, patches * C * 3 * patch^2. Norms, softmax,
// the classifier and the reduce itself are not counted.

#ifndef TOFU_FLOPS_HPP_
#define TOFU_FLOPS_HPP_

#include <cstdint>
#include <vector>

#include "tofu/vit.hpp"

namespace tofu {

struct FlopReport {
  struct Layer {
    Index layer = 0;
    Index attn_tokens = 0;
    Index mlp_tokens = 0;
    std::int64_t attn_flops = 0;
    std::int64_t mlp_flops = 0;
    friend bool operator==(const Layer&, const Layer&) = default;
  };
  std::vector<Layer> layers;
  std::int64_t patch_embed_flops = 0;
  std::int64_t total_flops = 0;

  double total_gflops() const { return static_cast<double>(total_flops) / 1e9; }
  friend bool operator==(const FlopReport&, const FlopReport&) = default;
};

FlopReport flops_estimate(const VitConfig& cfg, const ReduceSpec& spec,
                          ReducePlacement placement = ReducePlacement::BeforeMlp);

}  // namespace tofu

#endif  // TOFU_FLOPS_HPP_
