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
#include "tofu/flops.hpp"

namespace tofu {

FlopReport flops_estimate(const VitConfig& cfg, const ReduceSpec& spec,
                          ReducePlacement placement) {
  cfg.validate();
  if (spec.r < 0) throw InvalidInput("negative reduction count");
  const std::int64_t c = cfg.channels;
  FlopReport report;
  report.patch_embed_flops = static_cast<std::int64_t>(cfg.patches()) * c * 3 *
                             cfg.patch * cfg.patch;
  report.total_flops = report.patch_embed_flops;
  const auto schedule =
      token_schedule(cfg.tokens(), cfg.depth, spec.r, placement);
  for (std::size_t l = 0; l < schedule.size(); ++l) {
    const std::int64_t n = schedule[l].attn, m = schedule[l].mlp;
    FlopReport::Layer layer;
    layer.layer = static_cast<Index>(l);
    layer.attn_tokens = schedule[l].attn;
    layer.mlp_tokens = schedule[l].mlp;
    layer.attn_flops = 4 * n * c * c + 2 * n * n * c;
    layer.mlp_flops = 2 * cfg.mlp_ratio * m * c * c;
    report.total_flops += layer.attn_flops + layer.mlp_flops;
    report.layers.push_back(layer);
  }
  return report;
}

}  // namespace tofu
