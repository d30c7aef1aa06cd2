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
#include <cmath>

#include "doctest.h"
#include "tofu/flops.hpp"

using namespace tofu;

namespace {

double gflops(const char* arch, Index r,
              ReducePlacement placement = ReducePlacement::BeforeMlp) {
  ReduceSpec spec;
  spec.r = r;
  return flops_estimate(vit_preset(arch), spec, placement).total_gflops();
}

bool within(double got, double want, double rel) {
  return std::abs(got - want) <= rel * want;
}

}  // namespace

TEST_CASE("vit-b16 table values") {
  CHECK(within(gflops("vit-b16", 0), 17.58, 0.02));
  CHECK(within(gflops("vit-b16", 8), 13.12, 0.03));
  CHECK(within(gflops("vit-b16", 12), 10.93, 0.03));
  CHECK(within(gflops("vit-b16", 16), 8.78, 0.03));
  CHECK(within(gflops("vit-b16", 20), 7.14, 0.03));
}

TEST_CASE("vit-l16 table values") {
  CHECK(within(gflops("vit-l16", 0), 61.60, 0.02));
  CHECK(within(gflops("vit-l16", 8), 30.99, 0.03));
}

TEST_CASE("unreduced vit-b16 count by hand") {
  ReduceSpec spec;
  const auto rep = flops_estimate(vit_preset("vit-b16"), spec);
  const std::int64_t n = 197, c = 768;
  const std::int64_t per_layer = 4 * n * c * c + 2 * n * n * c + 8 * n * c * c;
  const std::int64_t embed = 196 * c * 3 * 16 * 16;
  CHECK(rep.patch_embed_flops == embed);
  CHECK(rep.total_flops == embed + 12 * per_layer);
}

TEST_CASE("flops fall strictly with r until the schedule saturates") {
  double prev = gflops("vit-b16", 0);
  for (Index r = 1; r <= 98; ++r) {
    const double cur = gflops("vit-b16", r);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(gflops("vit-b16", 98) == gflops("vit-b16", 500));
}

TEST_CASE("report is additive over layers") {
  ReduceSpec spec;
  spec.r = 13;
  for (auto placement : {ReducePlacement::BeforeMlp, ReducePlacement::BeforeAttn}) {
    const auto rep = flops_estimate(vit_preset("vit-s16"), spec, placement);
    std::int64_t sum = rep.patch_embed_flops;
    for (const auto& l : rep.layers) sum += l.attn_flops + l.mlp_flops;
    CHECK(sum == rep.total_flops);
    CHECK(rep.layers.size() == 12);
  }
}

TEST_CASE("before-attn reduces both modules") {
  ReduceSpec spec;
  spec.r = 16;
  const auto rep =
      flops_estimate(vit_preset("vit-b16"), spec, ReducePlacement::BeforeAttn);
  for (const auto& l : rep.layers) {
    CHECK(l.attn_tokens == 181);
    CHECK(l.mlp_tokens == 181);
  }
  CHECK(gflops("vit-b16", 16, ReducePlacement::BeforeAttn) <
        gflops("vit-b16", 0));
}

TEST_CASE("flops input checks") {
  ReduceSpec spec;
  spec.r = -1;
  CHECK_THROWS_AS(flops_estimate(vit_preset("vit-b16"), spec), InvalidInput);
  VitConfig cfg = vit_preset("vit-b16");
  cfg.heads = 5;
  CHECK_THROWS_AS(flops_estimate(cfg, ReduceSpec{}), InvalidInput);
}
