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
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tofu/highway.hpp"
#include "tofu/random.hpp"

using namespace tofu;

namespace {

VitConfig small_config(Index depth, Index channels = 8, Index heads = 2) {
  VitConfig cfg;
  cfg.depth = depth;
  cfg.channels = channels;
  cfg.heads = heads;
  return cfg;
}

RowMatrixf four_tokens() {
  RowMatrixf x(4, 2);
  x << 0.0f, 1.0f, 1.0f, 0.0f, 0.05f, 0.95f, 0.04f, 0.96f;
  return x;
}

}  // namespace

TEST_CASE("index starts as identity") {
  const auto idx = LocalPathIndex::identity(4);
  CHECK(idx.map == std::vector<Index>{0, 1, 2, 3});
  CHECK(idx.local_tokens == 4);
  CHECK(idx.full_tokens() == 4);
}

TEST_CASE("index after one merge") {
  const RowMatrixf x = four_tokens();
  const auto red = apply_reduce(x, x, MergeMethod::Average, 1, false);
  const auto idx = update_index(LocalPathIndex::identity(4), red.trace);
  CHECK(idx.local_tokens == 3);
  CHECK(idx.map[2] == idx.map[3]);
  CHECK(idx.map == red.trace.output_index_of_input);

  const RowMatrixf full = distribute(red.reduced, idx);
  CHECK(full.row(2) == full.row(3));
  CHECK(full.row(0) == x.row(0));
  CHECK(full.row(1) == x.row(1));

  const auto merged = merged_positions(idx);
  CHECK(merged == std::vector<bool>{false, false, true, true});

  CHECK_THROWS_AS(update_index(idx, red.trace), InvalidInput);
}

TEST_CASE("distribute examples") {
  RowMatrixf local(3, 2);
  local << 1, 2, 3, 4, 5, 6;
  CHECK(distribute(local, LocalPathIndex::identity(3)) == local);
  LocalPathIndex idx;
  idx.map = {0, 1, 2, 2};
  idx.local_tokens = 3;
  const RowMatrixf full = distribute(local, idx);
  CHECK(full.rows() == 4);
  CHECK(full.row(3) == local.row(2));
  idx.map = {0, 1, 3, 2};
  CHECK_THROWS_AS(distribute(local, idx), InvalidInput);

  std::mt19937 rng(2);
  const RowMatrixf x = oracle::random_matrix(rng, 9, 3);
  const auto red = apply_reduce(x, x, MergeMethod::Average, 0, true);
  CHECK(distribute(red.reduced, update_index(LocalPathIndex::identity(9), red.trace)) == x);
}

TEST_CASE("index composition equals brute force") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<Index> nd(2, 16), kd(1, 4);
    const Index n = nd(rng);
    RowMatrixf local = oracle::random_matrix(rng, n, 3);
    auto idx = LocalPathIndex::identity(n);
    std::vector<ReduceTrace> chain;
    const Index steps = kd(rng);
    for (Index k = 0; k < steps && local.rows() >= 2; ++k) {
      std::uniform_int_distribution<Index> rd(0, local.rows() / 2);
      const auto red = apply_reduce(local, local, MergeMethod::Average, rd(rng),
                                    trial % 2 == 0);
      idx = update_index(idx, red.trace);
      chain.push_back(red.trace);
      local = red.reduced;
    }
    CHECK(idx.map == oracle::compose_traces(n, chain));
    CHECK(idx.local_tokens == local.rows());
  }
}

TEST_CASE("mbm mask rule") {
  RowMatrixf full(3, 2);
  full << 0.5, -2, 1, 1, 5, 0.5;
  MbmConfig cfg;
  cfg.enabled = true;
  cfg.threshold = 1.0;
  const auto m = mbm_mask(full, {false, false, true}, cfg);
  CHECK(m.row(0) == RowMatrixf::Ones(1, 2));
  CHECK(m.row(1) == RowMatrixf::Ones(1, 2));
  CHECK(m(2, 0) == 0.0f);
  CHECK(m(2, 1) == 1.0f);

  cfg.threshold = std::numeric_limits<double>::infinity();
  CHECK(mbm_mask(full, {true, true, true}, cfg) == RowMatrixf::Ones(3, 2));

  cfg.threshold = 0.0;
  RowMatrixf z(2, 2);
  z << 0, 1, -1, 0;
  CHECK(mbm_mask(z, {true, true}, cfg) == RowMatrixf::Zero(2, 2));
  cfg.threshold = 1.0;
  RowMatrixf expect(2, 2);
  expect << 1, 0, 0, 1;
  CHECK(mbm_mask(z, {true, true}, cfg) == expect);

  cfg.threshold = -1.0;
  CHECK_THROWS_AS(mbm_mask(z, {true, true}, cfg), InvalidInput);
  CHECK_THROWS_AS(mbm_mask(z, {true}, MbmConfig{}), DimensionError);
}

TEST_CASE("highway with r = 0 is the plain stack") {
  const auto model = random_model<float>(small_config(3), 3);
  const auto x = random_tokens<float>(2, 13, 8, 4);
  ReduceSpec spec;
  spec.d = 3;
  const auto plain = forward(x, model, spec);
  const auto high = highway_forward(x, model, spec);
  CHECK(plain.tokens == high.tokens);
  for (Index c : high.token_counts) CHECK(c == 13);
}

TEST_CASE("one merged layer gives merged positions the same update") {
  const auto model = random_model<double>(small_config(1), 5);
  const RowMatrixd x = random_tokens<double>(1, 12, 8, 6).item(0);
  LayerPlan plan;
  plan.r = 3;
  plan.method = MergeMethod::Average;
  const auto out = highway_block(HighwayState<double>::start(x),
                                 model.blocks[0], 2, plan);
  REQUIRE(out.trace);
  const auto& m = out.trace->match;
  // Positions merged into the same row share the MLP update but started
  // from different post-attention values, so compare the MLP increment.
  const RowMatrixd after_attn =
      x + attention(layernorm_rows(x, model.blocks[0].norm1_gamma,
                                   model.blocks[0].norm1_beta),
                    model.blocks[0], 2)
              .out;
  const RowMatrixd delta = out.state.full - after_attn;
  for (std::size_t k = 0; k < m.idx_src.size(); ++k) {
    CHECK((delta.row(m.idx_src[k]) - delta.row(m.idx_dst[k])).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(out.state.local.rows() == 9);
  CHECK(out.state.full.rows() == 12);
}

TEST_CASE("stacked highway equals the naive oracle") {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<Index> nd(4, 16), ld(1, 3);
    const Index n = nd(rng), depth = ld(rng);
    const auto model = random_model<double>(small_config(depth), 100 + trial);
    const RowMatrixd x = random_tokens<double>(1, n, 8, 200 + trial).item(0);
    ReduceSpec spec;
    spec.r = std::uniform_int_distribution<Index>(1, n / 2)(rng);
    spec.d = std::uniform_int_distribution<Index>(1, depth)(rng);
    spec.late_method = MergeMethod::Average;
    spec.protect_cls = trial % 3 != 0;
    const auto res =
        highway_forward(TokenTensor<double>::from_item(x), model, spec);

    std::vector<Index> rs;
    std::vector<MergeMethod> methods;
    Index cur = n;
    for (Index l = 0; l < depth; ++l) {
      rs.push_back(std::min(spec.r, max_reduction(cur)));
      cur -= rs.back();
      methods.push_back(select_method(l, spec));
    }
    const RowMatrixd expect =
        oracle::naive_highway(x, model, rs, methods, spec.protect_cls);
    CHECK((res.tokens.item(0) - expect).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("mbm with infinite threshold is a no-op") {
  const auto model = random_model<float>(small_config(3), 8);
  const auto x = random_tokens<float>(2, 16, 8, 9);
  ReduceSpec spec;
  spec.r = 4;
  spec.d = 2;
  MbmConfig off, inf;
  inf.enabled = true;
  inf.threshold = std::numeric_limits<double>::infinity();
  CHECK(highway_forward(x, model, spec, {}, off).tokens ==
        highway_forward(x, model, spec, {}, inf).tokens);

  MbmConfig tight;
  tight.enabled = true;
  tight.threshold = 0.0;
  CHECK_FALSE(highway_forward(x, model, spec, {}, off).tokens ==
              highway_forward(x, model, spec, {}, tight).tokens);
}

TEST_CASE("highway keeps the full length and tracks the local one") {
  const auto model = random_model<float>(small_config(4), 8);
  const auto x = random_tokens<float>(3, 32, 8, 9);
  ReduceSpec spec;
  spec.r = 6;
  spec.d = 2;
  for (auto placement : {ReducePlacement::BeforeMlp, ReducePlacement::BeforeAttn}) {
    ForwardOptions opts;
    opts.placement = placement;
    opts.threads = 2;
    const auto res = highway_forward(x, model, spec, opts);
    CHECK(res.tokens.tokens() == 32);
    CHECK(res.token_counts == std::vector<Index>{26, 20, 14, 8});
    CHECK(res.tokens.all_finite());
  }
}
