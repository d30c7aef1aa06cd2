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
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "tofu/random.hpp"
#include "tofu/weights_io.hpp"

using namespace tofu;

namespace {

VitConfig tiny(Index classes = 0) {
  VitConfig cfg;
  cfg.depth = 2;
  cfg.channels = 8;
  cfg.heads = 2;
  cfg.num_classes = classes;
  return cfg;
}

/// Rewrites the TFW1 tensor count or appends bytes, for corrupt-file cases.
std::vector<std::uint8_t> with_count(std::vector<std::uint8_t> bytes,
                                     std::uint32_t count) {
  for (int i = 0; i < 4; ++i) bytes[size_t(4 + i)] = (count >> (8 * i)) & 0xff;
  return bytes;
}

}  // namespace

TEST_CASE("weights round trip bit exact") {
  for (Index classes : {0, 4}) {
    const auto model = random_model<float>(tiny(classes), 13);
    const auto bytes = encode_weights(model);
    CHECK(bytes[0] == 0x54);
    CHECK(bytes[1] == 0x46);
    CHECK(bytes[2] == 0x57);
    CHECK(bytes[3] == 0x31);
    const auto back = decode_weights(bytes);
    CHECK(back == model);
  }
  const auto path = oracle::temp_dir() / "tiny.tfw";
  const auto model = random_model<float>(vit_preset("vit-tiny"), 0);
  save_weights(path, model);
  CHECK(load_weights(path) == model);
}

TEST_CASE("weights reject a wrong magic") {
  auto bytes = encode_weights(random_model<float>(tiny(), 1));
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_weights(bytes), FormatError);
}

TEST_CASE("weights truncation reports the offset") {
  const auto bytes = encode_weights(random_model<float>(tiny(), 1));
  for (std::size_t cut : {std::size_t(2), std::size_t(7), std::size_t(100),
                          bytes.size() - 1}) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + long(cut));
    try {
      decode_weights(part);
      FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
      CHECK(e.byte_offset() <= cut);
      CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
  }
}

TEST_CASE("weights reject trailing bytes and missing tensors") {
  auto bytes = encode_weights(random_model<float>(tiny(), 1));
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_weights(trailing), FormatError);

  // Dropping the count by one makes the reader parse the last tensor's
  // header as the config length.
  CHECK_THROWS_AS(decode_weights(with_count(bytes, 23)), FormatError);
}

TEST_CASE("weights reject shapes that disagree with the config") {
  auto model = random_model<float>(tiny(), 1);
  model.blocks[1].fc1_weight = RowMatrixf::Zero(8, 16);
  CHECK_THROWS_AS(decode_weights(encode_weights(model)), ShapeMismatchError);

  auto headless = random_model<float>(tiny(3), 1);
  headless.head.reset();
  CHECK_THROWS_AS(decode_weights(encode_weights(headless)), ShapeMismatchError);

  auto deeper = random_model<float>(tiny(), 1);
  deeper.blocks.pop_back();
  CHECK_THROWS_AS(decode_weights(encode_weights(deeper)), ShapeMismatchError);
}

TEST_CASE("missing weight file") {
  CHECK_THROWS_AS(load_weights(oracle::temp_dir() / "absent.tfw"), Error);
}
