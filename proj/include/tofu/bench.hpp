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
// Wall-clock comparison of reduction configurations on a seeded model.

#ifndef TOFU_BENCH_HPP_
#define TOFU_BENCH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "tofu/highway.hpp"
#include "tofu/json_io.hpp"
#include "tofu/vit.hpp"

namespace tofu {

struct TimingSummary {
  double median = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Linear-interpolated percentile, q in [0, 1].
double percentile(std::vector<double> samples, double q);
TimingSummary summarize(const std::vector<double>& samples);

/// A named configuration to time. "full", "pruned", "average", "mlerp",
/// "hybrid" (d / mlerp) and "hybrid-average" map to the obvious specs.
struct BenchCase {
  std::string name;
  ReduceSpec spec;
};
BenchCase bench_case(const std::string& name, Index r, Index d, Index depth);

struct BenchOptions {
  VitConfig model;
  Index batch = 8;
  Index repeats = 5;
  Index warmup = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  ReducePlacement placement = ReducePlacement::BeforeMlp;
  bool highway = false;
  MbmConfig mbm;
};

struct BenchRow {
  std::string name;
  ReduceSpec spec;
  TimingSummary ms;
  std::vector<double> samples_ms;
  double tokens_per_sec = 0.0;
  double images_per_sec = 0.0;
  Index final_tokens = 0;
};

struct BenchReport {
  BenchOptions options;
  std::vector<BenchRow> rows;

  const BenchRow& row(const std::string& name) const;
};

/// Repeats are interleaved across cases (rotating the start) so drift in
/// machine state is shared rather than pinned to one configuration.
BenchReport run_bench(const BenchOptions& options,
                      const std::vector<BenchCase>& cases);

Json to_json(const BenchReport& report);

}  // namespace tofu

#endif  // TOFU_BENCH_HPP_
